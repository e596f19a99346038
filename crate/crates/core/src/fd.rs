//! Central finite differences on uniformly sampled sequences.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Samples consumed on each side by one application of [`five_point`].
pub const HALF_WIDTH: usize = 2;

/// Fourth-order central derivative at `i` with sample spacing `h·stride`.
pub fn five_point(values: &[DVector<f64>], i: usize, h: f64, stride: usize) -> DVector<f64> {
    let k = stride;
    let (m2, m1, p1, p2) = (&values[i - 2 * k], &values[i - k], &values[i + k], &values[i + 2 * k]);
    (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h * k as f64)
}

/// Spacing of a uniform grid, or an error if the grid is not uniform.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: times.len(),
        });
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidGrid("times are not increasing".into()));
    }
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        if (dt - h).abs() > 1e-6 * h {
            return Err(Error::InvalidGrid(format!(
                "spacing {dt} deviates from the mean spacing {h}"
            )));
        }
    }
    Ok(h)
}
