//! Numerical Frenet apparatus along a sampled trajectory.
//!
//! Each differentiation level uses a five-point central stencil on the
//! trajectory's own grid, so two samples (times the stride) are trimmed from
//! each end per level. Covariant derivatives along the curve are the stencil
//! derivative of the coordinate components plus the Christoffel term.

use nalgebra::DVector;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::fd;
use crate::model_space::{ModelSpace, Tangent};

/// Below this `κ₁` the curve is treated as a geodesic and no normal is built.
pub const GEODESIC_EPS: f64 = 1e-9;
/// Below this `κ₂` (`κ₃`) no `v₃` (`v₄`) is built; FD noise sits far below it.
pub const FRAME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetOptions {
    pub geodesic_eps: f64,
    pub frame_eps: f64,
    /// Requested differentiation step; rounded to a whole number of grid steps.
    pub fd_step_hint: Option<f64>,
}

impl Default for FrenetOptions {
    fn default() -> Self {
        Self {
            geodesic_eps: GEODESIC_EPS,
            frame_eps: FRAME_EPS,
            fd_step_hint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrenetSeries {
    pub times: Vec<f64>,
    pub kappa1: Vec<Option<f64>>,
    pub kappa2: Vec<Option<f64>>,
    pub kappa3: Vec<Option<f64>>,
    /// `v_1 = T, v_2, v_3, v_4` where defined.
    pub frames: Vec<Vec<Tangent>>,
    pub defined_order: Vec<usize>,
}

impl FrenetSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Median of `κ_level` over time (`level` in 1..=3); undefined values count as 0.
    pub fn median_kappa(&self, level: usize) -> f64 {
        let values = match level {
            1 => &self.kappa1,
            2 => &self.kappa2,
            3 => &self.kappa3,
            _ => return 0.0,
        };
        median(values.iter().map(|k| k.unwrap_or(0.0)).collect())
    }

    pub fn max_kappa(&self, level: usize) -> f64 {
        let values = match level {
            1 => &self.kappa1,
            2 => &self.kappa2,
            3 => &self.kappa3,
            _ => return 0.0,
        };
        values.iter().map(|k| k.unwrap_or(0.0)).fold(0.0, f64::max)
    }
}

pub(crate) fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

pub fn frenet_apparatus(traj: &Trajectory, fd_step_hint: Option<f64>) -> Result<FrenetSeries> {
    frenet_apparatus_with(
        traj,
        &FrenetOptions {
            fd_step_hint,
            ..FrenetOptions::default()
        },
    )
}

pub fn frenet_apparatus_with(traj: &Trajectory, opts: &FrenetOptions) -> Result<FrenetSeries> {
    const MIN_SAMPLES: usize = 5;
    if traj.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: traj.len(),
        });
    }
    let h = fd::uniform_step(&traj.times)?;
    let stride = match opts.fd_step_hint {
        Some(hint) if hint.is_finite() && hint > 0.0 => ((hint / h).round() as usize).max(1),
        Some(hint) => return Err(Error::invalid(format!("fd step hint must be positive, got {hint}"))),
        None => 1,
    };
    let trim = fd::HALF_WIDTH * stride;
    let n = traj.len();
    if n < 6 * trim + 1 {
        return Err(Error::InsufficientData {
            needed: 6 * trim + 1,
            got: n,
        });
    }

    let space = ModelSpace::new(traj.sig);
    let dim = traj.sig.dim();
    let p = |i: usize| traj.points[i].coords();
    let vel: Vec<DVector<f64>> = traj.velocities.iter().map(|v| v.comps().clone()).collect();

    // ∇_T V at sample i, V given at every sample of `field`.
    let covariant = |field: &[DVector<f64>], i: usize| -> DVector<f64> {
        fd::five_point(field, i, h, stride) + space.connection_at(p(i), &vel[i], &field[i])
    };
    let zero = DVector::<f64>::zeros(dim);
    let stencil_defined =
        |defined: &[bool], i: usize| (i - trim..=i + trim).step_by(stride).all(|j| defined[j]);

    let mut kappa1 = vec![None; n];
    let mut v2 = vec![zero.clone(); n];
    let mut has_v2 = vec![false; n];
    for i in trim..n - trim {
        let acc = covariant(&vel, i);
        let k = space.norm_at(p(i), &acc);
        kappa1[i] = Some(k);
        if k > opts.geodesic_eps {
            v2[i] = acc / k;
            has_v2[i] = true;
        }
    }

    let mut kappa2 = vec![None; n];
    let mut v3 = vec![zero.clone(); n];
    let mut has_v3 = vec![false; n];
    for i in 2 * trim..n - 2 * trim {
        if !has_v2[i] || !stencil_defined(&has_v2, i) {
            continue;
        }
        let k1 = kappa1[i].unwrap_or(0.0);
        let w = covariant(&v2, i) + &vel[i] * k1;
        let k = space.norm_at(p(i), &w);
        kappa2[i] = Some(k);
        if k > opts.frame_eps {
            v3[i] = w / k;
            has_v3[i] = true;
        }
    }

    let mut kappa3 = vec![None; n];
    let mut v4 = vec![zero; n];
    let mut has_v4 = vec![false; n];
    for i in 3 * trim..n - 3 * trim {
        if !has_v3[i] || !stencil_defined(&has_v3, i) {
            continue;
        }
        let k2 = kappa2[i].unwrap_or(0.0);
        let u = covariant(&v3, i) + &v2[i] * k2;
        let k = space.norm_at(p(i), &u);
        kappa3[i] = Some(k);
        if k > opts.frame_eps {
            v4[i] = u / k;
            has_v4[i] = true;
        }
    }

    let range = 3 * trim..n - 3 * trim;
    let mut series = FrenetSeries {
        times: Vec::with_capacity(range.len()),
        kappa1: Vec::with_capacity(range.len()),
        kappa2: Vec::with_capacity(range.len()),
        kappa3: Vec::with_capacity(range.len()),
        frames: Vec::with_capacity(range.len()),
        defined_order: Vec::with_capacity(range.len()),
    };
    for i in range {
        let base = traj.points[i].clone();
        let mut frame = vec![traj.velocities[i].clone()];
        for (has, v) in [(&has_v2, &v2), (&has_v3, &v3), (&has_v4, &v4)] {
            if !has[i] {
                break;
            }
            frame.push(Tangent::from_parts(base.clone(), v[i].clone()));
        }
        series.times.push(traj.times[i]);
        series.kappa1.push(kappa1[i]);
        series.kappa2.push(kappa2[i]);
        series.kappa3.push(kappa3[i]);
        series.defined_order.push(frame.len());
        series.frames.push(frame);
    }
    Ok(series)
}

/// Largest `r` such that the median of `κ_{r−1}` exceeds `tol`.
pub fn osculating_order(series: &FrenetSeries, tol: f64) -> usize {
    let mut order = 1;
    for level in 1..=3 {
        if series.median_kappa(level) > tol {
            order = level + 1;
        } else {
            break;
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{initial_tangent, integrate, IntegratorConfig, MagneticSetup};
    use crate::model_space::{Point, SpaceSignature};

    fn run(n: usize, s: usize, q: f64, cosines: &[f64], t_end: f64) -> Trajectory {
        let sig = SpaceSignature::new(n, s).unwrap();
        let m = ModelSpace::new(sig);
        let p = Point::origin(&sig);
        let mut dir = vec![0.0; 2 * n];
        dir[0] = 1.0;
        let t = initial_tangent(&m, &p, cosines, &dir).unwrap();
        let setup = MagneticSetup::new(sig, q, t, None).unwrap();
        integrate(&setup, &IntegratorConfig::new(t_end, 1e-3, 1).unwrap()).unwrap()
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(vec![]), 0.0);
    }

    #[test]
    fn geodesic_has_order_one() {
        let c = 1.0 / 2f64.sqrt();
        let traj = run(1, 2, 1.0, &[c, c], 1.0);
        let series = frenet_apparatus(&traj, None).unwrap();
        assert!(series.median_kappa(1) <= GEODESIC_EPS);
        assert!(series.defined_order.iter().all(|&r| r == 1));
        assert!(series.kappa2.iter().all(Option::is_none));
        assert_eq!(osculating_order(&series, 1e-6), 1);
    }

    #[test]
    fn slant_circle_has_order_two() {
        let traj = run(1, 1, 2.0, &[0.5], 2.0);
        let series = frenet_apparatus(&traj, None).unwrap();
        assert!((series.median_kappa(1) - 3f64.sqrt()).abs() < 1e-4);
        assert!(series.median_kappa(2) < 1e-4);
        assert_eq!(osculating_order(&series, 1e-4), 2);
    }

    #[test]
    fn legendre_helix_curvatures() {
        let traj = run(1, 2, 1.5, &[0.0, 0.0], 2.0);
        let series = frenet_apparatus(&traj, None).unwrap();
        assert!((series.median_kappa(1) - 1.5).abs() < 1e-4);
        assert!((series.median_kappa(2) - 2f64.sqrt()).abs() < 1e-3);
        assert!(series.median_kappa(3) < 1e-3);
        assert_eq!(osculating_order(&series, 1e-3), 3);
    }

    #[test]
    fn non_slant_order_bound() {
        let traj = run(1, 2, 1.0, &[0.5, 0.0], 2.0);
        let series = frenet_apparatus(&traj, None).unwrap();
        assert!((series.median_kappa(2) - 1.0).abs() < 1e-3);
        assert!(series.median_kappa(3) < 1e-3);
        assert_eq!(osculating_order(&series, 1e-3), 3);
    }

    #[test]
    fn stride_hint_trims_more() {
        let traj = run(1, 1, 2.0, &[0.3], 1.0);
        let fine = frenet_apparatus(&traj, None).unwrap();
        let coarse = frenet_apparatus(&traj, Some(4e-3)).unwrap();
        assert_eq!(fine.len(), traj.len() - 12);
        assert_eq!(coarse.len(), traj.len() - 48);
        assert!((fine.median_kappa(2) - coarse.median_kappa(2)).abs() < 1e-6);
    }

    #[test]
    fn rejects_short_and_non_uniform() {
        let traj = run(1, 1, 2.0, &[0.3], 0.01);
        assert!(matches!(
            frenet_apparatus(&traj, None),
            Err(Error::InsufficientData { .. })
        ));
        let mut bad = run(1, 1, 2.0, &[0.3], 0.1);
        bad.times[50] += 3e-4;
        assert!(matches!(frenet_apparatus(&bad, None), Err(Error::InvalidGrid(_))));
        let mut short = run(1, 1, 2.0, &[0.3], 0.1);
        short.times.truncate(4);
        short.points.truncate(4);
        short.velocities.truncate(4);
        assert!(matches!(
            frenet_apparatus(&short, None),
            Err(Error::InsufficientData { needed: 5, .. })
        ));
    }
}
