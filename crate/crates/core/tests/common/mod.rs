//! Independent reference implementation of the model geometry, built only
//! from the orthonormal frame `X_i = 2∂y_i`, `X_{n+i} = 2(∂x_i + y_i Σ∂z_α)`,
//! `ξ_α = 2∂z_α` and the defining formulas of `η` and `φ`.

#![allow(dead_code)]

use magnetic_core::dynamics::{default_direction, initial_tangent, integrate, IntegratorConfig, MagneticSetup};
use magnetic_core::{ModelSpace, Point, SpaceSignature, Trajectory};
use nalgebra::{DMatrix, DVector};

pub struct Oracle {
    pub n: usize,
    pub s: usize,
}

impl Oracle {
    pub fn new(n: usize, s: usize) -> Self {
        Self { n, s }
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.s
    }

    /// Frame fields as the columns of a matrix.
    pub fn frame(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let (n, s) = (self.n, self.s);
        let mut e = DMatrix::zeros(self.dim(), self.dim());
        for i in 0..n {
            e[(n + i, i)] = 2.0;
            e[(i, n + i)] = 2.0;
            for a in 0..s {
                e[(2 * n + a, n + i)] = 2.0 * p[n + i];
            }
        }
        for a in 0..s {
            e[(2 * n + a, 2 * n + a)] = 2.0;
        }
        e
    }

    /// The metric making the frame orthonormal: `g = E⁻ᵀ E⁻¹`.
    pub fn metric(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let inv = self.frame(p).try_inverse().expect("frame is invertible");
        inv.transpose() * inv
    }

    pub fn inner(&self, p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * self.metric(p) * b)[(0, 0)]
    }

    /// `Γ^k_{ij}` from central differences of the metric. The metric is
    /// quadratic in the coordinates, so any step is exact up to rounding.
    pub fn christoffel(&self, p: &DVector<f64>) -> Vec<DMatrix<f64>> {
        const H: f64 = 0.5;
        let d = self.dim();
        let partial: Vec<DMatrix<f64>> = (0..d)
            .map(|l| {
                let mut e = DVector::zeros(d);
                e[l] = H;
                (self.metric(&(p + &e)) - self.metric(&(p - &e))) / (2.0 * H)
            })
            .collect();
        let ginv = self.metric(p).try_inverse().expect("metric is invertible");
        (0..d)
            .map(|k| {
                DMatrix::from_fn(d, d, |i, j| {
                    0.5 * (0..d)
                        .map(|l| ginv[(k, l)] * (partial[i][(j, l)] + partial[j][(i, l)] - partial[l][(i, j)]))
                        .sum::<f64>()
                })
            })
            .collect()
    }

    pub fn contract(gamma: &[DMatrix<f64>], a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(gamma.len(), |k, _| (a.transpose() * &gamma[k] * b)[(0, 0)])
    }

    /// `η^α(v) = ½(v_{z_α} − Σ y_i v_{x_i})`.
    pub fn eta(&self, p: &DVector<f64>, v: &DVector<f64>) -> Vec<f64> {
        let n = self.n;
        let ydx: f64 = (0..n).map(|i| p[n + i] * v[i]).sum();
        (0..self.s).map(|a| 0.5 * (v[2 * n + a] - ydx)).collect()
    }

    /// `φv = Σ v_{y_i}∂x_i − Σ v_{x_i}∂y_i + (Σ v_{y_i} y_i) Σ∂z_α`.
    pub fn phi(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(self.dim());
        let mut lift = 0.0;
        for i in 0..n {
            out[i] = v[n + i];
            out[n + i] = -v[i];
            lift += v[n + i] * p[n + i];
        }
        for a in 0..self.s {
            out[2 * n + a] = lift;
        }
        out
    }

    pub fn xi(&self, alpha: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[2 * self.n + alpha] = 2.0;
        v
    }
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// RK4 run from the origin with the given cosines and the default direction.
pub fn run(n: usize, s: usize, q: f64, cosines: &[f64], t_end: f64, step: f64) -> Trajectory {
    let sig = SpaceSignature::new(n, s).unwrap();
    let space = ModelSpace::new(sig);
    let p0 = Point::origin(&sig);
    let t0 = initial_tangent(&space, &p0, cosines, &default_direction(&sig)).unwrap();
    let setup = MagneticSetup::new(sig, q, t0, None).unwrap();
    integrate(&setup, &IntegratorConfig::new(t_end, step, 1).unwrap()).unwrap()
}
