//! Exact slant normal magnetic curves of `R^{2n+s}(−3s)`.
//!
//! With `λ = −q + 2s cos θ`:
//!
//! * `λ ≠ 0` (case A): `f_i = −λt + a_i`,
//!   `γ_i = −(c_i/λ) sin f_i + b_i`, `γ_{n+i} = (c_i/λ) cos f_i + d_i`,
//!   `γ_{2n+α} = 2t cos θ − Σ_i { c_i²/(4λ²) [sin 2f_i + 2f_i] + (c_i d_i/λ) sin f_i } + h_α`
//!   with `Σ c_i² = 4(1 − s cos²θ)`.
//! * `λ = 0` (case B, `q = 2s cos θ`): `γ_i = c_i t + d_i` for `i ≤ 2n`,
//!   `γ_{2n+α} = 2t cos θ + Σ_i c_i (c_{n+i} t²/2 + d_{n+i} t) + h_α`
//!   with `Σ c_i² = 4(1 − s cos²θ)`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{covariant_accelerations, Trajectory};
use crate::error::{Error, Result};
use crate::model_space::{ModelSpace, Point, SpaceSignature, Tangent};

/// `|λ|` at or below this routes to case B.
pub const LAMBDA_ZERO: f64 = 1e-12;
const CONSTRAINT_TOL: f64 = 1e-12;

pub fn lambda(q: f64, s: usize, cos_theta: f64) -> f64 {
    -q + 2.0 * s as f64 * cos_theta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseAParams {
    pub sig: SpaceSignature,
    pub q: f64,
    pub cos_theta: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseBParams {
    pub sig: SpaceSignature,
    pub cos_theta: f64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum ClosedFormParams {
    #[serde(rename = "a")]
    A(CaseAParams),
    #[serde(rename = "b")]
    B(CaseBParams),
}

impl ClosedFormParams {
    pub fn sig(&self) -> SpaceSignature {
        match self {
            ClosedFormParams::A(p) => p.sig,
            ClosedFormParams::B(p) => p.sig,
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            ClosedFormParams::A(p) => p.q,
            ClosedFormParams::B(p) => p.q(),
        }
    }

    pub fn cos_theta(&self) -> f64 {
        match self {
            ClosedFormParams::A(p) => p.cos_theta,
            ClosedFormParams::B(p) => p.cos_theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClosedFormParams::A(p) => p.validate(),
            ClosedFormParams::B(p) => p.validate(),
        }
    }

    pub fn sample(&self, times: &[f64]) -> Result<Trajectory> {
        match self {
            ClosedFormParams::A(p) => sample_case_a(p, times),
            ClosedFormParams::B(p) => sample_case_b(p, times),
        }
    }
}

fn check_angle(sig: &SpaceSignature, cos_theta: f64) -> Result<()> {
    if !cos_theta.is_finite() || cos_theta.abs() > sig.max_slant_cos() + 1e-12 {
        return Err(Error::InvalidParams(format!(
            "|cos θ| = {} exceeds 1/√s = {}",
            cos_theta.abs(),
            sig.max_slant_cos()
        )));
    }
    Ok(())
}

fn check_len(v: &[f64], len: usize, name: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::InvalidParams(format!(
            "{name} has {} entries, expected {len}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams(format!("{name} has non-finite entries")));
    }
    Ok(())
}

fn check_radius(sig: &SpaceSignature, cos_theta: f64, c: &[f64]) -> Result<()> {
    let sum: f64 = c.iter().map(|x| x * x).sum();
    let target = 4.0 * (1.0 - sig.s() as f64 * cos_theta * cos_theta);
    if (sum - target).abs() > CONSTRAINT_TOL {
        return Err(Error::InvalidParams(format!(
            "constraint Σ c_i² = 4(1 − s cos²θ) violated: Σ c_i² = {sum}, 4(1 − s cos²θ) = {target}"
        )));
    }
    Ok(())
}

impl CaseAParams {
    pub fn lambda(&self) -> f64 {
        lambda(self.q, self.sig.s(), self.cos_theta)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sig.n();
        if self.q == 0.0 || !self.q.is_finite() {
            return Err(Error::InvalidParams(format!("q must be finite and nonzero, got {}", self.q)));
        }
        check_angle(&self.sig, self.cos_theta)?;
        if self.lambda().abs() <= LAMBDA_ZERO {
            return Err(Error::WrongCase(format!(
                "λ = −q + 2s cos θ = {} vanishes; use case b",
                self.lambda()
            )));
        }
        check_len(&self.a, n, "a")?;
        check_len(&self.b, n, "b")?;
        check_len(&self.c, n, "c")?;
        check_len(&self.d, n, "d")?;
        check_len(&self.h, self.sig.s(), "h")?;
        check_radius(&self.sig, self.cos_theta, &self.c)
    }
}

impl CaseBParams {
    /// The strength for which these curves are magnetic, `q = 2s cos θ`.
    pub fn q(&self) -> f64 {
        2.0 * self.sig.s() as f64 * self.cos_theta
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sig.n();
        check_angle(&self.sig, self.cos_theta)?;
        if self.q() == 0.0 {
            return Err(Error::InvalidParams(
                "cos θ = 0 gives q = 2s cos θ = 0, which is not a magnetic field".into(),
            ));
        }
        check_len(&self.c, 2 * n, "c")?;
        check_len(&self.d, 2 * n, "d")?;
        check_len(&self.h, self.sig.s(), "h")?;
        check_radius(&self.sig, self.cos_theta, &self.c)
    }
}

fn assemble(
    sig: SpaceSignature,
    q: f64,
    times: &[f64],
    samples: Vec<(DVector<f64>, DVector<f64>, DVector<f64>)>,
) -> Result<Trajectory> {
    let mut points = Vec::with_capacity(samples.len());
    let mut velocities = Vec::with_capacity(samples.len());
    let mut accelerations = Vec::with_capacity(samples.len());
    for (x, v, a) in samples {
        let p = Point::from_vector(x);
        velocities.push(Tangent::from_parts(p.clone(), v));
        points.push(p);
        accelerations.push(a);
    }
    Trajectory::new(sig, times.to_vec(), points, velocities, Some(q))?.with_accelerations(accelerations)
}

pub fn sample_case_a(params: &CaseAParams, times: &[f64]) -> Result<Trajectory> {
    params.validate()?;
    let sig = params.sig;
    let (n, s) = (sig.n(), sig.s());
    let lam = params.lambda();
    let cos_t = params.cos_theta;
    let samples = times
        .iter()
        .map(|&t| {
            let mut x = DVector::zeros(sig.dim());
            let mut v = DVector::zeros(sig.dim());
            let mut a = DVector::zeros(sig.dim());
            let mut z_osc = 0.0;
            let mut z_vel = 0.0;
            let mut z_acc = 0.0;
            for i in 0..n {
                let (c, d) = (params.c[i], params.d[i]);
                let f = -lam * t + params.a[i];
                let (sf, cf) = f.sin_cos();
                x[sig.x(i)] = c / (-lam) * sf + params.b[i];
                x[sig.y(i)] = c / lam * cf + d;
                v[sig.x(i)] = c * cf;
                v[sig.y(i)] = c * sf;
                a[sig.x(i)] = lam * c * sf;
                a[sig.y(i)] = -lam * c * cf;
                z_osc += c * c / (4.0 * lam * lam) * ((2.0 * f).sin() + 2.0 * f) + c * d / lam * sf;
                z_vel += v[sig.x(i)] * x[sig.y(i)];
                z_acc += a[sig.x(i)] * x[sig.y(i)] + v[sig.x(i)] * v[sig.y(i)];
            }
            for alpha in 0..s {
                x[sig.z(alpha)] = 2.0 * t * cos_t - z_osc + params.h[alpha];
                v[sig.z(alpha)] = 2.0 * cos_t + z_vel;
                a[sig.z(alpha)] = z_acc;
            }
            (x, v, a)
        })
        .collect();
    assemble(sig, params.q, times, samples)
}

pub fn sample_case_b(params: &CaseBParams, times: &[f64]) -> Result<Trajectory> {
    params.validate()?;
    let sig = params.sig;
    let n = sig.n();
    let cos_t = params.cos_theta;
    let z_acc: f64 = (0..n).map(|i| params.c[i] * params.c[n + i]).sum();
    let samples = times
        .iter()
        .map(|&t| {
            let mut x = DVector::zeros(sig.dim());
            let mut v = DVector::zeros(sig.dim());
            let mut a = DVector::zeros(sig.dim());
            for i in 0..2 * n {
                x[i] = params.c[i] * t + params.d[i];
                v[i] = params.c[i];
            }
            let mut z = 2.0 * t * cos_t;
            let mut z_vel = 2.0 * cos_t;
            for i in 0..n {
                let (ci, cn, dn) = (params.c[i], params.c[n + i], params.d[n + i]);
                z += ci * (cn * t * t / 2.0 + dn * t);
                z_vel += ci * (cn * t + dn);
            }
            for alpha in 0..sig.s() {
                x[sig.z(alpha)] = z + params.h[alpha];
                v[sig.z(alpha)] = z_vel;
                a[sig.z(alpha)] = z_acc;
            }
            (x, v, a)
        })
        .collect();
    assemble(sig, params.q(), times, samples)
}

/// Deterministic random parameters for `(q, cos θ)`: `c` uniform on the sphere
/// of radius `2√(1 − s cos²θ)`, the free constants uniform in small ranges.
/// The case follows from `λ`.
pub fn random_params(sig: SpaceSignature, q: f64, cos_theta: f64, seed: u64) -> Result<ClosedFormParams> {
    check_angle(&sig, cos_theta)?;
    if q == 0.0 || !q.is_finite() {
        return Err(Error::InvalidParams(format!("q must be finite and nonzero, got {q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, s) = (sig.n(), sig.s());
    let rest = 1.0 - s as f64 * cos_theta * cos_theta;
    let radius = if rest <= 1e-12 { 0.0 } else { 2.0 * rest.sqrt() };
    let lam = lambda(q, s, cos_theta);
    let c_len = if lam.abs() <= LAMBDA_ZERO { 2 * n } else { n };

    let mut c: Vec<f64> = (0..c_len).map(|_| rng.sample(StandardNormal)).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut c {
        *x *= radius / norm;
    }
    if radius > 0.0 {
        // absorb rounding so the constraint holds to the last bits
        let sum: f64 = c.iter().map(|x| x * x).sum();
        let fix = radius / sum.sqrt();
        c.iter_mut().for_each(|x| *x *= fix);
    }
    let mut uniform = |len: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..len).map(|_| rng.random_range(lo..hi)).collect()
    };

    if c_len == 2 * n {
        let d = uniform(2 * n, -1.0, 1.0);
        let h = uniform(s, -1.0, 1.0);
        Ok(ClosedFormParams::B(CaseBParams {
            sig,
            cos_theta,
            c,
            d,
            h,
        }))
    } else {
        let a = uniform(n, 0.0, std::f64::consts::TAU);
        let b = uniform(n, -1.0, 1.0);
        let d = uniform(n, -1.0, 1.0);
        let h = uniform(s, -1.0, 1.0);
        Ok(ClosedFormParams::A(CaseAParams {
            sig,
            q,
            cos_theta,
            a,
            b,
            c,
            d,
            h,
        }))
    }
}

/// `max_t ‖∇_T T + qφT‖_g` from exact velocities and either exact or
/// five-point accelerations.
pub fn residual(traj: &Trajectory, q: f64) -> Result<f64> {
    let space = ModelSpace::new(traj.sig);
    let (range, acc) = covariant_accelerations(traj)?;
    let mut worst: f64 = 0.0;
    for i in range {
        let p = traj.points[i].coords();
        let r = &acc[i] + space.phi_at(p, traj.velocities[i].comps()) * q;
        worst = worst.max(space.norm_at(p, &r));
    }
    Ok(worst)
}
