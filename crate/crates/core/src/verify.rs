//! Seeded self-check suites: structure identities, the frame connection
//! table, Frenet curvatures of integrated curves and classification agreement.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::classify::{
    classify_trajectory, invert_q, order_bound_curvatures, predict_class, predict_class_cosines, CurveClass, Sign,
};
use crate::dynamics::{default_direction, initial_tangent, integrate, IntegratorConfig, MagneticSetup, Trajectory};
use crate::error::Result;
use crate::frenet::frenet_apparatus;
use crate::model_space::{ModelSpace, Point, SpaceSignature, Tangent};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random (point, vector) samples per signature in the structure suite.
    pub structure_samples: usize,
    pub connection_points: usize,
    pub classification_cases: usize,
    /// Added multiple of the Euclidean inner product; nonzero only as a negative control.
    pub metric_perturbation: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            structure_samples: 200,
            connection_points: 100,
            classification_cases: 24,
            metric_perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

struct Tally {
    name: &'static str,
    cases: usize,
    max_error: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN must fail
        self.max_error = if err.is_nan() { f64::INFINITY } else { self.max_error.max(err) };
    }

    fn finish(self) -> CheckReport {
        CheckReport {
            check: self.name.to_string(),
            cases: self.cases,
            max_error: self.max_error,
            tolerance: self.tolerance,
            passed: self.max_error <= self.tolerance,
        }
    }
}

fn suite(name: &str, tallies: Vec<Tally>) -> SuiteReport {
    let checks: Vec<CheckReport> = tallies.into_iter().map(Tally::finish).collect();
    SuiteReport {
        suite: name.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn signatures() -> Vec<SpaceSignature> {
    let mut out = Vec::new();
    for n in 1..=3 {
        for s in 1..=3 {
            out.push(SpaceSignature::new(n, s).expect("valid signature"));
        }
    }
    out
}

fn random_point(rng: &mut ChaCha8Rng, sig: &SpaceSignature) -> DVector<f64> {
    DVector::from_fn(sig.dim(), |_, _| rng.random_range(-2.0..2.0))
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.amax()
}

pub fn structure_suite(cfg: &VerifyConfig) -> SuiteReport {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut phi_sq = Tally::new("phi_squared", 1e-12);
    let mut compat = Tally::new("metric_compatibility", 1e-12);
    let mut duality = Tally::new("eta_xi_duality", 1e-12);
    let mut d_eta = Tally::new("d_eta", 1e-5);
    let mut nabla_phi = Tally::new("nabla_phi", 1e-5);

    for sig in signatures() {
        let space = ModelSpace::new(sig);
        let metric = |p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| {
            space.metric_at(p, a, b) + cfg.metric_perturbation * a.dot(b)
        };
        let xis: Vec<DVector<f64>> = (0..sig.s()).map(|a| space.xi_components(a).expect("index")).collect();
        for _ in 0..cfg.structure_samples {
            let p = random_point(&mut rng, &sig);
            let x = random_vector(&mut rng, sig.dim());
            let y = random_vector(&mut rng, sig.dim());
            let ex = space.eta_at(&p, &x);
            let ey = space.eta_at(&p, &y);
            let px = space.phi_at(&p, &x);
            let py = space.phi_at(&p, &y);

            let mut rhs = -&x;
            for (a, xi) in xis.iter().enumerate() {
                rhs += xi * ex[a];
            }
            phi_sq.record(max_abs(&(space.phi_at(&p, &px) - rhs)));

            let dot_eta: f64 = ex.iter().zip(&ey).map(|(a, b)| a * b).sum();
            compat.record((metric(&p, &px, &py) - (metric(&p, &x, &y) - dot_eta)).abs());

            let mut err: f64 = 0.0;
            for (a, xi) in xis.iter().enumerate() {
                let e = space.eta_at(&p, xi);
                for (b, eb) in e.iter().enumerate() {
                    err = err.max((eb - if a == b { 1.0 } else { 0.0 }).abs());
                }
                err = err.max(max_abs(&space.phi_at(&p, xi)));
                err = err.max((metric(&p, &x, xi) - ex[a]).abs());
            }
            for e in space.eta_at(&p, &px) {
                err = err.max(e.abs());
            }
            duality.record(err);

            // constant-coefficient extensions commute, so 2dη(X,Y) = X(η(Y)) − Y(η(X))
            let deriv = |dir: &DVector<f64>, v: &DVector<f64>| -> Vec<f64> {
                let plus = space.eta_at(&(&p + dir * H), v);
                let minus = space.eta_at(&(&p - dir * H), v);
                plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * H)).collect()
            };
            let (xy, yx) = (deriv(&x, &y), deriv(&y, &x));
            let omega = metric(&p, &x, &py);
            let mut err: f64 = 0.0;
            for a in 0..sig.s() {
                err = err.max((0.5 * (xy[a] - yx[a]) - omega).abs());
            }
            d_eta.record(err);

            let base = Point::new(&sig, p.iter().cloned().collect()).expect("finite point");
            let xt = Tangent::new(base.clone(), x.iter().cloned().collect()).expect("finite vector");
            let yt = Tangent::new(base, y.iter().cloned().collect()).expect("finite vector");
            let (lhs, rhs) = space.nabla_phi_check(&xt, &yt).expect("matching dimensions");
            nabla_phi.record(max_abs(&(lhs.comps() - rhs.comps())));
        }
    }
    suite("structure", vec![phi_sq, compat, duality, d_eta, nabla_phi])
}

/// `∇_{E_a} E_b` from the frame table, as frame indices with coefficients.
pub fn frame_table(sig: &SpaceSignature, a: usize, b: usize) -> Vec<(usize, f64)> {
    let n = sig.n();
    let reeb: Vec<(usize, f64)> = (0..sig.s()).map(|al| (2 * n + al, 1.0)).collect();
    let kind = |k: usize| if k < n { (0, k) } else if k < 2 * n { (1, k - n) } else { (2, k - 2 * n) };
    match (kind(a), kind(b)) {
        ((0, i), (1, j)) if i == j => reeb,
        ((1, i), (0, j)) if i == j => reeb.into_iter().map(|(k, c)| (k, -c)).collect(),
        ((0, i), (2, _)) | ((2, _), (0, i)) => vec![(n + i, -1.0)],
        ((1, i), (2, _)) | ((2, _), (1, i)) => vec![(i, 1.0)],
        _ => Vec::new(),
    }
}

pub fn connection_suite(cfg: &VerifyConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut table = Tally::new("frame_table", 1e-10);
    let mut closed = Tally::new("closed_form_connection", 1e-10);
    let sigs = signatures();
    for k in 0..cfg.connection_points {
        let sig = sigs[k % sigs.len()];
        let space = ModelSpace::new(sig);
        let p = Point::new(&sig, random_point(&mut rng, &sig).iter().cloned().collect()).expect("finite");
        let gamma = space.christoffel(&p).expect("matching dimension");
        let frame = space.frame_at(p.coords());
        let mut err: f64 = 0.0;
        for a in 0..sig.dim() {
            for b in 0..sig.dim() {
                let coord = space.frame_derivative(b, &frame[a]) + gamma.contract(&frame[a], &frame[b]);
                let mut expect = DVector::zeros(sig.dim());
                for (idx, c) in frame_table(&sig, a, b) {
                    expect += &frame[idx] * c;
                }
                err = err.max(max_abs(&(coord - expect)));
            }
        }
        table.record(err);

        let u = random_vector(&mut rng, sig.dim());
        let v = random_vector(&mut rng, sig.dim());
        closed.record(max_abs(&(gamma.contract(&u, &v) - space.connection_at(p.coords(), &u, &v))));
    }
    suite("connection", vec![table, closed])
}

fn run_case(sig: SpaceSignature, q: f64, cosines: &[f64], t_end: f64) -> Result<Trajectory> {
    let space = ModelSpace::new(sig);
    let p0 = Point::origin(&sig);
    let t0 = initial_tangent(&space, &p0, cosines, &default_direction(&sig))?;
    let setup = MagneticSetup::new(sig, q, t0, None)?;
    integrate(&setup, &IntegratorConfig::new(t_end, 1e-3, 1)?)
}

pub fn frenet_suite(cfg: &VerifyConfig) -> SuiteReport {
    let _ = cfg;
    let mut k1 = Tally::new("kappa1", 1e-4);
    let mut k2 = Tally::new("kappa2", 1e-3);
    let mut k3 = Tally::new("kappa3_order_bound", 1e-3);
    let cases: [(usize, usize, f64, &[f64]); 5] = [
        (1, 1, 2.0, &[0.5]),
        (1, 2, 1.5, &[0.0, 0.0]),
        (1, 1, 2.0, &[0.3]),
        (2, 3, -1.2, &[0.2, 0.2, 0.2]),
        (1, 2, 1.0, &[0.5, 0.0]),
    ];
    for (n, s, q, cosines) in cases {
        let sig = SpaceSignature::new(n, s).expect("valid signature");
        let (want1, want2) = order_bound_curvatures(q, cosines).expect("feasible");
        match run_case(sig, q, cosines, 2.0).and_then(|t| frenet_apparatus(&t, None)) {
            Ok(series) => {
                k1.record((series.median_kappa(1) - want1).abs());
                k2.record((series.median_kappa(2) - want2).abs());
                k3.record(series.median_kappa(3));
            }
            Err(_) => {
                k1.record(f64::INFINITY);
                k2.record(f64::INFINITY);
                k3.record(f64::INFINITY);
            }
        }
    }
    suite("frenet", vec![k1, k2, k3])
}

/// A random admissible `(n, s, q, cosines)` cell covering every class.
pub fn random_case(rng: &mut ChaCha8Rng) -> (SpaceSignature, f64, Vec<f64>) {
    let n = rng.random_range(1..=2);
    let s = rng.random_range(1..=3);
    let sig = SpaceSignature::new(n, s).expect("valid signature");
    let max_cos = sig.max_slant_cos();
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let q = sign * rng.random_range(0.5..2.5);
    let kind = rng.random_range(0..10);
    let cosines = match kind {
        0 => vec![sign * max_cos; s],
        1 => vec![0.0; s],
        2 if q.abs() > (s as f64).sqrt() + 0.1 => vec![1.0 / q; s],
        3 if s > 1 => {
            let mut c: Vec<f64> = (0..s).map(|_| rng.random_range(-0.9..0.9) * max_cos).collect();
            c[0] = c[1] + 0.2 * max_cos * if c[1] > 0.0 { -1.0 } else { 1.0 };
            c
        }
        _ => loop {
            let c = rng.random_range(-0.9..0.9) * max_cos;
            if c.abs() > 0.05 && (c - 1.0 / q).abs() > 0.05 {
                break vec![c; s];
            }
        },
    };
    (sig, q, cosines)
}

fn classes_agree(measured: &CurveClass, predicted: &CurveClass, tol: f64) -> f64 {
    if !measured.same_kind(predicted) {
        return f64::INFINITY;
    }
    let diff = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let mut err = diff(measured.kappa1(), predicted.kappa1());
    if !matches!(predicted, CurveClass::SlantCircle { .. }) {
        err = err.max(diff(measured.kappa2(), predicted.kappa2()));
    }
    if measured.epsilon() != predicted.epsilon() || measured.q_sign() != predicted.q_sign() {
        err = err.max(10.0 * tol);
    }
    err
}

pub fn classification_suite(cfg: &VerifyConfig) -> SuiteReport {
    const TOL: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut agree = Tally::new("measured_vs_predicted", TOL);
    let mut square = Tally::new("consistency_square", 1e-14);
    let mut round_trip = Tally::new("inversion_round_trip", 1e-12);

    for _ in 0..cfg.classification_cases {
        let (sig, q, cosines) = random_case(&mut rng);
        let predicted = predict_class_cosines(q, &cosines).expect("admissible case");
        let err = run_case(sig, q, &cosines, 2.0)
            .and_then(|t| {
                let series = frenet_apparatus(&t, None)?;
                classify_trajectory(&t, &series, TOL)
            })
            .map_or(f64::INFINITY, |c| classes_agree(&c.class, &predicted, TOL));
        agree.record(err);
    }

    for _ in 0..200 {
        let s = rng.random_range(1..=4);
        let q = rng.random_range(0.1..4.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let c = rng.random_range(-1.0..1.0) / (s as f64).sqrt();
        let class = predict_class(q, c, s).expect("admissible");
        let (k1, k2) = order_bound_curvatures(q, &vec![c; s]).expect("admissible");
        let mut err = (class.kappa1().unwrap_or(0.0) - k1).abs();
        if let Some(p2) = class.kappa2() {
            if !matches!(class, CurveClass::SlantCircle { .. }) {
                err = err.max((p2 - k2).abs());
            }
        }
        square.record(err);

        let k1 = rng.random_range(0.1..3.0);
        let k2 = rng.random_range(0.1..3.0);
        for eps in [Sign::Plus, Sign::Minus] {
            for branch in [Sign::Plus, Sign::Minus] {
                let err = invert_q(k1, k2, s, None, eps, branch)
                    .and_then(|r| predict_class(r.q_candidates[0], r.cos_theta, s))
                    .map_or(f64::INFINITY, |c| {
                        (c.kappa1().unwrap_or(f64::INFINITY) - k1)
                            .abs()
                            .max((c.kappa2().unwrap_or(f64::INFINITY) - k2).abs())
                    });
                round_trip.record(err);
            }
        }
    }
    suite("classification", vec![agree, square, round_trip])
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<SuiteReport> {
    vec![
        structure_suite(cfg),
        connection_suite(cfg),
        frenet_suite(cfg),
        classification_suite(cfg),
    ]
}
