//! Classification of normal magnetic curves by contact angle and field
//! strength, the inverse map from curvatures back to `(q, cos θ)`, and the
//! measurement of these quantities along sampled trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::{angle_drift, covariant_accelerations, speed_drift, Trajectory};
use crate::error::{Error, Result};
use crate::frenet::{median, FrenetSeries};
use crate::model_space::ModelSpace;

/// Band used for the `cos θ = 0` and `cos θ = 1/q` conditions in [`predict_class`].
/// Geodesics are detected by `1 − sΣcos² ≤ 1e-12` instead, the same test
/// that zeroes `κ₁` in [`order_bound_curvatures`].
pub const DISPATCH_TOL: f64 = 1e-9;
const FEASIBILITY_SLACK: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(format!("sign must be +1 or -1, got {v}")),
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "+" | "+1" | "1" | "plus" => Ok(Sign::Plus),
            "-" | "-1" | "minus" => Ok(Sign::Minus),
            _ => Err(format!("sign must be + or -, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveClass {
    Geodesic,
    SlantCircle {
        kappa1: f64,
        q_sign: Sign,
    },
    LegendreHelix {
        kappa1: f64,
        kappa2: f64,
        q_sign: Sign,
    },
    SlantHelix {
        kappa1: f64,
        kappa2: f64,
        epsilon: Sign,
        q_sign: Sign,
    },
    /// Constant but unequal contact angles.
    GeneralMagnetic {
        kappa1: f64,
        kappa2: f64,
        q_sign: Sign,
    },
    NotMagnetic,
}

impl CurveClass {
    pub fn name(&self) -> &'static str {
        match self {
            CurveClass::Geodesic => "geodesic",
            CurveClass::SlantCircle { .. } => "slant_circle",
            CurveClass::LegendreHelix { .. } => "legendre_helix",
            CurveClass::SlantHelix { .. } => "slant_helix",
            CurveClass::GeneralMagnetic { .. } => "general_magnetic",
            CurveClass::NotMagnetic => "not_magnetic",
        }
    }

    pub fn kappa1(&self) -> Option<f64> {
        match *self {
            CurveClass::Geodesic => Some(0.0),
            CurveClass::SlantCircle { kappa1, .. }
            | CurveClass::LegendreHelix { kappa1, .. }
            | CurveClass::SlantHelix { kappa1, .. }
            | CurveClass::GeneralMagnetic { kappa1, .. } => Some(kappa1),
            CurveClass::NotMagnetic => None,
        }
    }

    pub fn kappa2(&self) -> Option<f64> {
        match *self {
            CurveClass::SlantCircle { .. } => Some(0.0),
            CurveClass::LegendreHelix { kappa2, .. }
            | CurveClass::SlantHelix { kappa2, .. }
            | CurveClass::GeneralMagnetic { kappa2, .. } => Some(kappa2),
            CurveClass::Geodesic | CurveClass::NotMagnetic => None,
        }
    }

    pub fn epsilon(&self) -> Option<Sign> {
        match *self {
            CurveClass::SlantHelix { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }

    pub fn q_sign(&self) -> Option<Sign> {
        match *self {
            CurveClass::SlantCircle { q_sign, .. }
            | CurveClass::LegendreHelix { q_sign, .. }
            | CurveClass::SlantHelix { q_sign, .. }
            | CurveClass::GeneralMagnetic { q_sign, .. } => Some(q_sign),
            CurveClass::Geodesic | CurveClass::NotMagnetic => None,
        }
    }

    pub fn same_kind(&self, other: &CurveClass) -> bool {
        self.name() == other.name()
    }

    /// JSON-ready view of a prediction for `(q, cos θ)`.
    pub fn report(&self, q: Option<f64>, cos_theta: Option<f64>) -> ClassReport {
        ClassReport {
            class: self.name().to_string(),
            q,
            cos_theta,
            kappa1: self.kappa1(),
            kappa2: self.kappa2(),
            epsilon: self.epsilon().map(i8::from),
            q_sign: self.q_sign().map(i8::from),
            measured: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub class: String,
    pub q: Option<f64>,
    pub cos_theta: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub epsilon: Option<i8>,
    pub q_sign: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<Measured>,
}

/// `1 − Σ cos²` in double-double arithmetic, so that it keeps full relative
/// precision near grazing angles. Values within `1e-12` of zero snap to zero.
fn one_minus_sum_sq(cosines: &[f64]) -> Result<f64> {
    let (mut hi, mut lo) = (1.0f64, 0.0f64);
    for &c in cosines {
        let p = c * c;
        let p_err = c.mul_add(c, -p);
        let sum = hi - p;
        let bb = sum - hi;
        let sum_err = (hi - (sum - bb)) + (-p - bb);
        hi = sum;
        lo += sum_err - p_err;
    }
    let rest = hi + lo;
    if !rest.is_finite() || rest < -FEASIBILITY_SLACK {
        return Err(Error::InfeasibleAngle {
            sum_cos2: cosines.iter().map(|c| c * c).sum(),
        });
    }
    Ok(if rest <= FEASIBILITY_SLACK { 0.0 } else { rest })
}

fn check_q(q: f64) -> Result<()> {
    if q == 0.0 || !q.is_finite() {
        return Err(Error::invalid(format!("field strength must be finite and nonzero, got {q}")));
    }
    Ok(())
}

fn check_s(s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::invalid("s must be at least 1"));
    }
    Ok(())
}

/// Class and curvatures of the slant normal magnetic curves for `F_q` with
/// contact angle `cos θ` in a space with `s` Reeb fields.
pub fn predict_class(q: f64, cos_theta: f64, s: usize) -> Result<CurveClass> {
    check_q(q)?;
    check_s(s)?;
    if !cos_theta.is_finite() {
        return Err(Error::invalid("contact angle cosine must be finite"));
    }
    let rest = one_minus_sum_sq(&vec![cos_theta; s])?;
    let q_sign = Sign::of(q);
    if rest == 0.0 {
        return Ok(CurveClass::Geodesic);
    }
    // inside the dispatch bands the general formulas still give the curvatures,
    // and they agree with the exact-case values at the band centre
    let kappa1 = q.abs() * rest.sqrt();
    let one_minus_qc = 1.0 - q * cos_theta;
    let kappa2 = (s as f64).sqrt() * one_minus_qc.abs();
    if cos_theta.abs() <= DISPATCH_TOL {
        return Ok(CurveClass::LegendreHelix { kappa1, kappa2, q_sign });
    }
    if (cos_theta - 1.0 / q).abs() <= DISPATCH_TOL && check_circle_existence(q, s) {
        return Ok(CurveClass::SlantCircle { kappa1, q_sign });
    }
    Ok(CurveClass::SlantHelix {
        kappa1,
        kappa2,
        epsilon: Sign::of(one_minus_qc),
        q_sign,
    })
}

/// Like [`predict_class`] but for one cosine per Reeb field; unequal cosines
/// give [`CurveClass::GeneralMagnetic`].
pub fn predict_class_cosines(q: f64, cosines: &[f64]) -> Result<CurveClass> {
    check_q(q)?;
    check_s(cosines.len())?;
    let lo = cosines.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cosines.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= DISPATCH_TOL {
        let mean = cosines.iter().sum::<f64>() / cosines.len() as f64;
        return predict_class(q, mean, cosines.len());
    }
    let (kappa1, kappa2) = order_bound_curvatures(q, cosines)?;
    if kappa1 <= DISPATCH_TOL {
        return Ok(CurveClass::Geodesic);
    }
    Ok(CurveClass::GeneralMagnetic {
        kappa1,
        kappa2,
        q_sign: Sign::of(q),
    })
}

/// `(κ₁, κ₂)` of a normal magnetic curve with constant contact angles.
///
/// `κ₂² = Aq² − As + B² − 2Bq + s` with `A = Σcos², B = Σcos`, evaluated as
/// `Σ_α (1 − q cos_α)² − Σ_{α<β} (cos_α − cos_β)²`, which is the same
/// polynomial without the cancellation between its large terms.
pub fn order_bound_curvatures(q: f64, cosines: &[f64]) -> Result<(f64, f64)> {
    check_s(cosines.len())?;
    if !q.is_finite() || cosines.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("field strength and cosines must be finite"));
    }
    let rest = one_minus_sum_sq(cosines)?;
    let kappa1 = q.abs() * rest.sqrt();
    let along: f64 = cosines.iter().map(|c| (1.0 - q * c).powi(2)).sum();
    let mut spread = 0.0;
    for (i, a) in cosines.iter().enumerate() {
        for b in &cosines[i + 1..] {
            spread += (a - b) * (a - b);
        }
    }
    let kappa2 = (along - spread).max(0.0).sqrt();
    Ok((kappa1, kappa2))
}

/// `true` iff non-geodesic slant circles are magnetic for `F_q`, i.e. `|q| > √s`.
pub fn check_circle_existence(q: f64, s: usize) -> bool {
    q.abs() > (s as f64).sqrt()
}

/// `ρ = √(s − s² cos²θ)`, the magnitude of `s·η^α(v₃)` for slant helices.
pub fn rho(cos_theta: f64, s: usize) -> Result<f64> {
    check_s(s)?;
    if !cos_theta.is_finite() {
        return Err(Error::invalid("contact angle cosine must be finite"));
    }
    let rest = one_minus_sum_sq(&vec![cos_theta; s])?;
    Ok((s as f64 * rest).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseCase {
    /// `κ₁ = 0`: a geodesic, magnetic for every `q`.
    #[serde(rename = "i")]
    Geodesic,
    /// Legendre helix, `κ₂ = √s`.
    #[serde(rename = "ii")]
    Legendre,
    /// Slant circle, `κ₂ = 0`.
    #[serde(rename = "iii")]
    Circle,
    /// Slant helix.
    #[serde(rename = "iv")]
    Helix,
}

impl std::str::FromStr for InverseCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "i" | "geodesic" => Ok(InverseCase::Geodesic),
            "ii" | "legendre" => Ok(InverseCase::Legendre),
            "iii" | "circle" => Ok(InverseCase::Circle),
            "iv" | "helix" => Ok(InverseCase::Helix),
            _ => Err(format!("unknown case {s:?}, expected i, ii, iii or iv")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseResult {
    pub case_tag: InverseCase,
    /// Empty for geodesics, which are magnetic for every `q`.
    pub q_candidates: Vec<f64>,
    pub cos_theta: f64,
}

/// Field strengths `q` (and the contact angle) for which a slant φ-helix of
/// curvatures `(κ₁, κ₂)` is a normal magnetic curve.
///
/// With `m = ε√s + branch·κ₂`, a helix is magnetic for `q = ε√(κ₁² + m²)`
/// at `cos θ = m / (√s √(κ₁² + m²))`. `κ₂ = 0` is a circle and `m = 0` a
/// Legendre helix. `case` forces one of these and errors if the data disagree;
/// `None` infers it.
pub fn invert_q(
    kappa1: f64,
    kappa2: f64,
    s: usize,
    case: Option<InverseCase>,
    eps: Sign,
    branch: Sign,
) -> Result<InverseResult> {
    check_s(s)?;
    if !(kappa1.is_finite() && kappa1 >= 0.0 && kappa2.is_finite() && kappa2 >= 0.0) {
        return Err(Error::invalid(format!(
            "curvatures must be finite and nonnegative, got ({kappa1}, {kappa2})"
        )));
    }
    let sf = s as f64;
    let root_s = sf.sqrt();
    let m = eps.value() * root_s + branch.value() * kappa2;
    let inferred = if kappa1 == 0.0 {
        InverseCase::Geodesic
    } else if kappa2 == 0.0 {
        InverseCase::Circle
    } else if m.abs() <= SIGN_TOL {
        InverseCase::Legendre
    } else {
        InverseCase::Helix
    };
    if let Some(requested) = case {
        if requested != inferred {
            return Err(Error::InconsistentCase(format!(
                "case {requested:?} requested but (κ₁, κ₂) = ({kappa1}, {kappa2}) with ε = {}, branch = {} is case {inferred:?}",
                i8::from(eps),
                i8::from(branch)
            )));
        }
    }
    let result = match inferred {
        InverseCase::Geodesic => InverseResult {
            case_tag: inferred,
            q_candidates: Vec::new(),
            cos_theta: 1.0 / root_s,
        },
        InverseCase::Legendre => InverseResult {
            case_tag: inferred,
            q_candidates: vec![kappa1, -kappa1],
            cos_theta: 0.0,
        },
        InverseCase::Circle => {
            let r = (kappa1 * kappa1 + sf).sqrt();
            InverseResult {
                case_tag: inferred,
                q_candidates: vec![eps.value() * r],
                cos_theta: eps.value() / r,
            }
        }
        InverseCase::Helix => {
            let r = kappa1.hypot(m);
            InverseResult {
                case_tag: inferred,
                q_candidates: vec![eps.value() * r],
                cos_theta: m / (root_s * r),
            }
        }
    };
    Ok(result)
}

/// Quantities measured along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    /// Least-squares field strength; `None` when `φT` vanishes and `q` is indeterminate.
    pub q: Option<f64>,
    pub cosines: Vec<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa3_max: f64,
    pub lorentz_residual: f64,
    pub speed_drift: f64,
    pub angle_drift: f64,
    /// Median of `g(v₂, φT/‖φT‖)`; `−sgn(q)` for magnetic curves.
    pub v2_alignment: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: CurveClass,
    pub measured: Measured,
}

impl Classification {
    pub fn report(&self) -> ClassReport {
        let m = &self.measured;
        let equal = m
            .cosines
            .iter()
            .all(|c| (c - m.cosines[0]).abs() <= f64::EPSILON.sqrt());
        let cos = (equal && !m.cosines.is_empty()).then(|| m.cosines.iter().sum::<f64>() / m.cosines.len() as f64);
        let mut r = self.class.report(m.q, cos);
        r.measured = Some(m.clone());
        r
    }
}

/// Classify a sampled curve: least-squares `q`, Lorentz residual, contact
/// angle constancy and equality, then the slant subclasses from the measured
/// angle and `q`. `series` must come from `traj`.
pub fn classify_trajectory(traj: &Trajectory, series: &FrenetSeries, tol: f64) -> Result<Classification> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let space = ModelSpace::new(traj.sig);
    let s = traj.sig.s();
    let (range, acc) = covariant_accelerations(traj)?;

    let mut cos_sum = vec![0.0; s];
    for v in &traj.velocities {
        for (acc_c, e) in cos_sum.iter_mut().zip(space.eta_at(v.base().coords(), v.comps())) {
            *acc_c += e;
        }
    }
    let cosines: Vec<f64> = cos_sum.iter().map(|c| c / traj.len() as f64).collect();

    let phis: Vec<_> = traj
        .velocities
        .iter()
        .map(|v| space.phi_at(v.base().coords(), v.comps()))
        .collect();
    let (mut gab, mut gbb, mut max_a, mut phi_norm_sum) = (0.0, 0.0, 0.0f64, 0.0);
    for i in range.clone() {
        let p = traj.points[i].coords();
        gab += space.metric_at(p, &acc[i], &phis[i]);
        let bb = space.metric_at(p, &phis[i], &phis[i]);
        gbb += bb;
        phi_norm_sum += bb.sqrt();
        max_a = max_a.max(space.norm_at(p, &acc[i]));
    }
    let count = range.len().max(1) as f64;
    let q = (phi_norm_sum / count > tol).then(|| -gab / gbb);
    let residual = match q {
        Some(q) => range
            .clone()
            .map(|i| {
                let p = traj.points[i].coords();
                space.norm_at(p, &(&acc[i] + &phis[i] * q))
            })
            .fold(0.0, f64::max),
        None => max_a,
    };

    let alignments: Vec<f64> = series
        .frames
        .iter()
        .filter(|f| f.len() >= 2)
        .filter_map(|f| {
            let p = f[0].base().coords();
            let b = space.phi_at(p, f[0].comps());
            let nb = space.norm_at(p, &b);
            (nb > tol).then(|| space.metric_at(p, f[1].comps(), &b) / nb)
        })
        .collect();

    let measured = Measured {
        q,
        cosines: cosines.clone(),
        kappa1: series.median_kappa(1),
        kappa2: series.median_kappa(2),
        kappa3: series.median_kappa(3),
        kappa3_max: series.max_kappa(3),
        lorentz_residual: residual,
        speed_drift: speed_drift(traj),
        angle_drift: angle_drift(traj),
        v2_alignment: (!alignments.is_empty()).then(|| median(alignments)),
        samples: traj.len(),
    };

    let class = if measured.speed_drift > tol || measured.angle_drift > tol || residual > tol {
        CurveClass::NotMagnetic
    } else {
        match q {
            None => CurveClass::Geodesic,
            // a geodesic transverse to the Reeb span only solves the equation for q = 0
            Some(q) if q.abs() <= tol => CurveClass::NotMagnetic,
            Some(_) if measured.kappa1 <= tol => CurveClass::Geodesic,
            Some(q) => {
                let lo = cosines.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = cosines.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let q_sign = Sign::of(q);
                let (kappa1, kappa2) = (measured.kappa1, measured.kappa2);
                let c = cosines.iter().sum::<f64>() / s as f64;
                if hi - lo > tol {
                    CurveClass::GeneralMagnetic { kappa1, kappa2, q_sign }
                } else if c.abs() <= tol {
                    CurveClass::LegendreHelix { kappa1, kappa2, q_sign }
                } else if (1.0 - q * c).abs() <= tol {
                    CurveClass::SlantCircle { kappa1, q_sign }
                } else {
                    CurveClass::SlantHelix {
                        kappa1,
                        kappa2,
                        epsilon: Sign::of(1.0 - q * c),
                        q_sign,
                    }
                }
            }
        }
    };
    Ok(Classification { class, measured })
}
