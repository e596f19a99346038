//! The normal magnetic curve equation `∇_T T = −qφT` as a first-order system
//! in `2(2n+s)` variables, integrated with fixed-step classical RK4.

use std::ops::Range;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::model_space::{ModelSpace, Point, SpaceSignature, Tangent};

const UNIT_SPEED_TOL: f64 = 1e-12;

/// Initial data of a normal magnetic curve for the field of strength `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticSetup {
    pub sig: SpaceSignature,
    pub q: f64,
    pub p0: Point,
    pub t0: Tangent,
    pub label: Option<String>,
}

impl MagneticSetup {
    pub fn new(sig: SpaceSignature, q: f64, t0: Tangent, label: Option<String>) -> Result<Self> {
        if q == 0.0 || !q.is_finite() {
            return Err(Error::invalid(format!("field strength must be finite and nonzero, got {q}")));
        }
        let space = ModelSpace::new(sig);
        let speed2 = space.metric(&t0, &t0)?;
        if (speed2 - 1.0).abs() > UNIT_SPEED_TOL {
            return Err(Error::invalid(format!(
                "initial velocity must be unit, g(T0, T0) = {speed2}"
            )));
        }
        Ok(Self {
            sig,
            q,
            p0: t0.base().clone(),
            t0,
            label,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntegratorConfig")]
pub struct IntegratorConfig {
    pub t_end: f64,
    pub step: f64,
    pub record_every: usize,
}

#[derive(Deserialize)]
struct RawIntegratorConfig {
    #[serde(default = "default_t_end")]
    t_end: f64,
    #[serde(default = "default_step")]
    step: f64,
    #[serde(default = "default_record_every")]
    record_every: usize,
}

fn default_t_end() -> f64 {
    10.0
}

fn default_step() -> f64 {
    1e-3
}

fn default_record_every() -> usize {
    1
}

impl TryFrom<RawIntegratorConfig> for IntegratorConfig {
    type Error = Error;

    fn try_from(raw: RawIntegratorConfig) -> Result<Self> {
        IntegratorConfig::new(raw.t_end, raw.step, raw.record_every)
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            t_end: default_t_end(),
            step: default_step(),
            record_every: default_record_every(),
        }
    }
}

impl IntegratorConfig {
    pub fn new(t_end: f64, step: f64, record_every: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {step}")));
        }
        if !(t_end.is_finite() && t_end >= step) {
            return Err(Error::invalid(format!(
                "t_end must be at least one step, got t_end = {t_end}, step = {step}"
            )));
        }
        if record_every == 0 {
            return Err(Error::invalid("record_every must be positive"));
        }
        Ok(Self {
            t_end,
            step,
            record_every,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.step + 1e-9).floor() as usize
    }
}

/// Sampled curve: times, points, velocities and, for closed-form curves,
/// exact coordinate accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sig: SpaceSignature,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub velocities: Vec<Tangent>,
    pub accelerations: Option<Vec<DVector<f64>>>,
    pub q: Option<f64>,
}

impl Trajectory {
    pub fn new(
        sig: SpaceSignature,
        times: Vec<f64>,
        points: Vec<Point>,
        velocities: Vec<Tangent>,
        q: Option<f64>,
    ) -> Result<Self> {
        if times.len() != points.len() || times.len() != velocities.len() {
            return Err(Error::invalid(format!(
                "trajectory arrays differ in length: {} times, {} points, {} velocities",
                times.len(),
                points.len(),
                velocities.len()
            )));
        }
        if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        for (p, v) in points.iter().zip(&velocities) {
            sig.check_len(p.len(), "trajectory point")?;
            if v.base() != p {
                return Err(Error::invalid("velocity is not attached to its trajectory point"));
            }
        }
        Ok(Self {
            sig,
            times,
            points,
            velocities,
            accelerations: None,
            q,
        })
    }

    pub fn with_accelerations(mut self, acc: Vec<DVector<f64>>) -> Result<Self> {
        if acc.len() != self.times.len() || acc.iter().any(|a| a.len() != self.sig.dim()) {
            return Err(Error::invalid("accelerations do not match the trajectory"));
        }
        self.accelerations = Some(acc);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn lorentz_force(space: &ModelSpace, t: &Tangent, q: f64) -> Result<Tangent> {
    Ok(space.phi(t)?.scaled(-q))
}

/// Unit tangent at `p0` with `η^α(T) = cosines[α]`, its contact part pointing
/// along `direction`, read as coefficients over `X_1..X_{2n}`.
pub fn initial_tangent(
    space: &ModelSpace,
    p0: &Point,
    cosines: &[f64],
    direction: &[f64],
) -> Result<Tangent> {
    let sig = space.signature();
    sig.check_len(p0.len(), "initial point")?;
    if cosines.len() != sig.s() {
        return Err(Error::invalid(format!(
            "expected {} contact angle cosines, got {}",
            sig.s(),
            cosines.len()
        )));
    }
    if direction.len() != 2 * sig.n() {
        return Err(Error::invalid(format!(
            "direction needs {} coefficients over X_1..X_2n, got {}",
            2 * sig.n(),
            direction.len()
        )));
    }
    if cosines.iter().chain(direction).any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite angle or direction"));
    }
    let sum_cos2: f64 = cosines.iter().map(|c| c * c).sum();
    if sum_cos2 > 1.0 + 1e-12 {
        return Err(Error::InfeasibleAngle { sum_cos2 });
    }
    // T sits on the Reeb span when Σcos² is 1 up to rounding
    let rest = 1.0 - sum_cos2;
    let contact = if rest <= 1e-12 { 0.0 } else { rest.sqrt() };

    let frame = space.frame_at(p0.coords());
    let mut comps = DVector::zeros(sig.dim());
    for (a, c) in cosines.iter().enumerate() {
        comps += &frame[2 * sig.n() + a] * *c;
    }
    if contact > 0.0 {
        let dir_norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if dir_norm == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        for (k, d) in direction.iter().enumerate() {
            comps += &frame[k] * (contact * d / dir_norm);
        }
    }
    Ok(Tangent::from_parts(p0.clone(), comps))
}

/// `e_1` over `X_1..X_{2n}`.
pub fn default_direction(sig: &SpaceSignature) -> Vec<f64> {
    let mut d = vec![0.0; 2 * sig.n()];
    d[0] = 1.0;
    d
}

/// `(v, a)` with `a^k = −Γ^k_{ij} v^i v^j − q(φv)^k`.
pub fn magnetic_rhs(space: &ModelSpace, state: (&Point, &Tangent), q: f64) -> (Tangent, DVector<f64>) {
    let (p, v) = state;
    let a = acceleration(space, p.coords(), v.comps(), q);
    (v.clone(), a)
}

fn acceleration(space: &ModelSpace, p: &DVector<f64>, v: &DVector<f64>, q: f64) -> DVector<f64> {
    -space.connection_at(p, v, v) - space.phi_at(p, v) * q
}

fn system(space: &ModelSpace, y: &DVector<f64>, q: f64) -> DVector<f64> {
    let dim = space.signature().dim();
    let p = y.rows(0, dim).into_owned();
    let v = y.rows(dim, dim).into_owned();
    let a = acceleration(space, &p, &v, q);
    let mut out = DVector::zeros(2 * dim);
    out.rows_mut(0, dim).copy_from(&v);
    out.rows_mut(dim, dim).copy_from(&a);
    out
}

fn rk4_step(space: &ModelSpace, y: &DVector<f64>, h: f64, q: f64) -> DVector<f64> {
    let k1 = system(space, y, q);
    let k2 = system(space, &(y + &k1 * (h / 2.0)), q);
    let k3 = system(space, &(y + &k2 * (h / 2.0)), q);
    let k4 = system(space, &(y + &k3 * h), q);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

pub fn integrate(setup: &MagneticSetup, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let space = ModelSpace::new(setup.sig);
    let dim = setup.sig.dim();
    let mut y = DVector::zeros(2 * dim);
    y.rows_mut(0, dim).copy_from(setup.p0.coords());
    y.rows_mut(dim, dim).copy_from(setup.t0.comps());

    let steps = cfg.steps();
    let capacity = steps / cfg.record_every + 1;
    let mut times = Vec::with_capacity(capacity);
    let mut points = Vec::with_capacity(capacity);
    let mut velocities = Vec::with_capacity(capacity);
    times.push(0.0);
    points.push(setup.p0.clone());
    velocities.push(setup.t0.clone());

    for k in 1..=steps {
        let next = rk4_step(&space, &y, cfg.step, setup.q);
        if next.iter().any(|c| !c.is_finite()) {
            return Err(Error::Divergence {
                last_valid_time: (k - 1) as f64 * cfg.step,
            });
        }
        y = next;
        if k % cfg.record_every == 0 {
            let p = Point::from_vector(y.rows(0, dim).into_owned());
            velocities.push(Tangent::from_parts(p.clone(), y.rows(dim, dim).into_owned()));
            points.push(p);
            times.push(k as f64 * cfg.step);
        }
    }
    Ok(Trajectory {
        sig: setup.sig,
        times,
        points,
        velocities,
        accelerations: None,
        q: Some(setup.q),
    })
}

/// `max_t |√g(T,T) − 1|`.
pub fn speed_drift(traj: &Trajectory) -> f64 {
    let space = ModelSpace::new(traj.sig);
    traj.velocities
        .iter()
        .map(|v| (space.norm_at(v.base().coords(), v.comps()) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max_{α,t} |η^α(T(t)) − η^α(T(0))|`.
pub fn angle_drift(traj: &Trajectory) -> f64 {
    let space = ModelSpace::new(traj.sig);
    let Some(first) = traj.velocities.first() else {
        return 0.0;
    };
    let eta0 = space.eta_at(first.base().coords(), first.comps());
    traj.velocities
        .iter()
        .flat_map(|v| {
            space
                .eta_at(v.base().coords(), v.comps())
                .into_iter()
                .zip(eta0.clone())
                .map(|(e, e0)| (e - e0).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// `max_t ‖∇_T T + qφT‖_g` with velocity and acceleration both rebuilt from
/// the recorded points by second-order central differences.
pub fn point_fd_lorentz_residual(traj: &Trajectory, q: f64) -> Result<f64> {
    let h = fd::uniform_step(&traj.times)?;
    if traj.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: traj.len(),
        });
    }
    let space = ModelSpace::new(traj.sig);
    let mut worst: f64 = 0.0;
    for i in 1..traj.len() - 1 {
        let (pm, p, pp) = (
            traj.points[i - 1].coords(),
            traj.points[i].coords(),
            traj.points[i + 1].coords(),
        );
        let v = (pp - pm) / (2.0 * h);
        let a = (pp - p * 2.0 + pm) / (h * h);
        let r = a + space.connection_at(p, &v, &v) + space.phi_at(p, &v) * q;
        worst = worst.max(space.norm_at(p, &r));
    }
    Ok(worst)
}

/// `∇_T T` along the curve, from exact accelerations when present and from a
/// five-point stencil on the velocities otherwise. Returns the sample range on
/// which it is defined.
pub fn covariant_accelerations(traj: &Trajectory) -> Result<(Range<usize>, Vec<DVector<f64>>)> {
    let space = ModelSpace::new(traj.sig);
    let vel: Vec<DVector<f64>> = traj.velocities.iter().map(|v| v.comps().clone()).collect();
    let (range, coord_acc) = match &traj.accelerations {
        Some(acc) => (0..traj.len(), acc.clone()),
        None => {
            let w = fd::HALF_WIDTH;
            if traj.len() < 2 * w + 1 {
                return Err(Error::InsufficientData {
                    needed: 2 * w + 1,
                    got: traj.len(),
                });
            }
            let h = fd::uniform_step(&traj.times)?;
            let acc = (0..traj.len())
                .map(|i| {
                    if (w..traj.len() - w).contains(&i) {
                        fd::five_point(&vel, i, h, 1)
                    } else {
                        DVector::zeros(traj.sig.dim())
                    }
                })
                .collect();
            (w..traj.len() - w, acc)
        }
    };
    let out = coord_acc
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            if range.contains(&i) {
                a + space.connection_at(traj.points[i].coords(), &vel[i], &vel[i])
            } else {
                a
            }
        })
        .collect();
    Ok((range, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize, s: usize) -> ModelSpace {
        ModelSpace::new(SpaceSignature::new(n, s).unwrap())
    }

    #[test]
    fn lorentz_force_examples() {
        let m = space(1, 2);
        let p = Point::new(m.signature(), vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let xi = m.xi(&p, 0).unwrap();
        assert!(lorentz_force(&m, &xi, 3.0).unwrap().comps().iter().all(|c| *c == 0.0));
        let v = Tangent::new(p, vec![1.0, 0.3, -0.2, 0.4]).unwrap();
        assert!(lorentz_force(&m, &v, 0.0).unwrap().comps().iter().all(|c| *c == 0.0));
        let f = lorentz_force(&m, &v, 1.7).unwrap();
        assert!(m.metric(&f, &v).unwrap().abs() < 1e-15);
    }

    #[test]
    fn reeb_start() {
        let m = space(2, 3);
        let p = Point::origin(m.signature());
        let c = 1.0 / 3f64.sqrt();
        let t = initial_tangent(&m, &p, &[c; 3], &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let expected = m.reeb_sum_components() * c;
        assert!((t.comps() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn legendre_start_is_first_frame_vector() {
        let m = space(2, 2);
        let p = Point::new(m.signature(), vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let t = initial_tangent(&m, &p, &[0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.comps(), &m.frame_at(p.coords())[0]);
    }

    #[test]
    fn slant_start_matches_hand_value() {
        let m = space(1, 1);
        let r3 = 3f64.sqrt();
        let p = Point::new(m.signature(), vec![0.0, -r3, 0.0]).unwrap();
        let t = initial_tangent(&m, &p, &[0.5], &[0.0, 1.0]).unwrap();
        let expected = [r3, 0.0, -2.0];
        for (a, b) in t.comps().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((m.metric(&t, &t).unwrap() - 1.0).abs() < 1e-14);
        assert!((m.eta(&t).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn initial_tangent_errors() {
        let m = space(1, 2);
        let p = Point::origin(m.signature());
        assert!(matches!(
            initial_tangent(&m, &p, &[0.8, 0.8], &[1.0, 0.0]),
            Err(Error::InfeasibleAngle { .. })
        ));
        assert!(matches!(
            initial_tangent(&m, &p, &[0.5, 0.0], &[0.0, 0.0]),
            Err(Error::DegenerateDirection)
        ));
        assert!(initial_tangent(&m, &p, &[0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rhs_matches_lorentz_force() {
        let m = space(2, 2);
        let p = Point::new(m.signature(), vec![0.3, -0.2, 1.5, -0.7, 0.1, 0.9]).unwrap();
        let v = Tangent::new(p.clone(), vec![0.2, -0.4, 0.8, 0.1, 0.3, -0.6]).unwrap();
        let q = -1.3;
        let (vel, a) = magnetic_rhs(&m, (&p, &v), q);
        assert_eq!(vel, v);
        let acc = m
            .covariant_acceleration(&v, &Tangent::new(p, a.iter().copied().collect()).unwrap())
            .unwrap();
        let force = lorentz_force(&m, &v, q).unwrap();
        assert!((acc.comps() - force.comps()).abs().max() < 1e-13);
    }

    #[test]
    fn reeb_rhs_has_no_covariant_acceleration() {
        let m = space(1, 1);
        let p = Point::new(m.signature(), vec![1.0, -2.0, 0.5]).unwrap();
        let v = m.xi(&p, 0).unwrap().scaled(0.5);
        let (_, a) = magnetic_rhs(&m, (&p, &v), 2.0);
        let acc = m
            .covariant_acceleration(&v, &Tangent::new(p, a.iter().copied().collect()).unwrap())
            .unwrap();
        assert!(acc.comps().abs().max() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(10.0, 0.0, 1).is_err());
        assert!(IntegratorConfig::new(10.0, 1e-3, 0).is_err());
        assert!(IntegratorConfig::new(1e-4, 1e-3, 1).is_err());
        assert_eq!(IntegratorConfig::new(10.0, 1e-3, 1).unwrap().steps(), 10_000);
        let cfg: IntegratorConfig = serde_json::from_str(r#"{"t_end": 2.0}"#).unwrap();
        assert_eq!(cfg.step, 1e-3);
        assert!(serde_json::from_str::<IntegratorConfig>(r#"{"step": -1.0}"#).is_err());
    }

    #[test]
    fn setup_rejects_non_unit_and_zero_q() {
        let sig = SpaceSignature::new(1, 1).unwrap();
        let m = ModelSpace::new(sig);
        let p = Point::origin(&sig);
        let t = initial_tangent(&m, &p, &[0.5], &[1.0, 0.0]).unwrap();
        assert!(MagneticSetup::new(sig, 0.0, t.clone(), None).is_err());
        assert!(MagneticSetup::new(sig, 1.0, t.scaled(1.01), None).is_err());
        assert!(MagneticSetup::new(sig, 1.0, t, None).is_ok());
    }

    #[test]
    fn perturbed_velocity_speed_drift() {
        let sig = SpaceSignature::new(1, 1).unwrap();
        let m = ModelSpace::new(sig);
        let p = Point::origin(&sig);
        let t = initial_tangent(&m, &p, &[0.5], &[1.0, 0.0]).unwrap();
        let setup = MagneticSetup::new(sig, 2.0, t, None).unwrap();
        let traj = integrate(&setup, &IntegratorConfig::new(1.0, 1e-2, 1).unwrap()).unwrap();
        let mut scaled = traj.clone();
        for v in &mut scaled.velocities {
            *v = v.scaled(1.01);
        }
        assert!((speed_drift(&scaled) - 0.01).abs() < 1e-8);
    }

    #[test]
    fn first_sample_is_initial_data() {
        let sig = SpaceSignature::new(2, 1).unwrap();
        let m = ModelSpace::new(sig);
        let p = Point::new(&sig, vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let t = initial_tangent(&m, &p, &[0.3], &[1.0, 2.0, 0.0, -1.0]).unwrap();
        let setup = MagneticSetup::new(sig, 1.5, t.clone(), None).unwrap();
        let traj = integrate(&setup, &IntegratorConfig::new(0.5, 1e-2, 5).unwrap()).unwrap();
        assert_eq!(traj.points[0], p);
        assert_eq!(traj.velocities[0], t);
        assert_eq!(traj.len(), 11);
        assert!((traj.times[10] - 0.5).abs() < 1e-15);
    }
}
