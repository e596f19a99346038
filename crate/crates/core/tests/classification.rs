mod common;

use common::run;
use magnetic_core::classify::{
    check_circle_existence, classify_trajectory, invert_q, order_bound_curvatures, predict_class,
    predict_class_cosines, CurveClass, InverseCase, Sign,
};
use magnetic_core::closed_form::random_params;
use magnetic_core::io::{read_trajectory_csv, write_trajectory_csv};
use magnetic_core::{frenet_apparatus, Point, SpaceSignature, Tangent, Trajectory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-3;

fn classify(traj: &Trajectory) -> magnetic_core::Classification {
    let series = frenet_apparatus(traj, None).unwrap();
    classify_trajectory(traj, &series, TOL).unwrap()
}

/// Curvature-level agreement between a measured and a predicted class.
fn mismatch(measured: &CurveClass, predicted: &CurveClass) -> Option<String> {
    if !measured.same_kind(predicted) {
        return Some(format!("kind {} vs {}", measured.name(), predicted.name()));
    }
    let k1 = (measured.kappa1().unwrap_or(0.0) - predicted.kappa1().unwrap_or(0.0)).abs();
    let k2 = match predicted {
        CurveClass::SlantCircle { .. } | CurveClass::Geodesic => 0.0,
        _ => (measured.kappa2().unwrap() - predicted.kappa2().unwrap()).abs(),
    };
    if k1 > TOL || k2 > TOL {
        return Some(format!("curvatures off by ({k1:e}, {k2:e})"));
    }
    if measured.epsilon() != predicted.epsilon() || measured.q_sign() != predicted.q_sign() {
        return Some("sign data differ".into());
    }
    None
}

#[test]
fn randomized_classification_agrees_with_prediction() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    let mut kinds = std::collections::BTreeMap::new();
    let cases = 100;
    for case in 0..cases {
        let n = 1 + case % 2;
        let s = 1 + (case / 2) % 3;
        let root_s = (s as f64).sqrt();
        let q: f64 = rng.random_range(0.6..2.4) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let cosines: Vec<f64> = match case % 5 {
            0 => vec![if q > 0.0 { 1.0 } else { -1.0 } / root_s; s],
            1 => vec![0.0; s],
            2 if q.abs() > root_s + 0.1 => vec![1.0 / q; s],
            3 if s > 1 => (0..s).map(|a| (0.6 - 0.5 * a as f64) / root_s).collect(),
            _ => loop {
                let c = rng.random_range(-0.9..0.9) / root_s;
                if c.abs() > 0.05 && (c - 1.0 / q).abs() > 0.05 {
                    break vec![c; s];
                }
            },
        };
        let predicted = predict_class_cosines(q, &cosines).unwrap();
        *kinds.entry(predicted.name()).or_insert(0) += 1;
        let measured = classify(&run(n, s, q, &cosines, 2.0, 1e-3));
        if let Some(why) = mismatch(&measured.class, &predicted) {
            failures.push(format!("n={n} s={s} q={q} cos={cosines:?}: {why}"));
        }
    }
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
    assert!(kinds.len() >= 5, "suite covers only {kinds:?}");
}

#[test]
fn integrated_circle_is_a_slant_circle() {
    let c = classify(&run(1, 1, 2.0, &[0.5], 4.0, 1e-3));
    assert_eq!(c.class.name(), "slant_circle");
    assert!((c.class.kappa1().unwrap() - 3f64.sqrt()).abs() < TOL);
    assert!((c.measured.q.unwrap() - 2.0).abs() < 1e-6);
    // v₂ points along −sgn(q) φT
    assert!((c.measured.v2_alignment.unwrap() + 1.0).abs() < 1e-6);
}

#[test]
fn negative_field_flips_alignment() {
    let c = classify(&run(1, 2, -1.3, &[0.2, 0.2], 2.0, 1e-3));
    assert_eq!(c.class.q_sign(), Some(Sign::Minus));
    assert!((c.measured.v2_alignment.unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn closed_form_case_b_matches_prediction() {
    for (n, s, cos) in [(1, 1, 0.3), (2, 2, -0.4), (1, 3, 0.25)] {
        let sig = SpaceSignature::new(n, s).unwrap();
        let q = 2.0 * s as f64 * cos;
        let params = random_params(sig, q, cos, 9).unwrap();
        let times: Vec<f64> = (0..2001).map(|k| k as f64 * 1e-3).collect();
        let traj = params.sample(&times).unwrap();
        let measured = classify(&traj);
        let predicted = predict_class(params.q(), cos, s).unwrap();
        assert_eq!(mismatch(&measured.class, &predicted), None, "n={n} s={s} cos={cos}");
    }
}

fn line(sig: SpaceSignature, start: Vec<f64>, velocity: Vec<f64>, samples: usize) -> Trajectory {
    let h = 1e-3;
    let times: Vec<f64> = (0..samples).map(|k| k as f64 * h).collect();
    let points: Vec<Point> = times
        .iter()
        .map(|t| Point::new(&sig, start.iter().zip(&velocity).map(|(p, v)| p + v * t).collect()).unwrap())
        .collect();
    let velocities = points.iter().map(|p| Tangent::new(p.clone(), velocity.clone()).unwrap()).collect();
    Trajectory::new(sig, times, points, velocities, None).unwrap()
}

#[test]
fn diagonal_line_is_not_magnetic() {
    // along (1, 1, 0) the contact angle changes, so no field fits
    let sig = SpaceSignature::new(1, 1).unwrap();
    let c = classify(&line(sig, vec![0.0, 0.3, 0.0], vec![1.0, 1.0, 0.0], 500));
    assert_eq!(c.class, CurveClass::NotMagnetic);
    assert!(c.measured.angle_drift > TOL);
}

#[test]
fn transverse_geodesic_is_not_magnetic() {
    // unit-speed y-line: a geodesic with φT ≠ 0, magnetic only for q = 0
    let sig = SpaceSignature::new(1, 2).unwrap();
    let c = classify(&line(sig, vec![0.5, 0.0, 1.0, 0.0], vec![0.0, 2.0, 0.0, 0.0], 500));
    assert_eq!(c.class, CurveClass::NotMagnetic);
    assert!(c.measured.q.unwrap().abs() < 1e-9);
}

#[test]
fn unit_speed_x_line_off_axis_is_a_straight_magnetic_curve() {
    // x-line at height y₀: η = −c y₀/2 with c = 2/√(1 + s y₀²), magnetic for q = 2s cos θ
    for (s, y0) in [(1usize, 0.7), (2, -0.4), (3, 1.5)] {
        let sig = SpaceSignature::new(1, s).unwrap();
        let c = 2.0 / (1.0 + s as f64 * y0 * y0).sqrt();
        let mut start = vec![0.0; sig.dim()];
        start[1] = y0;
        let mut vel = vec![0.0; sig.dim()];
        vel[0] = c;
        let measured = classify(&line(sig, start, vel, 800));
        let cos = -c * y0 / 2.0;
        let q = 2.0 * s as f64 * cos;
        assert!((measured.measured.q.unwrap() - q).abs() < 1e-9);
        let predicted = predict_class(q, cos, s).unwrap();
        assert_eq!(mismatch(&measured.class, &predicted), None, "s={s} y0={y0}");
    }
}

#[test]
fn classification_survives_csv_round_trip() {
    let traj = run(1, 2, 1.5, &[0.0, 0.0], 2.0, 1e-3);
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &mut buf).unwrap();
    let back = read_trajectory_csv(buf.as_slice()).unwrap();
    let c = classify(&back);
    assert_eq!(c.class.name(), "legendre_helix");
    assert!((c.class.kappa2().unwrap() - 2f64.sqrt()).abs() < TOL);
}

#[test]
fn general_magnetic_cell() {
    let c = classify(&run(1, 2, 1.0, &[0.5, 0.0], 3.0, 1e-3));
    assert_eq!(c.class.name(), "general_magnetic");
    assert!((c.class.kappa2().unwrap() - 1.0).abs() < TOL);
    assert!(c.measured.kappa3 < TOL);
}

fn admissible() -> impl Strategy<Value = (f64, f64, usize)> {
    (0.1..5.0f64, any::<bool>(), -1.0..1.0f64, 1usize..=5).prop_map(|(q, neg, frac, s)| {
        (if neg { -q } else { q }, frac / (s as f64).sqrt(), s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn prediction_matches_order_bound((q, c, s) in admissible()) {
        let class = predict_class(q, c, s).unwrap();
        let (k1, k2) = order_bound_curvatures(q, &vec![c; s]).unwrap();
        prop_assert!((class.kappa1().unwrap() - k1).abs() <= 1e-14);
        match class {
            CurveClass::Geodesic => {}
            CurveClass::SlantCircle { .. } => prop_assert!(k2 <= 1e-14),
            _ => prop_assert!((class.kappa2().unwrap() - k2).abs() <= 1e-14),
        }
    }

    #[test]
    fn circles_have_vanishing_torsion(q in 1.01..6.0f64, neg in any::<bool>(), s in 1usize..=4) {
        let q = if neg { -q } else { q };
        prop_assume!(check_circle_existence(q, s) && q.abs() > (s as f64).sqrt() + 1e-6);
        let class = predict_class(q, 1.0 / q, s).unwrap();
        prop_assert_eq!(class.name(), "slant_circle");
        prop_assert!(((s as f64).sqrt() * (1.0 - q * (1.0 / q)).abs()) <= f64::EPSILON);
        prop_assert!((class.kappa1().unwrap() - (q * q - s as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn inversion_round_trips(k1 in 0.05..4.0f64, k2 in 0.05..4.0f64, s in 1usize..=4,
                             eps in any::<bool>(), branch in any::<bool>()) {
        let eps = if eps { Sign::Plus } else { Sign::Minus };
        let branch = if branch { Sign::Plus } else { Sign::Minus };
        let r = invert_q(k1, k2, s, None, eps, branch).unwrap();
        let class = predict_class(r.q_candidates[0], r.cos_theta, s).unwrap();
        prop_assert!((class.kappa1().unwrap() - k1).abs() < 1e-12);
        prop_assert!((class.kappa2().unwrap() - k2).abs() < 1e-12);
    }

    #[test]
    fn circle_inversion_round_trips(k1 in 0.05..4.0f64, s in 1usize..=4, eps in any::<bool>()) {
        let eps = if eps { Sign::Plus } else { Sign::Minus };
        let r = invert_q(k1, 0.0, s, Some(InverseCase::Circle), eps, Sign::Plus).unwrap();
        let q = r.q_candidates[0];
        prop_assert!(check_circle_existence(q, s));
        let class = predict_class(q, r.cos_theta, s).unwrap();
        prop_assert_eq!(class.name(), "slant_circle");
        prop_assert!((class.kappa1().unwrap() - k1).abs() < 1e-12);
    }

    #[test]
    fn legendre_inversion_round_trips(k1 in 0.05..4.0f64, s in 1usize..=4) {
        let k2 = (s as f64).sqrt();
        let r = invert_q(k1, k2, s, Some(InverseCase::Legendre), Sign::Plus, Sign::Minus).unwrap();
        for q in r.q_candidates {
            let class = predict_class(q, r.cos_theta, s).unwrap();
            prop_assert_eq!(class.name(), "legendre_helix");
            prop_assert!((class.kappa1().unwrap() - k1).abs() < 1e-12);
            prop_assert!((class.kappa2().unwrap() - k2).abs() < 1e-12);
        }
    }

    #[test]
    fn sasakian_reduction(theta in 0.0..std::f64::consts::PI, q in 0.1..5.0f64, neg in any::<bool>()) {
        let q = if neg { -q } else { q };
        // the curve's angle is the one its (rounded) cosine represents
        let c = theta.cos();
        let angle = c.acos();
        let class = predict_class(q, c, 1).unwrap();
        prop_assume!(class.name() == "slant_helix");
        prop_assert!((class.kappa1().unwrap() - q.abs() * angle.sin()).abs() <= 1e-14);
        prop_assert!((class.kappa2().unwrap() - (1.0 - q * angle.cos()).abs()).abs() <= 1e-14);
    }
}

#[test]
fn weak_fields_have_no_circles() {
    for s in 1..=6 {
        let root = (s as f64).sqrt();
        assert!(!check_circle_existence(root, s));
        assert!(!check_circle_existence(-root, s));
        assert!(!check_circle_existence(0.5 * root, s));
        assert!(check_circle_existence(root * (1.0 + 1e-12), s));
    }
}
