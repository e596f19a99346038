use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use magnetic_core::closed_form::{lambda, random_params, residual, CaseAParams, CaseBParams, LAMBDA_ZERO};
use magnetic_core::dynamics::{angle_drift, default_direction, initial_tangent, integrate, speed_drift};
use magnetic_core::io::{write_frenet_csv, write_trajectory_csv, write_trajectory_json};
use magnetic_core::verify::{run_all, VerifyConfig};
use magnetic_core::{
    classify_trajectory, frenet_apparatus, invert_q, predict_class, predict_class_cosines, ClosedFormParams,
    MagneticSetup, ModelSpace, Point, Trajectory,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{common_value, CaseTag, ClassifyConfig, ClosedFormConfig, IntegrateConfig, InvertConfig};
use crate::failure::{Failure, Outcome};

/// Largest acceptable Lorentz residual of a closed-form curve.
pub const CLOSED_FORM_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// The explicit choice, else JSON for `.json` paths and CSV otherwise.
    pub fn pick(explicit: Option<Format>, out: Option<&Path>) -> Format {
        explicit.unwrap_or_else(|| match out.and_then(|p| p.extension()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        })
    }
}

/// Buffered writer on `path`, or standard output.
pub fn sink(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::invalid(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Outcome {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Diagnostics go to standard output when the data went to a file, and to
/// standard error when the data itself is on standard output.
fn write_diagnostics(out: Option<&Path>, value: &Value) -> Outcome {
    if out.is_some() {
        write_json(None, value)
    } else {
        eprintln!("{}", serde_json::to_string_pretty(value)?);
        Ok(())
    }
}

fn write_trajectory(traj: &Trajectory, out: Option<&Path>, format: Format) -> Outcome {
    let mut w = sink(out)?;
    match format {
        Format::Csv => write_trajectory_csv(traj, &mut w)?,
        Format::Json => write_trajectory_json(traj, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

pub fn run_integrate(cfg: IntegrateConfig, out: Option<&Path>, format: Format, frenet_out: Option<&Path>) -> Outcome {
    let sig = cfg.sig;
    let space = ModelSpace::new(sig);
    let cosines = cfg.angles.resolve(sig.s())?;
    let p0 = Point::new(&sig, cfg.initial_point.clone().unwrap_or_else(|| vec![0.0; sig.dim()]))?;
    let direction = cfg.direction.clone().unwrap_or_else(|| default_direction(&sig));
    let t0 = initial_tangent(&space, &p0, &cosines, &direction)?;
    let setup = MagneticSetup::new(sig, cfg.q, t0, cfg.label.clone())?;
    let traj = integrate(&setup, &cfg.integrator)?;

    write_trajectory(&traj, out, format)?;
    if let Some(path) = frenet_out {
        let series = frenet_apparatus(&traj, None)?;
        let mut w = sink(Some(path))?;
        write_frenet_csv(&series, &mut w)?;
        w.flush()?;
    }
    let diagnostics = json!({
        "label": cfg.label,
        "n": sig.n(),
        "s": sig.s(),
        "q": cfg.q,
        "cosines": cosines,
        "samples": traj.len(),
        "t_end": traj.times.last().copied(),
        "speed_drift": speed_drift(&traj),
        "angle_drift": angle_drift(&traj),
        "lorentz_residual": residual(&traj, cfg.q).ok(),
    });
    write_diagnostics(out, &diagnostics)
}

fn zeros(len: usize) -> Vec<f64> {
    vec![0.0; len]
}

/// `c` on the constraint sphere, pointing along the first axis.
fn canonical_c(len: usize, s: usize, cos_theta: f64) -> Vec<f64> {
    let rest = 1.0 - s as f64 * cos_theta * cos_theta;
    let mut c = zeros(len);
    c[0] = if rest <= 1e-12 { 0.0 } else { 2.0 * rest.max(0.0).sqrt() };
    c
}

pub fn closed_form_params(cfg: &ClosedFormConfig, seed: u64) -> Outcome<ClosedFormParams> {
    let sig = cfg.sig;
    let (n, s) = (sig.n(), sig.s());
    let cos = cfg.angles.resolve_slant(s)?;
    let q_b = 2.0 * s as f64 * cos;
    let case = cfg.case.unwrap_or(match cfg.q {
        Some(q) if lambda(q, s, cos).abs() > LAMBDA_ZERO => CaseTag::A,
        _ => CaseTag::B,
    });
    let q = match (case, cfg.q) {
        (CaseTag::A, Some(q)) => q,
        (CaseTag::A, None) => return Err(Failure::invalid("case a needs the field strength q")),
        (CaseTag::B, Some(q)) if (q - q_b).abs() > LAMBDA_ZERO => {
            return Err(Failure::invalid(format!(
                "case b requires q = 2s cos θ = {q_b}, got q = {q}"
            )))
        }
        (CaseTag::B, _) => q_b,
    };
    if cfg.randomize {
        let params = random_params(sig, q, cos, cfg.seed.unwrap_or(seed))?;
        let drawn = match params {
            ClosedFormParams::A(_) => CaseTag::A,
            ClosedFormParams::B(_) => CaseTag::B,
        };
        if drawn != case {
            return Err(Failure::invalid(format!(
                "λ = −q + 2s cos θ = {} does not match the requested case",
                lambda(q, s, cos)
            )));
        }
        return Ok(params);
    }
    let params = match case {
        CaseTag::A => ClosedFormParams::A(CaseAParams {
            sig,
            q,
            cos_theta: cos,
            a: cfg.a.clone().unwrap_or_else(|| zeros(n)),
            b: cfg.b.clone().unwrap_or_else(|| zeros(n)),
            c: cfg.c.clone().unwrap_or_else(|| canonical_c(n, s, cos)),
            d: cfg.d.clone().unwrap_or_else(|| zeros(n)),
            h: cfg.h.clone().unwrap_or_else(|| zeros(s)),
        }),
        CaseTag::B => {
            if cfg.a.is_some() || cfg.b.is_some() {
                return Err(Failure::invalid("case b takes only c, d and h"));
            }
            ClosedFormParams::B(CaseBParams {
                sig,
                cos_theta: cos,
                c: cfg.c.clone().unwrap_or_else(|| canonical_c(2 * n, s, cos)),
                d: cfg.d.clone().unwrap_or_else(|| zeros(2 * n)),
                h: cfg.h.clone().unwrap_or_else(|| zeros(s)),
            })
        }
    };
    params.validate()?;
    Ok(params)
}

pub fn run_closed_form(cfg: ClosedFormConfig, seed: u64, out: Option<&Path>, format: Format) -> Outcome {
    let params = closed_form_params(&cfg, seed)?;
    let traj = params.sample(&cfg.grid.times()?)?;
    let res = residual(&traj, params.q())?;
    write_trajectory(&traj, out, format)?;
    let sig = params.sig();
    let summary = json!({
        "case": match params { ClosedFormParams::A(_) => "a", ClosedFormParams::B(_) => "b" },
        "n": sig.n(),
        "s": sig.s(),
        "q": params.q(),
        "cos_theta": params.cos_theta(),
        "lambda": lambda(params.q(), sig.s(), params.cos_theta()),
        "samples": traj.len(),
        "lorentz_residual": res,
        "params": params,
    });
    write_diagnostics(out, &summary)?;
    if res > CLOSED_FORM_RESIDUAL_TOL {
        return Err(Failure::Verification(format!(
            "closed-form Lorentz residual {res:e} exceeds {CLOSED_FORM_RESIDUAL_TOL:e}"
        )));
    }
    Ok(())
}

pub fn classify_report(cfg: &ClassifyConfig) -> Outcome<(Value, bool)> {
    let mut report = serde_json::Map::new();
    let mut measured = None;
    if let Some(path) = &cfg.trajectory {
        let traj = magnetic_core::io::read_trajectory_path(path)?;
        let series = frenet_apparatus(&traj, None)?;
        let c = classify_trajectory(&traj, &series, cfg.tol)?;
        report.insert("classified".into(), serde_json::to_value(c.report())?);
        measured = Some((c.class, traj.sig.s()));
    }
    let wants_prediction = cfg.q.is_some()
        || cfg.angles.cos_theta.is_some()
        || cfg.angles.theta.is_some()
        || cfg.angles.cosines.is_some()
        || cfg.angles.thetas.is_some();
    let mut agrees = true;
    if wants_prediction {
        let q = cfg.q.ok_or_else(|| Failure::invalid("prediction needs the field strength q"))?;
        let s = cfg
            .s
            .or(measured.as_ref().map(|m| m.1))
            .ok_or_else(|| Failure::invalid("prediction needs the number of Reeb fields s"))?;
        let cosines = cfg.angles.resolve(s)?;
        let common = common_value(&cosines);
        let class = match common {
            Some(c) => predict_class(q, c, s)?,
            None => predict_class_cosines(q, &cosines)?,
        };
        report.insert("predicted".into(), serde_json::to_value(class.report(Some(q), common))?);
        if let Some((m, _)) = &measured {
            agrees = m.same_kind(&class);
            report.insert("agrees".into(), Value::Bool(agrees));
        }
    } else if measured.is_none() {
        return Err(Failure::invalid(
            "give a trajectory file, or q with s and a contact angle",
        ));
    }
    Ok((Value::Object(report), agrees))
}

pub fn run_classify(cfg: ClassifyConfig, out: Option<&Path>) -> Outcome {
    let (report, agrees) = classify_report(&cfg)?;
    write_json(out, &report)?;
    if !agrees {
        return Err(Failure::Verification("measured class differs from the prediction".into()));
    }
    Ok(())
}

pub fn invert_report(cfg: &InvertConfig) -> Outcome<Value> {
    let r = invert_q(cfg.kappa1, cfg.kappa2, cfg.s, cfg.case, cfg.eps, cfg.branch)?;
    let predicted = r
        .q_candidates
        .iter()
        .map(|&q| predict_class(q, r.cos_theta, cfg.s).map(|c| c.report(Some(q), Some(r.cos_theta))))
        .collect::<magnetic_core::Result<Vec<_>>>()?;
    Ok(json!({
        "kappa1": cfg.kappa1,
        "kappa2": cfg.kappa2,
        "s": cfg.s,
        "eps": cfg.eps,
        "branch": cfg.branch,
        "case": r.case_tag,
        "q_candidates": r.q_candidates,
        "cos_theta": r.cos_theta,
        "predicted": predicted,
    }))
}

pub fn run_invert(cfg: InvertConfig, out: Option<&Path>) -> Outcome {
    write_json(out, &invert_report(&cfg)?)
}

pub fn run_verify(cfg: VerifyConfig, out: Option<&Path>) -> Outcome {
    let suites = run_all(&cfg);
    let passed = suites.iter().all(|s| s.passed);
    write_json(
        out,
        &json!({
            "seed": cfg.seed,
            "passed": passed,
            "suites": suites,
        }),
    )?;
    if !passed {
        let failed: Vec<&str> = suites.iter().filter(|s| !s.passed).map(|s| s.suite.as_str()).collect();
        return Err(Failure::Verification(format!("failing suites: {}", failed.join(", "))));
    }
    Ok(())
}
