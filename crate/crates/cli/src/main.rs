//! `magcurve`: integrate, generate, classify and verify normal magnetic
//! curves on the model space `R^{2n+s}(−3s)`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
//! 3 numerical divergence.

mod commands;
mod config;
mod failure;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magnetic_core::verify::VerifyConfig;
use magnetic_core::{InverseCase, Sign};

use crate::commands::Format;
use crate::config::{
    AngleFlags, ClassifyConfig, ClosedFormConfig, Document, IntegrateConfig, InvertConfig, SweepSpec,
};
use crate::failure::{Failure, Outcome};

#[derive(Debug, Parser)]
#[command(name = "magcurve", version, about = "Normal magnetic curves on R^{2n+s}(-3s)")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Trajectory and sweep table format; inferred from the --out extension by default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Classification tolerance.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct AngleArgs {
    /// Cosine of the contact angle, shared by all Reeb directions.
    #[arg(long, allow_negative_numbers = true)]
    cos_theta: Option<f64>,
    /// Contact angle in radians, shared by all Reeb directions.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// One cosine per Reeb direction, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    cosines: Option<Vec<f64>>,
    /// One angle in radians per Reeb direction, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    thetas: Option<Vec<f64>>,
}

impl AngleArgs {
    fn flags(&self) -> AngleFlags {
        AngleFlags {
            cos_theta: self.cos_theta,
            theta: self.theta,
            cosines: self.cosines.clone(),
            thetas: self.thetas.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the Lorentz equation with fixed-step RK4.
    Integrate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        q: Option<f64>,
        #[command(flatten)]
        angles: AngleArgs,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        record_every: Option<usize>,
        /// Also write the Frenet curvatures as CSV.
        #[arg(long, value_name = "PATH")]
        frenet_out: Option<PathBuf>,
    },
    /// Sample an explicit closed-form magnetic curve.
    ClosedForm,
    /// Classify a trajectory file and/or predict the class for (q, angle, s).
    Classify {
        #[arg(long, value_name = "PATH")]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        q: Option<f64>,
        #[command(flatten)]
        angles: AngleArgs,
    },
    /// Field strengths for which a slant helix with given curvatures is magnetic.
    Invert {
        #[arg(long)]
        kappa1: Option<f64>,
        #[arg(long)]
        kappa2: Option<f64>,
        #[arg(long)]
        s: Option<usize>,
        /// i, ii, iii or iv; inferred when omitted.
        #[arg(long)]
        case: Option<InverseCase>,
        /// Sign of q (+ or -).
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<Sign>,
        /// Sign choice for the third Frenet direction (+ or -).
        #[arg(long, allow_hyphen_values = true)]
        branch: Option<Sign>,
    },
    /// Run the invariant suites and report pass/fail as JSON.
    Verify {
        #[arg(long)]
        structure_samples: Option<usize>,
        #[arg(long)]
        connection_points: Option<usize>,
        #[arg(long)]
        classification_cases: Option<usize>,
        /// Negative control: perturb the metric by this multiple of the Euclidean one.
        #[arg(long, hide = true, allow_negative_numbers = true)]
        perturb_metric: Option<f64>,
    },
    /// Integrate and classify every cell of a parameter grid.
    Sweep,
}

fn run(cli: Cli) -> Outcome {
    let common = cli.common;
    let out = common.out.as_deref();
    let format = Format::pick(common.format, out);
    let mut doc = Document::load(common.config.as_deref())?;
    match cli.command {
        Command::Integrate {
            n,
            s,
            q,
            angles,
            t_end,
            step,
            record_every,
            frenet_out,
        } => {
            doc.set_nested("sig", "n", n)?;
            doc.set_nested("sig", "s", s)?;
            doc.set("q", q);
            doc.set_angles(&angles.flags());
            doc.set_nested("integrator", "t_end", t_end)?;
            doc.set_nested("integrator", "step", step)?;
            doc.set_nested("integrator", "record_every", record_every)?;
            let cfg: IntegrateConfig = doc.parse(IntegrateConfig::FIELDS)?;
            commands::run_integrate(cfg, out, format, frenet_out.as_deref())
        }
        Command::ClosedForm => {
            let cfg: ClosedFormConfig = doc.parse(ClosedFormConfig::FIELDS)?;
            commands::run_closed_form(cfg, common.seed.unwrap_or(0), out, format)
        }
        Command::Classify {
            trajectory,
            s,
            q,
            angles,
        } => {
            doc.set("trajectory", trajectory);
            doc.set("s", s);
            doc.set("q", q);
            doc.set_angles(&angles.flags());
            doc.set("tol", common.tol);
            let cfg: ClassifyConfig = doc.parse(ClassifyConfig::FIELDS)?;
            commands::run_classify(cfg, out)
        }
        Command::Invert {
            kappa1,
            kappa2,
            s,
            case,
            eps,
            branch,
        } => {
            doc.set("kappa1", kappa1);
            doc.set("kappa2", kappa2);
            doc.set("s", s);
            doc.set("case", case);
            doc.set("eps", eps);
            doc.set("branch", branch);
            let cfg: InvertConfig = doc.parse(InvertConfig::FIELDS)?;
            commands::run_invert(cfg, out)
        }
        Command::Verify {
            structure_samples,
            connection_points,
            classification_cases,
            perturb_metric,
        } => {
            let defaults = VerifyConfig::default();
            let cfg = VerifyConfig {
                seed: common.seed.unwrap_or(defaults.seed),
                structure_samples: structure_samples.unwrap_or(defaults.structure_samples),
                connection_points: connection_points.unwrap_or(defaults.connection_points),
                classification_cases: classification_cases.unwrap_or(defaults.classification_cases),
                metric_perturbation: perturb_metric.unwrap_or(0.0),
            };
            if common.config.is_some() {
                return Err(Failure::invalid("verify takes no config file"));
            }
            commands::run_verify(cfg, out)
        }
        Command::Sweep => {
            if common.config.is_none() {
                return Err(Failure::invalid("sweep needs a grid given with --config"));
            }
            doc.set("seed", common.seed);
            doc.set("tol", common.tol);
            let spec: SweepSpec = doc.parse(SweepSpec::FIELDS)?;
            sweep::run_sweep(spec, out, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
