//! CSV and JSON exchange formats for trajectories and Frenet series.
//!
//! Numbers are written in Rust's shortest round-trip form, so files read back
//! bit-for-bit.

use std::io::{Read, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::frenet::FrenetSeries;
use crate::model_space::{ModelSpace, Point, SpaceSignature, Tangent};

pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// `t, x_1..x_n, y_1..y_n, z_1..z_s, vx_1.., vy_1.., vz_1.., speed, eta_1..eta_s`.
pub fn trajectory_columns(sig: &SpaceSignature) -> Vec<String> {
    let (n, s) = (sig.n(), sig.s());
    let mut cols = vec!["t".to_string()];
    for prefix in ["x", "y"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend((1..=s).map(|a| format!("z_{a}")));
    for prefix in ["vx", "vy"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend((1..=s).map(|a| format!("vz_{a}")));
    cols.push("speed".into());
    cols.extend((1..=s).map(|a| format!("eta_{a}")));
    cols
}

fn sample_row(space: &ModelSpace, traj: &Trajectory, k: usize) -> Vec<f64> {
    let p = traj.points[k].coords();
    let v = traj.velocities[k].comps();
    let mut row = Vec::with_capacity(2 * p.len() + 2 + traj.sig.s());
    row.push(traj.times[k]);
    row.extend(p.iter());
    row.extend(v.iter());
    row.push(space.norm_at(p, v));
    row.extend(space.eta_at(p, v));
    row
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let space = ModelSpace::new(traj.sig);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_columns(&traj.sig))?;
    for k in 0..traj.len() {
        w.write_record(sample_row(&space, traj, k).into_iter().map(fmt_num))?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_json(traj: &Trajectory) -> Value {
    let space = ModelSpace::new(traj.sig);
    let cols = trajectory_columns(&traj.sig);
    let samples: Vec<Value> = (0..traj.len())
        .map(|k| {
            let row = sample_row(&space, traj, k);
            Value::Object(cols.iter().cloned().zip(row.into_iter().map(Value::from)).collect())
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("n".into(), traj.sig.n().into());
    doc.insert("s".into(), traj.sig.s().into());
    doc.insert("q".into(), traj.q.map_or(Value::Null, Value::from));
    doc.insert("samples".into(), Value::Array(samples));
    Value::Object(doc)
}

pub fn write_trajectory_json<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &trajectory_json(traj))?;
    writeln!(out)?;
    Ok(())
}

/// Signature implied by the trajectory column names.
fn signature_from_columns(cols: &[String]) -> Result<SpaceSignature> {
    let count = |prefix: &str| {
        cols.iter()
            .filter(|c| c.strip_prefix(prefix).is_some_and(|r| r.parse::<usize>().is_ok()))
            .count()
    };
    let sig = SpaceSignature::new(count("x_"), count("z_"))?;
    let expected = trajectory_columns(&sig);
    for name in &expected {
        if !cols.contains(name) {
            return Err(Error::invalid(format!("trajectory is missing column {name:?}")));
        }
    }
    Ok(sig)
}

fn build_trajectory(
    sig: SpaceSignature,
    rows: impl Iterator<Item = Result<Vec<f64>>>,
    q: Option<f64>,
) -> Result<Trajectory> {
    let dim = sig.dim();
    let (mut times, mut points, mut velocities) = (Vec::new(), Vec::new(), Vec::new());
    for row in rows {
        let row = row?;
        times.push(row[0]);
        let p = Point::new(&sig, row[1..1 + dim].to_vec())?;
        let v = Tangent::new(p.clone(), row[1 + dim..1 + 2 * dim].to_vec())?;
        points.push(p);
        velocities.push(v);
    }
    Trajectory::new(sig, times, points, velocities, q)
}

fn parse_num(field: &str, col: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("column {col:?}: cannot parse {field:?} as a number")))
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(input);
    let cols: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let sig = signature_from_columns(&cols)?;
    let wanted: Vec<(usize, String)> = trajectory_columns(&sig)
        .into_iter()
        .take(1 + 2 * sig.dim())
        .map(|name| (cols.iter().position(|c| *c == name).unwrap_or_default(), name))
        .collect();
    let rows = rdr.records().map(|rec| {
        let rec = rec?;
        wanted
            .iter()
            .map(|(idx, name)| parse_num(rec.get(*idx).unwrap_or(""), name))
            .collect::<Result<Vec<f64>>>()
    });
    build_trajectory(sig, rows, None)
}

pub fn read_trajectory_json<R: Read>(input: R) -> Result<Trajectory> {
    let doc: Value = serde_json::from_reader(input)?;
    let samples = doc
        .get("samples")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid("trajectory JSON needs a \"samples\" array"))?;
    let first = samples
        .first()
        .and_then(Value::as_object)
        .ok_or_else(|| Error::invalid("trajectory JSON has no samples"))?;
    let sig = signature_from_columns(&first.keys().cloned().collect::<Vec<_>>())?;
    if let (Some(n), Some(s)) = (doc.get("n").and_then(Value::as_u64), doc.get("s").and_then(Value::as_u64)) {
        if (n as usize, s as usize) != (sig.n(), sig.s()) {
            return Err(Error::invalid("trajectory JSON n/s disagree with its sample fields"));
        }
    }
    let q = doc.get("q").and_then(Value::as_f64);
    let names: Vec<String> = trajectory_columns(&sig).into_iter().take(1 + 2 * sig.dim()).collect();
    let rows = samples.iter().map(|sample| {
        names
            .iter()
            .map(|name| {
                sample
                    .get(name)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::invalid(format!("sample is missing numeric field {name:?}")))
            })
            .collect::<Result<Vec<f64>>>()
    });
    build_trajectory(sig, rows, q)
}

/// Reads a trajectory file, JSON if it starts with `{`, CSV otherwise.
pub fn read_trajectory_path(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        read_trajectory_json(text.as_bytes())
    } else {
        read_trajectory_csv(text.as_bytes())
    }
}

pub fn write_frenet_csv<W: Write>(series: &FrenetSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "kappa1", "kappa2", "kappa3", "order"])?;
    let opt = |k: Option<f64>| k.map(fmt_num).unwrap_or_default();
    for i in 0..series.len() {
        w.write_record([
            fmt_num(series.times[i]),
            opt(series.kappa1[i]),
            opt(series.kappa2[i]),
            opt(series.kappa3[i]),
            series.defined_order[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
