//! Text model dumps.
//!
//! ```text
//! # traitleak-model v1
//! # lambda=0.0123
//! # intercept=-0.41
//! # penalty=l1
//! # seed=7
//! # spec_hash=0123456789abcdef
//! feature,weight,mean,scale
//! CONTENT_1,0.52,3.1,2.2
//! ```
//!
//! Further `# key=value` lines are kept as free-form metadata. Floats use
//! the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::logreg::{FittedModel, Penalty};
use crate::error::{Error, Result};

pub const MODEL_DUMP_HEADER: &str = "# traitleak-model v1";

const COLUMNS: &str = "feature,weight,mean,scale";
const RESERVED: [&str; 6] = ["lambda", "intercept", "penalty", "converged", "iterations", "spec_hash"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDump {
    pub model: FittedModel,
    pub spec_hash: u64,
    /// Everything else from the metadata block, e.g. seed, trait, frame.
    pub metadata: BTreeMap<String, String>,
}

pub fn write_model_dump<W: Write>(mut out: W, dump: &ModelDump) -> Result<()> {
    let m = &dump.model;
    writeln!(out, "{MODEL_DUMP_HEADER}")?;
    writeln!(out, "# lambda={}", m.lambda)?;
    writeln!(out, "# intercept={}", m.intercept)?;
    writeln!(out, "# penalty={}", match m.penalty {
        Penalty::L1 => "l1",
        Penalty::L2 => "l2",
    })?;
    writeln!(out, "# converged={}", m.converged)?;
    writeln!(out, "# iterations={}", m.iterations)?;
    writeln!(out, "# spec_hash={:016x}", dump.spec_hash)?;
    for (k, v) in &dump.metadata {
        if RESERVED.contains(&k.as_str()) || k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::ModelFormat(format!("metadata key {k:?} cannot be written")));
        }
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{COLUMNS}")?;
    for j in 0..m.columns.len() {
        writeln!(out, "{},{},{},{}", m.columns[j], m.weights[j], m.mean[j], m.scale[j])?;
    }
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::ModelFormat(format!("line {line}: {msg}"))
}

fn float(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| bad(line, format!("{key} is not a number: {v:?}")))?;
    if !x.is_finite() {
        return Err(bad(line, format!("{key} is not finite")));
    }
    Ok(x)
}

pub fn parse_model_dump<R: BufRead>(input: R) -> Result<ModelDump> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| Error::ModelFormat("empty input".into()))?;
    if first?.trim_end() != MODEL_DUMP_HEADER {
        return Err(bad(1, "missing model header"));
    }
    let mut meta = BTreeMap::new();
    let mut saw_columns = false;
    let (mut columns, mut weights, mut mean, mut scale) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if !saw_columns {
            if let Some(kv) = line.strip_prefix("# ") {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad(n, "metadata line without '='"))?;
                if meta.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(bad(n, format!("duplicate metadata key {k:?}")));
                }
            } else if line == COLUMNS {
                saw_columns = true;
            } else {
                return Err(bad(n, "expected metadata or column header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 || fields[0].is_empty() {
            return Err(bad(n, "expected feature,weight,mean,scale"));
        }
        let (w, mu, s) = (float(n, "weight", fields[1])?, float(n, "mean", fields[2])?, float(n, "scale", fields[3])?);
        if s < 0.0 || (s == 0.0 && w != 0.0) {
            return Err(bad(n, "weight on a constant column or negative scale"));
        }
        if columns.iter().any(|c| c == fields[0]) {
            return Err(bad(n, format!("duplicate feature {}", fields[0])));
        }
        columns.push(fields[0].to_string());
        weights.push(w);
        mean.push(mu);
        scale.push(s);
    }
    if !saw_columns {
        return Err(Error::ModelFormat("missing column header".into()));
    }
    let mut take = |k: &str| meta.remove(k).ok_or_else(|| Error::ModelFormat(format!("missing metadata {k}")));
    let lambda = float(0, "lambda", &take("lambda")?)?;
    let intercept = float(0, "intercept", &take("intercept")?)?;
    let penalty = take("penalty")?.parse::<Penalty>().map_err(|e| Error::ModelFormat(e.to_string()))?;
    let converged = take("converged")?.parse::<bool>().map_err(|_| Error::ModelFormat("bad converged flag".into()))?;
    let iterations = take("iterations")?.parse::<usize>().map_err(|_| Error::ModelFormat("bad iteration count".into()))?;
    let spec_hash = u64::from_str_radix(&take("spec_hash")?, 16).map_err(|_| Error::ModelFormat("bad spec hash".into()))?;
    if lambda < 0.0 {
        return Err(Error::ModelFormat("negative lambda".into()));
    }
    Ok(ModelDump {
        model: FittedModel { columns, weights, intercept, lambda, penalty, mean, scale, converged, iterations },
        spec_hash,
        metadata: meta,
    })
}
