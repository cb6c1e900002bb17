use std::io::Write;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::cv::fit_with_cv;
use super::logreg::FittedModel;
use super::metrics::{auc, epr};
use super::split::{derive_seed, stratified_split};
use super::{binarize, is_degenerate, TrainSpec};
use crate::error::{Error, Result};
use crate::featurize::{parse_column_name, TemporalDataset};
use crate::ingest::TraitLabels;
use crate::model::Trait;

/// Result of training on one split and scoring the held-out side.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub auc: f64,
    pub epr: f64,
    pub model: FittedModel,
}

/// Fit with cross-validated λ on the training rows and score the test rows.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_split(
    train_x: ArrayView2<'_, f64>,
    train_y: &[bool],
    test_x: ArrayView2<'_, f64>,
    test_y: &[bool],
    columns: &[String],
    spec: &TrainSpec,
    seed: u64,
) -> Result<SplitOutcome> {
    let (model, _) = fit_with_cv(train_x, train_y, columns, spec, seed)?;
    let scores = model.decision_function(test_x);
    Ok(SplitOutcome { auc: auc(&scores, test_y)?, epr: epr(&scores, test_y)?, model })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub auc: f64,
    pub epr: f64,
    pub lambda: f64,
    pub nonzero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameStats {
    pub mean_auc: f64,
    pub std_auc: f64,
    pub mean_epr: f64,
    pub std_epr: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub prior: f64,
    pub repeats: Vec<RepeatOutcome>,
}

/// One horizon of an evaluation; `stats` is `None` when the frame could
/// not be evaluated (reason in `note`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalFrame {
    /// 1-based horizon.
    pub frame: usize,
    pub stats: Option<FrameStats>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSeries {
    pub frames: Vec<EvalFrame>,
    pub n_repeats: usize,
    pub seed: u64,
}

impl EvalSeries {
    pub fn frame(&self, horizon: usize) -> Option<&FrameStats> {
        self.frames.iter().find(|f| f.frame == horizon).and_then(|f| f.stats.as_ref())
    }

    /// Per-repeat AUCs at a horizon, in repeat order.
    pub fn repeat_aucs(&self, horizon: usize) -> Option<Vec<f64>> {
        self.frame(horizon).map(|s| s.repeats.iter().map(|r| r.auc).collect())
    }
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for n = 1).
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Mean and spread of per-repeat outcomes.
pub fn aggregate_repeats(repeats: Vec<RepeatOutcome>, n_train: usize, n_test: usize, prior: f64) -> FrameStats {
    let aucs: Vec<f64> = repeats.iter().map(|r| r.auc).collect();
    let eprs: Vec<f64> = repeats.iter().map(|r| r.epr).collect();
    let (mean_auc, std_auc) = mean_std(&aucs);
    let (mean_epr, std_epr) = mean_std(&eprs);
    FrameStats { mean_auc, std_auc, mean_epr, std_epr, n_train, n_test, prior, repeats }
}

fn labeled_target(ds: &TemporalDataset, labels: &TraitLabels, trait_: Trait, target: &str) -> Result<(Vec<usize>, Vec<bool>)> {
    let (rows, classes) = ds.labeled(labels, trait_);
    let y = binarize(&classes, trait_, target)?;
    Ok((rows, y))
}

fn eval_frame(
    ds: &TemporalDataset,
    labels: &TraitLabels,
    trait_: Trait,
    target: &str,
    spec: &TrainSpec,
) -> Result<FrameStats> {
    let (rows, y) = labeled_target(ds, labels, trait_, target)?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!("no labeled users at horizon {}", ds.horizon)));
    }
    if is_degenerate(&y) {
        return Err(Error::DegeneratePrior(format!("single class among {} labeled users", y.len())));
    }
    let x = ds.features.select(Axis(0), &rows);
    let h = ds.horizon as u64;
    let repeats: Vec<(RepeatOutcome, usize, usize)> = (0..spec.n_repeats)
        .into_par_iter()
        .map(|r| {
            let split = stratified_split(&y, spec.train_fraction, derive_seed(spec.seed, &[h, r as u64, 0]))?;
            let tx = x.select(Axis(0), &split.train);
            let ty: Vec<bool> = split.train.iter().map(|&i| y[i]).collect();
            let sx = x.select(Axis(0), &split.test);
            let sy: Vec<bool> = split.test.iter().map(|&i| y[i]).collect();
            let out = evaluate_split(tx.view(), &ty, sx.view(), &sy, &ds.columns, spec, derive_seed(spec.seed, &[h, r as u64, 1]))?;
            let rep = RepeatOutcome {
                repeat: r,
                auc: out.auc,
                epr: out.epr,
                lambda: out.model.lambda,
                nonzero: out.model.nonzero(),
            };
            Ok((rep, split.train.len(), split.test.len()))
        })
        .collect::<Result<_>>()?;
    let (n_train, n_test) = (repeats[0].1, repeats[0].2);
    let prior = y.iter().filter(|&&b| b).count() as f64 / y.len() as f64;
    Ok(aggregate_repeats(repeats.into_iter().map(|r| r.0).collect(), n_train, n_test, prior))
}

/// Repeated stratified holdout per horizon: each repeat splits the labeled
/// users, picks λ by CV on the training side and scores the test side.
/// Frames whose data is degenerate are reported absent.
pub fn repeated_eval(
    series: &[TemporalDataset],
    labels: &TraitLabels,
    trait_: Trait,
    target: &str,
    spec: &TrainSpec,
) -> Result<EvalSeries> {
    spec.validate()?;
    trait_
        .canonical_class(target)
        .ok_or_else(|| Error::UnknownClass { trait_, class: target.to_string() })?;
    let frames = series
        .par_iter()
        .map(|ds| match eval_frame(ds, labels, trait_, target, spec) {
            Ok(stats) => Ok(EvalFrame { frame: ds.horizon, stats: Some(stats), note: None }),
            Err(e) if e.is_degenerate() => {
                log::warn!("horizon {}: {e}", ds.horizon);
                Ok(EvalFrame { frame: ds.horizon, stats: None, note: Some(e.to_string()) })
            }
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalSeries { frames, n_repeats: spec.n_repeats, seed: spec.seed })
}

/// One model per horizon trained on every labeled user, λ by CV. Degenerate
/// horizons are skipped.
pub fn fit_frame_models(
    series: &[TemporalDataset],
    labels: &TraitLabels,
    trait_: Trait,
    target: &str,
    spec: &TrainSpec,
) -> Result<Vec<(usize, FittedModel)>> {
    spec.validate()?;
    let fitted: Vec<Option<(usize, FittedModel)>> = series
        .par_iter()
        .map(|ds| {
            let (rows, y) = labeled_target(ds, labels, trait_, target)?;
            if rows.is_empty() || is_degenerate(&y) {
                return Ok(None);
            }
            let x = ds.features.select(Axis(0), &rows);
            match fit_with_cv(x.view(), &y, &ds.columns, spec, derive_seed(spec.seed, &[ds.horizon as u64, u64::MAX])) {
                Ok((m, _)) => Ok(Some((ds.horizon, m))),
                Err(e) if e.is_degenerate() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(fitted.into_iter().flatten().collect())
}

/// `frame,mean_auc,std_auc,mean_epr,std_epr,n_train,n_test,prior`; absent
/// frames have empty metric fields.
pub fn write_eval_csv<W: Write>(mut out: W, series: &EvalSeries) -> Result<()> {
    writeln!(out, "frame,mean_auc,std_auc,mean_epr,std_epr,n_train,n_test,prior")?;
    for f in &series.frames {
        match &f.stats {
            Some(s) => writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                f.frame, s.mean_auc, s.std_auc, s.mean_epr, s.std_epr, s.n_train, s.n_test, s.prior
            )?,
            None => writeln!(out, "{},,,,,,,", f.frame)?,
        }
    }
    Ok(())
}

/// `frame,repeat,auc,epr,lambda,nonzero`.
pub fn write_repeats_csv<W: Write>(mut out: W, series: &EvalSeries) -> Result<()> {
    writeln!(out, "frame,repeat,auc,epr,lambda,nonzero")?;
    for f in &series.frames {
        for r in f.stats.iter().flat_map(|s| &s.repeats) {
            writeln!(out, "{},{},{},{},{},{}", f.frame, r.repeat, r.auc, r.epr, r.lambda, r.nonzero)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub mean_diff: f64,
    /// One-sided p-value for mean(after − before) > 0.
    pub p_value: f64,
}

/// Paired one-sided t-test that `after` exceeds `before`.
pub fn paired_t_test(before: &[f64], after: &[f64]) -> Result<TTest> {
    if before.len() != after.len() || before.len() < 2 {
        return Err(Error::Config(format!(
            "paired t-test needs two equal samples of size ≥ 2, got {} and {}",
            before.len(),
            after.len()
        )));
    }
    let d: Vec<f64> = before.iter().zip(after).map(|(b, a)| a - b).collect();
    let (m, s) = mean_std(&d);
    let n = d.len() as f64;
    let df = n - 1.0;
    if s == 0.0 {
        let (t, p) = if m > 0.0 {
            (f64::INFINITY, 0.0)
        } else if m < 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (0.0, 0.5)
        };
        return Ok(TTest { t, df, mean_diff: m, p_value: p });
    }
    let t = m / (s / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Config(e.to_string()))?;
    Ok(TTest { t, df, mean_diff: m, p_value: dist.sf(t) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficient {
    pub weight: f64,
    /// False when the column is missing from the model or was constant on
    /// its training rows; the weight is then 0.
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub frames: Vec<usize>,
    pub features: Vec<String>,
    /// `values[frame][feature]`.
    pub values: Vec<Vec<Coefficient>>,
}

/// Weights (standardized units) of the requested columns across per-frame
/// models.
pub fn coefficient_trajectories(models: &[(usize, FittedModel)], features: &[String]) -> Result<CoefficientTable> {
    for f in features {
        let known = parse_column_name(f).is_some() && models.iter().any(|(_, m)| m.column_index(f).is_some());
        if !known {
            return Err(Error::UnknownFeature(f.clone()));
        }
    }
    let values = models
        .iter()
        .map(|(_, m)| {
            features
                .iter()
                .map(|f| match m.column_index(f) {
                    Some(j) if m.scale[j] > 0.0 => Coefficient { weight: m.weights[j], present: true },
                    _ => Coefficient { weight: 0.0, present: false },
                })
                .collect()
        })
        .collect();
    Ok(CoefficientTable { frames: models.iter().map(|(h, _)| *h).collect(), features: features.to_vec(), values })
}

/// `frame,feature,weight,present`.
pub fn write_coefficients_csv<W: Write>(mut out: W, table: &CoefficientTable) -> Result<()> {
    writeln!(out, "frame,feature,weight,present")?;
    for (frame, row) in table.frames.iter().zip(&table.values) {
        for (name, c) in table.features.iter().zip(row) {
            writeln!(out, "{frame},{name},{},{}", c.weight, u8::from(c.present))?;
        }
    }
    Ok(())
}
