//! One-vs-all trait prediction per timeframe.

mod cv;
mod dump;
mod eval;
mod logreg;
mod metrics;
mod split;

pub use cv::{cross_validate_lambda, fit_with_cv, CvResult};
pub use dump::{parse_model_dump, write_model_dump, ModelDump, MODEL_DUMP_HEADER};
pub use eval::{
    aggregate_repeats, coefficient_trajectories, evaluate_split, fit_frame_models, paired_t_test, repeated_eval, write_coefficients_csv,
    write_eval_csv, write_repeats_csv, Coefficient, CoefficientTable, EvalFrame, EvalSeries, FrameStats,
    RepeatOutcome, SplitOutcome, TTest,
};
pub use logreg::{FittedModel, Penalty, Problem, Solution, SolverOptions, Standardizer};
pub use metrics::{auc, diagonal_crossing, epr, epr_detail, pr_curve, Crossing, Epr, PrPoint};
pub use split::{complement, derive_seed, rng, stratified_folds, stratified_split, Split};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Trait;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// `count` log-spaced values from the null-gradient bound of the
    /// training data down by `decades` orders of magnitude.
    Auto { count: usize, decades: f64 },
    Explicit(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto { count: 30, decades: 4.0 }
    }
}

/// How cross-validation picks λ from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Largest λ whose mean validation AUC is within one standard error of
    /// the best.
    #[default]
    OneStandardError,
    /// Best mean validation AUC, ties toward larger λ.
    BestMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub lambda_grid: LambdaGrid,
    pub cv_folds: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub n_repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub penalty: Penalty,
    pub selection: Selection,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            lambda_grid: LambdaGrid::default(),
            cv_folds: 5,
            max_iters: 2000,
            tolerance: 1e-7,
            n_repeats: 10,
            train_fraction: 2.0 / 3.0,
            seed: 0,
            penalty: Penalty::L1,
            selection: Selection::OneStandardError,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match &self.lambda_grid {
            LambdaGrid::Auto { count, decades } if *count == 0 || !(*decades >= 0.0) => {
                return bad(format!("lambda grid of {count} values over {decades} decades"));
            }
            LambdaGrid::Explicit(v) if v.is_empty() || v.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) => {
                return bad("explicit lambda grid must be non-empty, finite and non-negative".into());
            }
            _ => {}
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds = {}", self.cv_folds));
        }
        if self.max_iters == 0 || self.n_repeats == 0 {
            return bad("max_iters and n_repeats must be positive".into());
        }
        if !(self.tolerance >= 0.0) {
            return bad(format!("tolerance = {}", self.tolerance));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction = {}", self.train_fraction));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { max_iters: self.max_iters, tolerance: self.tolerance }
    }

    /// 64-bit FNV-1a digest of the JSON form, recorded in model dumps.
    pub fn hash(&self) -> u64 {
        let json = serde_json::to_vec(self).expect("spec serializes");
        fnv1a(&json)
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// One-vs-all target: `true` iff the class equals `target`. Warns when the
/// result has a single class.
pub fn binarize(classes: &[&str], trait_: Trait, target: &str) -> Result<Vec<bool>> {
    let target = trait_
        .canonical_class(target)
        .ok_or_else(|| Error::UnknownClass { trait_, class: target.to_string() })?;
    let mut y = Vec::with_capacity(classes.len());
    for c in classes {
        let c = trait_
            .canonical_class(c)
            .ok_or_else(|| Error::UnknownClass { trait_, class: c.to_string() })?;
        y.push(c == target);
    }
    if is_degenerate(&y) {
        log::warn!("{trait_}={target}: degenerate prior over {} users", y.len());
    }
    Ok(y)
}

pub fn is_degenerate(y: &[bool]) -> bool {
    let pos = y.iter().filter(|&&b| b).count();
    pos == 0 || pos == y.len()
}
