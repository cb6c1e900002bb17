use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;

use super::logreg::{log_grid, FittedModel, Problem};
use super::metrics::auc;
use super::split::{complement, stratified_folds};
use super::{LambdaGrid, Selection, TrainSpec};
use crate::error::{Error, Result};

/// Validation AUC along the λ path.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Decreasing.
    pub lambdas: Vec<f64>,
    pub mean_auc: Vec<f64>,
    /// Standard error of the fold mean.
    pub se_auc: Vec<f64>,
    pub folds: usize,
    pub chosen_index: usize,
}

impl CvResult {
    pub fn chosen(&self) -> f64 {
        self.lambdas[self.chosen_index]
    }
}

fn select(mean: &[f64], se: &[f64], rule: Selection) -> usize {
    // index 0 is the largest λ, so scanning forward prefers sparser models
    let mut best = 0;
    for i in 1..mean.len() {
        if mean[i] > mean[best] {
            best = i;
        }
    }
    match rule {
        Selection::BestMean => best,
        Selection::OneStandardError => {
            let threshold = mean[best] - se[best];
            (0..=best).find(|&i| mean[i] >= threshold).unwrap_or(best)
        }
    }
}

/// Pick λ by stratified k-fold cross-validation on validation AUC. Each fold
/// walks the grid from the largest λ with warm starts. An automatic grid
/// starts at the largest null-gradient bound over the full data and every
/// training fold, so its first value is the intercept-only model everywhere.
pub fn cross_validate_lambda(x: ArrayView2<'_, f64>, y: &[bool], spec: &TrainSpec, seed: u64) -> Result<CvResult> {
    spec.validate()?;
    let full = Problem::new(x, y)?;
    let single = match &spec.lambda_grid {
        LambdaGrid::Auto { count, .. } => *count == 1,
        LambdaGrid::Explicit(v) => v.iter().all(|l| *l == v[0]),
    };
    if single {
        let lambdas = match &spec.lambda_grid {
            LambdaGrid::Auto { .. } => vec![full.null_gradient_bound().max(0.0)],
            LambdaGrid::Explicit(v) => vec![v[0]],
        };
        return Ok(CvResult { mean_auc: vec![f64::NAN], se_auc: vec![0.0], lambdas, folds: 0, chosen_index: 0 });
    }
    let pos = y.iter().filter(|&&b| b).count();
    let smallest = pos.min(y.len() - pos);
    let k = spec.cv_folds.min(smallest);
    if k < 2 {
        return Err(Error::DegeneratePrior(format!("{smallest} members in the minority class, need 2 for CV")));
    }
    if k < spec.cv_folds {
        log::warn!("reducing CV from {} to {k} folds for a minority class of {smallest}", spec.cv_folds);
    }
    let folds = stratified_folds(y, k, seed)?;
    let fold_problems: Vec<(Problem, ndarray::Array2<f64>, Vec<bool>)> = folds
        .par_iter()
        .map(|val| {
            let train = complement(y.len(), val);
            let tx = x.select(Axis(0), &train);
            let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let problem = Problem::new(tx.view(), &ty)?;
            let vy: Vec<bool> = val.iter().map(|&i| y[i]).collect();
            Ok((problem, x.select(Axis(0), val), vy))
        })
        .collect::<Result<_>>()?;
    let mut lambdas = match &spec.lambda_grid {
        LambdaGrid::Auto { count, decades } => {
            let top = fold_problems.iter().map(|f| f.0.null_gradient_bound()).fold(full.null_gradient_bound(), f64::max);
            // pad so rounding in the fold gradients cannot leave a weight alive
            log_grid(top * (1.0 + 1e-9), *count, *decades)
        }
        LambdaGrid::Explicit(v) => v.clone(),
    };
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.dedup();

    let opts = spec.solver_options();
    let cols: Vec<String> = (0..x.ncols()).map(|j| j.to_string()).collect();
    let per_fold: Vec<Vec<f64>> = fold_problems
        .par_iter()
        .map(|(problem, vx, vy)| {
            let mut warm = None;
            let mut scores = Vec::with_capacity(lambdas.len());
            for &lambda in &lambdas {
                let sol = problem.solve(lambda, spec.penalty, warm.as_ref(), &opts);
                let model: FittedModel = problem.model(&sol, &cols, lambda, spec.penalty);
                scores.push(auc(&model.decision_function(vx.view()), vy)?);
                warm = Some(sol);
            }
            Ok(scores)
        })
        .collect::<Result<_>>()?;

    let kf = k as f64;
    let mut mean_auc = Vec::with_capacity(lambdas.len());
    let mut se_auc = Vec::with_capacity(lambdas.len());
    for l in 0..lambdas.len() {
        let m = per_fold.iter().map(|f| f[l]).sum::<f64>() / kf;
        let var = per_fold.iter().map(|f| (f[l] - m).powi(2)).sum::<f64>() / (kf - 1.0);
        mean_auc.push(m);
        se_auc.push((var / kf).sqrt());
    }
    let chosen_index = select(&mean_auc, &se_auc, spec.selection);
    Ok(CvResult { lambdas, mean_auc, se_auc, folds: k, chosen_index })
}

/// Cross-validate λ, then refit on all rows at the chosen value.
pub fn fit_with_cv(
    x: ArrayView2<'_, f64>,
    y: &[bool],
    columns: &[String],
    spec: &TrainSpec,
    seed: u64,
) -> Result<(FittedModel, CvResult)> {
    let cv = cross_validate_lambda(x, y, spec, seed)?;
    let problem = Problem::new(x, y)?;
    let opts = spec.solver_options();
    // follow the path down to the chosen λ so the refit starts close by
    let mut warm = None;
    for &lambda in &cv.lambdas[..=cv.chosen_index] {
        warm = Some(problem.solve(lambda, spec.penalty, warm.as_ref(), &opts));
    }
    let sol = warm.expect("non-empty grid");
    let model = problem.model(&sol, columns, cv.chosen(), spec.penalty);
    if !model.converged {
        log::warn!("solver stopped after {} iterations at lambda {}", model.iterations, model.lambda);
    }
    Ok((model, cv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_rules() {
        let mean = [0.5, 0.6, 0.7, 0.69];
        let se = [0.0, 0.01, 0.15, 0.01];
        assert_eq!(select(&mean, &se, Selection::BestMean), 2);
        assert_eq!(select(&mean, &se, Selection::OneStandardError), 1);
        // exact ties go to the larger λ
        assert_eq!(select(&[0.5, 0.7, 0.7], &[0.0; 3], Selection::BestMean), 1);
    }
}
