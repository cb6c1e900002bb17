//! Ranking metrics: ROC AUC via midranks and the equal precision-recall
//! point (ePR).

use crate::error::{Error, Result};

fn check(scores: &[f64], y: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != y.len() {
        return Err(Error::Config(format!("{} scores for {} labels", scores.len(), y.len())));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Config(format!("non-finite score {bad}")));
    }
    let pos = y.iter().filter(|&&b| b).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegeneratePrior(format!("{pos} positives, {neg} negatives")));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve: P(score⁺ > score⁻) + ½·P(tie).
///
/// Computed from the rank sum of the positives with tied scores sharing
/// their average rank; O(n log n).
pub fn auc(scores: &[f64], y: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, y)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // rank sums are kept doubled so midranks stay integral
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, average (i + j + 2) / 2
        let doubled_mid = (i + j + 2) as u64;
        let tied_pos = order[i..=j].iter().filter(|&&k| y[k]).count() as u64;
        doubled_rank_sum += doubled_mid * tied_pos;
        i = j + 1;
    }
    let (p, n) = (pos as u64, neg as u64);
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2 * p * n) as f64)
}

/// One point of the precision-recall sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// How the ePR value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    /// A sweep point lies exactly on precision = recall.
    Exact,
    /// Linear interpolation between the two points straddling the diagonal.
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epr {
    pub value: f64,
    pub crossing: Crossing,
}

/// PR points for thresholds at each distinct score, highest first.
/// Thresholds that admit no true positive are skipped and the curve is
/// anchored at (recall 0, precision 1).
pub fn pr_curve(scores: &[f64], y: &[bool]) -> Result<Vec<PrPoint>> {
    let (pos, _) = check(scores, y)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![PrPoint { recall: 0.0, precision: 1.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if tp > 0 {
            points.push(PrPoint { recall: tp as f64 / pos as f64, precision: tp as f64 / (tp + fp) as f64 });
        }
    }
    Ok(points)
}

/// First crossing of a PR polyline with the precision = recall diagonal.
pub fn diagonal_crossing(points: &[PrPoint]) -> Option<Epr> {
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let da = a.precision - a.recall;
        let db = b.precision - b.recall;
        if db == 0.0 {
            return Some(Epr { value: b.recall, crossing: Crossing::Exact });
        }
        if da > 0.0 && db < 0.0 || da < 0.0 && db > 0.0 {
            let t = da / (da - db);
            let value = a.recall + t * (b.recall - a.recall);
            return Some(Epr { value, crossing: Crossing::Interpolated });
        }
    }
    None
}

/// Value where the precision-recall curve meets precision = recall.
pub fn epr_detail(scores: &[f64], y: &[bool]) -> Result<Epr> {
    let points = pr_curve(scores, y)?;
    // The anchor sits above the diagonal and the final point (recall 1,
    // precision = prevalence < 1) below it, so a crossing always exists.
    Ok(diagonal_crossing(&points).expect("PR curve crosses the diagonal"))
}

pub fn epr(scores: &[f64], y: &[bool]) -> Result<f64> {
    epr_detail(scores, y).map(|e| e.value)
}
