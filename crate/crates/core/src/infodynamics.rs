//! Plug-in information theory over discretized features: entropies,
//! (conditional) mutual information and the per-frame information transfer
//! `I(Y; X_t | X_{1:t-1}) = H(Y | X_{1:t-1}) − H(Y | X_{1:t})`.
//!
//! All quantities are in bits. Joint histories are relabeled to dense state
//! ids in order of first occurrence, so memory grows with the number of
//! realized histories rather than `bins^t`, and identical partitions give
//! bit-identical estimates.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::{category_offset, ActivityTable, UserActivity};
use crate::model::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    #[default]
    EqualFrequency,
    EqualWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantizer {
    pub bins: usize,
    pub strategy: BinStrategy,
    /// Reserve bin 0 for exact zeros and split the rest among nonzeros.
    pub zero_bin: bool,
}

impl Default for Quantizer {
    fn default() -> Self {
        Quantizer { bins: 3, strategy: BinStrategy::EqualFrequency, zero_bin: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub bins: Vec<u32>,
    /// Strictly increasing; a value `v` lands in bin `offset + #{c < v}`.
    pub cuts: Vec<f64>,
    /// All values were identical and share bin 0.
    pub degenerate: bool,
}

/// Type-1 empirical quantile of sorted data: smallest `x` with `F(x) ≥ p`.
fn quantile_type1(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

impl Quantizer {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config(format!("need at least 2 bins, got {}", self.bins)));
        }
        Ok(())
    }

    /// Cut points learned from `values`, and the bin offset they apply on.
    fn cuts(&self, values: &[f64]) -> (Vec<f64>, u32) {
        let (pool, groups, offset): (Vec<f64>, usize, u32) = if self.zero_bin {
            (values.iter().copied().filter(|v| *v != 0.0).collect(), self.bins - 1, 1)
        } else {
            (values.to_vec(), self.bins, 0)
        };
        if pool.is_empty() || groups < 2 {
            return (Vec::new(), offset);
        }
        let mut sorted = pool;
        sorted.sort_by(f64::total_cmp);
        let mut cuts: Vec<f64> = match self.strategy {
            BinStrategy::EqualFrequency => {
                (1..groups).map(|j| quantile_type1(&sorted, j as f64 / groups as f64)).collect()
            }
            BinStrategy::EqualWidth => {
                let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
                (1..groups).map(|j| lo + (hi - lo) * j as f64 / groups as f64).collect()
            }
        };
        // the top cut at the maximum would leave its bin empty
        let max = sorted[sorted.len() - 1];
        cuts.retain(|c| *c < max);
        cuts.dedup();
        (cuts, offset)
    }

    /// Fit cut points on `values` and bin them. Equal values always share a
    /// bin; values equal to a cut go to the lower bin.
    pub fn quantize(&self, values: &[f64]) -> Result<Quantized> {
        self.validate()?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("cannot quantize non-finite value {v}")));
        }
        if values.windows(2).all(|w| w[0] == w[1]) {
            return Ok(Quantized { bins: vec![0; values.len()], cuts: Vec::new(), degenerate: true });
        }
        let (cuts, offset) = self.cuts(values);
        let bins = values
            .iter()
            .map(|&v| {
                if self.zero_bin && v == 0.0 {
                    0
                } else {
                    offset + cuts.partition_point(|&c| c < v) as u32
                }
            })
            .collect();
        Ok(Quantized { bins, cuts, degenerate: false })
    }
}

/// Relabel the joint values of several variables to dense ids in order of
/// first occurrence.
pub fn joint_states(vars: &[&[u32]], n: usize) -> (Vec<u32>, usize) {
    let mut ids = vec![0u32; n];
    let mut count = 1usize;
    for var in vars {
        assert_eq!(var.len(), n, "variables must have equal length");
        let mut map: HashMap<(u32, u32), u32> = HashMap::new();
        for i in 0..n {
            let next = map.len() as u32;
            ids[i] = *map.entry((ids[i], var[i])).or_insert(next);
        }
        count = map.len();
    }
    if vars.is_empty() && n == 0 {
        count = 0;
    }
    (ids, count)
}

fn dense(v: &[u32]) -> (Vec<u32>, usize) {
    joint_states(&[v], v.len())
}

/// `Σ c·log2 c` over nonzero counts.
fn sum_clogc(counts: impl IntoIterator<Item = u32>) -> f64 {
    counts.into_iter().filter(|&c| c > 1).map(|c| c as f64 * (c as f64).log2()).sum()
}

/// Plug-in Shannon entropy of a discrete sample.
pub fn entropy(y: &[u32]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let (ids, k) = dense(y);
    let mut counts = vec![0u32; k];
    for &i in &ids {
        counts[i as usize] += 1;
    }
    let n = y.len() as f64;
    (n.log2() - sum_clogc(counts) / n).max(0.0)
}

/// Miller–Madow corrected entropy: plug-in plus `(m − 1)/(2n·ln 2)` for `m`
/// occupied symbols.
pub fn entropy_miller_madow(y: &[u32]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let (_, m) = dense(y);
    entropy(y) + (m as f64 - 1.0) / (2.0 * y.len() as f64 * std::f64::consts::LN_2)
}

/// `H(Y | S)` for dense state ids `s` in `0..states`.
fn conditional_entropy_states(y: &[u32], s: &[u32], states: usize) -> f64 {
    let n = y.len();
    if n == 0 {
        return 0.0;
    }
    if states == 1 {
        // same arithmetic as the marginal, so conditioning on a constant is exact
        return entropy(y);
    }
    let (yd, ky) = dense(y);
    let mut joint = vec![0u32; states * ky];
    let mut marg = vec![0u32; states];
    for i in 0..n {
        joint[s[i] as usize * ky + yd[i] as usize] += 1;
        marg[s[i] as usize] += 1;
    }
    ((sum_clogc(marg) - sum_clogc(joint)) / n as f64).max(0.0)
}

/// `H(Y | X_1, …, X_k)` over the realized joint states of the `xs`.
pub fn conditional_entropy(y: &[u32], xs: &[&[u32]]) -> f64 {
    let (s, k) = joint_states(xs, y.len());
    conditional_entropy_states(y, &s, k.max(1))
}

/// `I(Y; X) = H(Y) − H(Y | X)`.
pub fn mutual_information(y: &[u32], x: &[u32]) -> f64 {
    (entropy(y) - conditional_entropy(y, &[x])).max(0.0)
}

/// `I(Y; X | Z_1, …, Z_k) = H(Y | Z) − H(Y | Z, X)`.
pub fn conditional_mutual_information(y: &[u32], x: &[u32], given: &[&[u32]]) -> f64 {
    let mut all = given.to_vec();
    all.push(x);
    (conditional_entropy(y, given) - conditional_entropy(y, &all)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransferOptions {
    /// Condition on at most this many preceding frames instead of the full
    /// history. Breaks the chain-rule identity; for sensitivity analysis.
    pub window: Option<usize>,
    /// Add the Miller–Madow term to every entropy.
    pub miller_madow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferPoint {
    /// 1-based frame.
    pub frame: usize,
    /// `I(Y; X_t | X_{1:t-1})`.
    pub transfer: f64,
    /// `H(Y | X_{1:t})`.
    pub cond_entropy: f64,
    /// `I(Y; X_t)`.
    pub instantaneous_mi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferSeries {
    pub target_entropy: f64,
    pub points: Vec<TransferPoint>,
}

impl TransferSeries {
    pub fn total_transfer(&self) -> f64 {
        self.points.iter().map(|p| p.transfer).sum()
    }
}

fn mm_correction(states: usize, n: usize) -> f64 {
    (states.max(1) as f64 - 1.0) / (2.0 * n as f64 * std::f64::consts::LN_2)
}

/// Information transfer of each frame's symbol to `y`, conditioning on
/// all earlier frames (or the last `window` of them).
pub fn information_transfer_series(y: &[u32], frames: &[Vec<u32>], opts: &TransferOptions) -> TransferSeries {
    let n = y.len();
    for f in frames {
        assert_eq!(f.len(), n, "frame symbols must align with the target");
    }
    let h_y = if opts.miller_madow { entropy_miller_madow(y) } else { entropy(y) };
    // conditional entropy with the bias term H(Y|S) gains from (m_YS − m_S)
    let h_given = |s: &[u32], k: usize| {
        let h = conditional_entropy_states(y, s, k.max(1));
        if opts.miller_madow && n > 0 {
            let (_, kys) = joint_states(&[s, y], n);
            (h + mm_correction(kys, n) - mm_correction(k, n)).max(0.0)
        } else {
            h
        }
    };

    let mut points = Vec::with_capacity(frames.len());
    let mut state = vec![0u32; n];
    let mut n_states = usize::from(n > 0);
    let mut prev_h = h_y;
    for t in 0..frames.len() {
        let before = match opts.window {
            None => prev_h,
            Some(w) => {
                let lo = t.saturating_sub(w);
                let vars: Vec<&[u32]> = frames[lo..t].iter().map(|v| v.as_slice()).collect();
                if vars.is_empty() {
                    h_y
                } else {
                    let (s, k) = joint_states(&vars, n);
                    h_given(&s, k)
                }
            }
        };
        let after = match opts.window {
            None => {
                let (s, k) = joint_states(&[&state, &frames[t]], n);
                if k == n_states {
                    // refinement split no state: same partition, same estimate
                    prev_h
                } else {
                    state = s;
                    n_states = k;
                    h_given(&state, n_states)
                }
            }
            Some(w) => {
                let lo = (t + 1).saturating_sub(w.max(1));
                let vars: Vec<&[u32]> = frames[lo..=t].iter().map(|v| v.as_slice()).collect();
                let (s, k) = joint_states(&vars, n);
                h_given(&s, k)
            }
        };
        let (xd, kx) = dense(&frames[t]);
        let mi = (h_y - h_given(&xd, kx)).max(0.0);
        points.push(TransferPoint {
            frame: t + 1,
            transfer: (before - after).max(0.0),
            cond_entropy: after,
            instantaneous_mi: mi,
            n,
        });
        prev_h = after;
    }
    TransferSeries { target_entropy: h_y, points }
}

/// Residual entropy `H(Y | X_{1:T})` of each feature, ascending (most
/// disclosing first), ties by name.
pub fn rank_features_by_residual_entropy(y: &[u32], features: &[(String, Vec<Vec<u32>>)], horizon: usize) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = features
        .par_iter()
        .map(|(name, frames)| {
            let vars: Vec<&[u32]> = frames.iter().take(horizon).map(|v| v.as_slice()).collect();
            (name.clone(), conditional_entropy(y, &vars))
        })
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Per-frame symbols of one category for a fixed population: the quantized
/// count, or the extra symbol `bins` for frames before the user joined.
pub fn category_symbols(
    table: &ActivityTable,
    users: &[&UserActivity],
    category: Category,
    quantizer: &Quantizer,
) -> Result<Vec<Vec<u32>>> {
    let offset = category_offset(table.scheme(), category)
        .ok_or_else(|| Error::UnknownFeature(format!("{} is not in the {:?} scheme", category.name(), table.scheme())))?;
    let missing = quantizer.bins as u32;
    (0..table.grid().frames())
        .map(|f| {
            let values: Vec<f64> = users.iter().map(|u| table.frame_counts(u, f)[offset] as f64).collect();
            let q = quantizer.quantize(&values)?;
            Ok(users
                .iter()
                .zip(q.bins)
                .map(|(u, b)| if (f as i64) < u.join_frame { missing } else { b })
                .collect())
        })
        .collect()
}

/// `feature,frame,transfer_bits,cond_entropy_bits,instantaneous_mi_bits,n`.
pub fn write_transfer_csv<W: Write>(mut out: W, series: &[(String, TransferSeries)]) -> Result<()> {
    writeln!(out, "feature,frame,transfer_bits,cond_entropy_bits,instantaneous_mi_bits,n")?;
    for (name, s) in series {
        for p in &s.points {
            writeln!(out, "{name},{},{},{},{},{}", p.frame, p.transfer, p.cond_entropy, p.instantaneous_mi, p.n)?;
        }
    }
    Ok(())
}

/// `rank,feature,residual_entropy_bits`.
pub fn write_ranking_csv<W: Write>(mut out: W, ranking: &[(String, f64)]) -> Result<()> {
    writeln!(out, "rank,feature,residual_entropy_bits")?;
    for (i, (name, h)) in ranking.iter().enumerate() {
        writeln!(out, "{},{name},{h}", i + 1)?;
    }
    Ok(())
}
