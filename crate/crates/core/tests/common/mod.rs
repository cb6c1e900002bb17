//! Test-side reference implementations, written without reusing any
//! library internals so they can serve as independent oracles.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mann–Whitney by counting every positive/negative pair.
pub fn auc_pairwise(scores: &[f64], y: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        if !y[i] {
            continue;
        }
        for j in 0..scores.len() {
            if y[j] {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Equal precision-recall point from a sweep over `steps + 1` evenly
/// spaced thresholds between the largest and smallest score. Each
/// threshold is evaluated by brute-force counting of `score >= t`.
pub fn epr_sweep(scores: &[f64], y: &[bool], steps: usize) -> f64 {
    let pos = y.iter().filter(|&&b| b).count() as f64;
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut curve: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for k in 0..=steps {
        let t = if k == steps { lo } else { hi - (hi - lo) * k as f64 / steps as f64 };
        let mut tp = 0.0;
        let mut fp = 0.0;
        for (s, &l) in scores.iter().zip(y) {
            if *s >= t {
                if l {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        if tp == 0.0 {
            continue;
        }
        let point = (tp / pos, tp / (tp + fp));
        if curve.last() != Some(&point) {
            curve.push(point);
        }
    }
    for w in curve.windows(2) {
        let ((r0, p0), (r1, p1)) = (w[0], w[1]);
        let (d0, d1) = (p0 - r0, p1 - r1);
        if d1 == 0.0 {
            return r1;
        }
        if d0.signum() != d1.signum() && d0 != 0.0 {
            return r0 + d0 / (d0 - d1) * (r1 - r0);
        }
    }
    panic!("sweep never crossed the diagonal")
}

/// Empirical joint distribution of several discrete variables.
pub fn joint_table(vars: &[&[u32]]) -> BTreeMap<Vec<u32>, f64> {
    let n = vars[0].len();
    let mut table = BTreeMap::new();
    for i in 0..n {
        let key: Vec<u32> = vars.iter().map(|v| v[i]).collect();
        *table.entry(key).or_insert(0.0) += 1.0;
    }
    for c in table.values_mut() {
        *c /= n as f64;
    }
    table
}

pub fn entropy_oracle(vars: &[&[u32]]) -> f64 {
    if vars.is_empty() {
        return 0.0;
    }
    -joint_table(vars).values().map(|p| p * p.log2()).sum::<f64>()
}

/// `Σ p(x,y) log p(x,y) / (p(x) p(y))` over the enumerated joint table.
pub fn mi_oracle(y: &[u32], x: &[u32]) -> f64 {
    let joint = joint_table(&[y, x]);
    let py = joint_table(&[y]);
    let px = joint_table(&[x]);
    joint
        .iter()
        .map(|(k, p)| p * (p / (py[&vec![k[0]]] * px[&vec![k[1]]])).log2())
        .sum()
}

/// `Σ p(y,x,z) log p(y,x,z) p(z) / (p(y,z) p(x,z))` with `z` the joint of `given`.
pub fn cmi_oracle(y: &[u32], x: &[u32], given: &[&[u32]]) -> f64 {
    let mut all: Vec<&[u32]> = vec![y, x];
    all.extend_from_slice(given);
    let full = joint_table(&all);
    let mut yz: Vec<&[u32]> = vec![y];
    yz.extend_from_slice(given);
    let mut xz: Vec<&[u32]> = vec![x];
    xz.extend_from_slice(given);
    let p_yz = joint_table(&yz);
    let p_xz = joint_table(&xz);
    let p_z = if given.is_empty() { BTreeMap::from([(vec![], 1.0)]) } else { joint_table(given) };
    full.iter()
        .map(|(k, p)| {
            let z = k[2..].to_vec();
            let mut ky = vec![k[0]];
            ky.extend_from_slice(&z);
            let mut kx = vec![k[1]];
            kx.extend_from_slice(&z);
            p * (p * p_z[&z] / (p_yz[&ky] * p_xz[&kx])).log2()
        })
        .sum()
}

/// `H(Y | X…) = H(Y, X…) − H(X…)` by enumeration.
pub fn cond_entropy_oracle(y: &[u32], xs: &[&[u32]]) -> f64 {
    let mut all: Vec<&[u32]> = vec![y];
    all.extend_from_slice(xs);
    entropy_oracle(&all) - entropy_oracle(xs)
}

pub fn random_symbols(r: &mut impl Rng, n: usize, alphabet: u32) -> Vec<u32> {
    (0..n).map(|_| r.random_range(0..alphabet)).collect()
}

/// Labels with both classes present.
pub fn random_labels(r: &mut impl Rng, n: usize, p: f64) -> Vec<bool> {
    loop {
        let y: Vec<bool> = (0..n).map(|_| r.random::<f64>() < p).collect();
        if y.iter().any(|&b| b) && y.iter().any(|&b| !b) {
            return y;
        }
    }
}

/// Target plus `t` frames, each frame a noisy function of the target and
/// the previous frame so the histories are neither independent nor copies.
pub fn transfer_dataset(seed: u64, n: usize, t: usize, bins: u32) -> (Vec<u32>, Vec<Vec<u32>>) {
    let mut r = rng(seed);
    let y = random_symbols(&mut r, n, 2);
    let mut frames: Vec<Vec<u32>> = Vec::with_capacity(t);
    for f in 0..t {
        let frame = (0..n)
            .map(|i| match r.random_range(0..3) {
                0 => y[i] % bins,
                1 if f > 0 => frames[f - 1][i],
                _ => r.random_range(0..bins),
            })
            .collect();
        frames.push(frame);
    }
    (y, frames)
}

/// 50 datasets with T ≤ 6, n ≤ 500 and at most 3 bins.
pub fn transfer_datasets() -> Vec<(Vec<u32>, Vec<Vec<u32>>)> {
    let mut r = rng(600);
    (0..50)
        .map(|k| {
            let n = r.random_range(1..=500);
            let t = r.random_range(1..=6);
            let bins = r.random_range(1..=3);
            transfer_dataset(1000 + k, n, t, bins)
        })
        .collect()
}

/// Standard normal design with labels of prevalence about 0.4.
pub fn random_problem(seed: u64, n: usize, d: usize) -> (ndarray::Array2<f64>, Vec<bool>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng(seed);
    let x = ndarray::Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut r));
    let y = random_labels(&mut r, n, 0.4);
    (x, y)
}

pub mod corpus;
pub mod dumpgen;
