use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Derive a child seed from a parent seed and a path of indices.
///
/// Every random decision in the toolkit flows from one user-supplied seed
/// through this function (splitmix64 finalizer over the path).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn class_members(y: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let neg = (0..y.len()).filter(|&i| !y[i]).collect();
    let pos = (0..y.len()).filter(|&i| y[i]).collect();
    (neg, pos)
}

fn check_classes(neg: usize, pos: usize, min: usize) -> Result<()> {
    if neg < min || pos < min {
        return Err(Error::DegeneratePrior(format!(
            "{pos} positive / {neg} negative examples, need at least {min} of each"
        )));
    }
    Ok(())
}

/// Stratified holdout: each class contributes `round(fraction × size)`
/// members to the training side, kept within `1..size` so both sides see
/// both classes. Indices are returned sorted.
pub fn stratified_split(y: &[bool], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let (mut neg, mut pos) = class_members(y);
    check_classes(neg.len(), pos.len(), 2)?;
    let mut rng = rng(seed);
    neg.shuffle(&mut rng);
    pos.shuffle(&mut rng);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in [&neg, &pos] {
        let k = ((train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Stratified k-fold assignment; returns the validation indices of each fold.
pub fn stratified_folds(y: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let (mut neg, mut pos) = class_members(y);
    check_classes(neg.len(), pos.len(), k)?;
    let mut rng = rng(seed);
    neg.shuffle(&mut rng);
    pos.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, &idx) in neg.iter().chain(pos.iter()).enumerate() {
        folds[i % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Complement of `part` within `0..n` (`part` sorted).
pub fn complement(n: usize, part: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - part.len());
    let mut j = 0;
    for i in 0..n {
        if j < part.len() && part[j] == i {
            j += 1;
        } else {
            out.push(i);
        }
    }
    out
}
