//! Descriptive corpus statistics: active and new users per frame, and
//! class-conditional shares of each category in users' revisions.
//!
//! A share is a category count over the user's total revision count. Basic
//! shares of one user sum to 1; theme shares use the same denominator and
//! can overlap, so they need not.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cohort::is_active;
use crate::error::{Error, Result};
use crate::featurize::{ActivityTable, UserActivity};
use crate::ingest::TraitLabels;
use crate::model::{BasicCategory, Trait};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameDynamics {
    /// 1-based.
    pub frame: usize,
    pub active: u64,
    pub new: u64,
    /// Revisions per category of the table's scheme.
    pub revisions: Vec<u64>,
}

pub fn population_dynamics(table: &ActivityTable) -> Vec<FrameDynamics> {
    let ncat = table.scheme().len();
    let frames = table.grid().frames();
    let zero = || vec![FrameDynamics { frame: 0, active: 0, new: 0, revisions: vec![0; ncat] }; frames];
    let mut out = table
        .users()
        .par_iter()
        .fold(zero, |mut acc, u| {
            for (f, slot) in acc.iter_mut().enumerate() {
                if is_active(table, u, f) {
                    slot.active += 1;
                }
                if u.first_active == Some(f) {
                    slot.new += 1;
                }
                for (r, &c) in slot.revisions.iter_mut().zip(table.frame_counts(u, f)) {
                    *r += c as u64;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.active += y.active;
                x.new += y.new;
                for (r, s) in x.revisions.iter_mut().zip(y.revisions) {
                    *r += s;
                }
            }
            a
        });
    for (f, slot) in out.iter_mut().enumerate() {
        slot.frame = f + 1;
    }
    out
}

/// `frame,active,new,<category counts…>`.
pub fn write_dynamics_csv<W: Write>(mut out: W, table: &ActivityTable, rows: &[FrameDynamics]) -> Result<()> {
    let names: Vec<String> = table.scheme().categories().iter().map(|c| c.name().to_string()).collect();
    writeln!(out, "frame,active,new,{}", names.join(","))?;
    for r in rows {
        let counts: Vec<String> = r.revisions.iter().map(u64::to_string).collect();
        writeln!(out, "{},{},{},{}", r.frame, r.active, r.new, counts.join(","))?;
    }
    Ok(())
}

/// How per-user shares are combined within a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ShareMode {
    /// Mean of per-user shares.
    #[default]
    Unweighted,
    /// Class total per category over class total revisions.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassShare {
    pub class: &'static str,
    pub category: String,
    pub mean_share: f64,
    pub users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassTemporalShare {
    pub class: &'static str,
    pub category: String,
    /// 1-based.
    pub frame: usize,
    /// `None` when no user of the class was active in the frame.
    pub mean_share: Option<f64>,
    pub users: usize,
}

fn totals(table: &ActivityTable, u: &UserActivity, frames: std::ops::Range<usize>) -> Vec<u64> {
    let mut t = vec![0u64; table.scheme().len()];
    for f in frames {
        for (a, &c) in t.iter_mut().zip(table.frame_counts(u, f)) {
            *a += c as u64;
        }
    }
    t
}

fn combine(per_user: &[Vec<u64>], mode: ShareMode, ncat: usize) -> Vec<f64> {
    let basic = BasicCategory::ALL.len();
    match mode {
        ShareMode::Unweighted => {
            let mut acc = vec![0.0; ncat];
            for counts in per_user {
                let total: u64 = counts[..basic].iter().sum();
                for (a, &c) in acc.iter_mut().zip(counts) {
                    *a += c as f64 / total as f64;
                }
            }
            acc.iter().map(|a| a / per_user.len() as f64).collect()
        }
        ShareMode::Pooled => {
            let mut sums = vec![0u64; ncat];
            for counts in per_user {
                for (s, &c) in sums.iter_mut().zip(counts) {
                    *s += c;
                }
            }
            let total: u64 = sums[..basic].iter().sum();
            sums.iter().map(|&s| s as f64 / total as f64).collect()
        }
    }
}

fn labeled_users<'a>(table: &'a ActivityTable, labels: &TraitLabels, trait_: Trait) -> Vec<(&'a UserActivity, &'static str)> {
    table
        .users()
        .iter()
        .filter_map(|u| labels.get(&u.user, trait_).and_then(|c| trait_.canonical_class(c)).map(|c| (u, c)))
        .collect()
}

/// Mean share of each category per class over the whole grid. Users with
/// no revisions are left out.
pub fn class_feature_shares(table: &ActivityTable, labels: &TraitLabels, trait_: Trait, mode: ShareMode) -> Result<Vec<ClassShare>> {
    let users = labeled_users(table, labels, trait_);
    if users.is_empty() {
        return Err(Error::DegeneratePrior(format!("no users labeled for {trait_}")));
    }
    let cats = table.scheme().categories();
    let frames = table.grid().frames();
    let mut out = Vec::new();
    for &class in trait_.vocabulary() {
        let per_user: Vec<Vec<u64>> = users
            .iter()
            .filter(|(_, c)| *c == class)
            .map(|(u, _)| totals(table, u, 0..frames))
            .filter(|t| t[..BasicCategory::ALL.len()].iter().any(|&c| c > 0))
            .collect();
        if per_user.is_empty() {
            continue;
        }
        for (cat, share) in cats.iter().zip(combine(&per_user, mode, cats.len())) {
            out.push(ClassShare { class, category: cat.name().to_string(), mean_share: share, users: per_user.len() });
        }
    }
    Ok(out)
}

/// Frame-resolved class shares over the users active in each frame.
pub fn class_temporal_means(
    table: &ActivityTable,
    labels: &TraitLabels,
    trait_: Trait,
    mode: ShareMode,
) -> Result<Vec<ClassTemporalShare>> {
    let users = labeled_users(table, labels, trait_);
    if users.is_empty() {
        return Err(Error::DegeneratePrior(format!("no users labeled for {trait_}")));
    }
    let cats = table.scheme().categories();
    let mut out = Vec::new();
    for &class in trait_.vocabulary() {
        if !users.iter().any(|(_, c)| *c == class) {
            continue;
        }
        for f in 0..table.grid().frames() {
            let per_user: Vec<Vec<u64>> = users
                .iter()
                .filter(|(u, c)| *c == class && is_active(table, u, f))
                .map(|(u, _)| totals(table, u, f..f + 1))
                .collect();
            let shares = (!per_user.is_empty()).then(|| combine(&per_user, mode, cats.len()));
            for (k, cat) in cats.iter().enumerate() {
                out.push(ClassTemporalShare {
                    class,
                    category: cat.name().to_string(),
                    frame: f + 1,
                    mean_share: shares.as_ref().map(|s| s[k]),
                    users: per_user.len(),
                });
            }
        }
    }
    out.sort_by(|a, b| (a.class, &a.category, a.frame).cmp(&(b.class, &b.category, b.frame)));
    Ok(out)
}

/// `class,category,mean_share`.
pub fn write_shares_csv<W: Write>(mut out: W, rows: &[ClassShare]) -> Result<()> {
    writeln!(out, "class,category,mean_share")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.class, r.category, r.mean_share)?;
    }
    Ok(())
}

/// `class,category,frame,mean_share`; absent values are empty.
pub fn write_temporal_csv<W: Write>(mut out: W, rows: &[ClassTemporalShare]) -> Result<()> {
    writeln!(out, "class,category,frame,mean_share")?;
    for r in rows {
        let v = r.mean_share.map(|x| x.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{v}", r.class, r.category, r.frame)?;
    }
    Ok(())
}
