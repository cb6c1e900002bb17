//! Population scenarios: New Entry (newcomers admitted at every frame),
//! Fixed Population (frozen to first-frame actives) and users who exited
//! before a cutoff frame.

use std::collections::BTreeSet;
use std::io::Write;

use ndarray::Axis;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    aggregate_repeats, binarize, derive_seed, evaluate_split, is_degenerate, repeated_eval, stratified_split, EvalFrame, EvalSeries,
    RepeatOutcome, TrainSpec,
};
use crate::error::{Error, Result};
use crate::featurize::{ActivityTable, Encoding, JoinSource, TemporalDataset, UserActivity};
use crate::infodynamics::{category_symbols, information_transfer_series, Quantizer, TransferOptions, TransferSeries};
use crate::ingest::TraitLabels;
use crate::model::{BasicCategory, CategoryScheme, Event, TimeGrid, Trait, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CohortKind {
    NewEntry,
    FixedPopulation,
    /// Active before frame `cutoff` (0-based) and never from it on.
    Exited { cutoff: usize },
}

impl CohortKind {
    pub fn label(&self) -> String {
        match self {
            CohortKind::NewEntry => "new_entry".into(),
            CohortKind::FixedPopulation => "fixed_population".into(),
            CohortKind::Exited { cutoff } => format!("exited_{}", cutoff + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cohort {
    pub kind: CohortKind,
    pub users: BTreeSet<UserId>,
}

impl Cohort {
    pub fn contains(&self, user: &UserId) -> bool {
        self.users.contains(user)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// At least one revision in `frame`.
pub fn is_active(table: &ActivityTable, user: &UserActivity, frame: usize) -> bool {
    table.frame_counts(user, frame)[..BasicCategory::ALL.len()].iter().any(|&c| c > 0)
}

pub fn select_cohort(table: &ActivityTable, kind: CohortKind) -> Result<Cohort> {
    let frames = table.grid().frames();
    if let CohortKind::Exited { cutoff } = kind {
        if cutoff == 0 || cutoff >= frames {
            return Err(Error::Config(format!("cutoff frame {} must lie inside the grid's 2..={frames}", cutoff + 1)));
        }
    }
    let users: BTreeSet<UserId> = table
        .users()
        .iter()
        .filter(|u| match kind {
            CohortKind::NewEntry => u.first_active.is_some(),
            CohortKind::FixedPopulation => is_active(table, u, 0),
            CohortKind::Exited { cutoff } => {
                u.first_active.is_some_and(|f| f < cutoff) && (cutoff..frames).all(|f| !is_active(table, u, f))
            }
        })
        .map(|u| u.user.clone())
        .collect();
    if users.is_empty() {
        return Err(Error::EmptyCohort(kind.label()));
    }
    Ok(Cohort { kind, users })
}

/// Cohort selection straight from events.
pub fn select_cohort_from_events(events: &[Event], grid: TimeGrid, kind: CohortKind) -> Result<Cohort> {
    let table = ActivityTable::build(events, grid, CategoryScheme::Basic, JoinSource::FirstEvent)?;
    select_cohort(&table, kind)
}

/// `user_id,cohort`, one row per membership.
pub fn write_membership_csv<W: Write>(mut out: W, cohorts: &[&Cohort]) -> Result<()> {
    writeln!(out, "user_id,cohort")?;
    for c in cohorts {
        let label = c.kind.label();
        for u in &c.users {
            writeln!(out, "{u},{label}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeFpComparison {
    pub new_entry: EvalSeries,
    pub fixed_population: EvalSeries,
    /// `(AUC_NE − AUC_FP) / AUC_FP` per frame; `None` where either is absent.
    pub gain: Vec<(usize, Option<f64>)>,
    /// Pearson correlation of the two mean-AUC series over shared frames.
    pub pearson: Option<f64>,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Evaluate the same horizons on the New Entry and Fixed Population
/// datasets with identical seeds.
pub fn compare_ne_fp(
    table: &ActivityTable,
    labels: &TraitLabels,
    trait_: Trait,
    target: &str,
    spec: &TrainSpec,
    encoding: Encoding,
) -> Result<NeFpComparison> {
    let fp = select_cohort(table, CohortKind::FixedPopulation)?;
    let ne_series = table.series(encoding);
    let fp_series: Vec<TemporalDataset> =
        (1..=table.grid().frames()).map(|h| table.dataset_for(h, encoding, |u| fp.contains(u))).collect();
    let new_entry = repeated_eval(&ne_series, labels, trait_, target, spec)?;
    let fixed_population = repeated_eval(&fp_series, labels, trait_, target, spec)?;
    let mut gain = Vec::new();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for f in &new_entry.frames {
        let g = match (f.stats.as_ref(), fixed_population.frame(f.frame)) {
            (Some(ne), Some(fp)) => {
                a.push(ne.mean_auc);
                b.push(fp.mean_auc);
                Some((ne.mean_auc - fp.mean_auc) / fp.mean_auc)
            }
            _ => None,
        };
        gain.push((f.frame, g));
    }
    Ok(NeFpComparison { new_entry, fixed_population, gain, pearson: pearson(&a, &b) })
}

/// `frame,ne_mean_auc,fp_mean_auc,gain`.
pub fn write_gain_csv<W: Write>(mut out: W, cmp: &NeFpComparison) -> Result<()> {
    writeln!(out, "frame,ne_mean_auc,fp_mean_auc,gain")?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (frame, g) in &cmp.gain {
        let ne = cmp.new_entry.frame(*frame).map(|s| s.mean_auc);
        let fp = cmp.fixed_population.frame(*frame).map(|s| s.mean_auc);
        writeln!(out, "{frame},{},{},{}", fmt(ne), fmt(fp), fmt(*g))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitedEval {
    /// 0-based first frame after the exit.
    pub cutoff: usize,
    pub cohort_size: usize,
    /// Labeled exited users scored at every horizon.
    pub n_test: usize,
    /// Horizons `cutoff + 1 ..= T`.
    pub series: EvalSeries,
    /// Per count category, over the labeled exited users.
    pub transfer: Vec<(String, TransferSeries)>,
}

/// Train on labeled users outside the exited cohort and score the exited
/// users at every horizon from the cutoff on. Each repeat fits on a
/// stratified `train_fraction` subsample of the training pool.
#[allow(clippy::too_many_arguments)]
pub fn exited_eval(
    table: &ActivityTable,
    labels: &TraitLabels,
    trait_: Trait,
    target: &str,
    cutoff: usize,
    spec: &TrainSpec,
    encoding: Encoding,
    quantizer: &Quantizer,
) -> Result<ExitedEval> {
    spec.validate()?;
    let exited = select_cohort(table, CohortKind::Exited { cutoff })?;
    let frames = table.grid().frames();

    let test_users: Vec<&UserActivity> = table
        .users()
        .iter()
        .filter(|u| exited.contains(&u.user) && labels.get(&u.user, trait_).is_some())
        .collect();
    let test_classes: Vec<&str> = test_users.iter().map(|u| labels.get(&u.user, trait_).expect("filtered")).collect();
    let test_y = binarize(&test_classes, trait_, target)?;
    if test_users.is_empty() {
        return Err(Error::EmptyCohort("no labeled exited users".into()));
    }
    if is_degenerate(&test_y) {
        return Err(Error::DegeneratePrior("exited users carry a single class".into()));
    }

    let horizons: Vec<usize> = (cutoff + 1..=frames).collect();
    let evaluated: Vec<EvalFrame> = horizons
        .par_iter()
        .map(|&h| {
            let train_ds = table.dataset_for(h, encoding, |u| !exited.contains(u));
            let test_ds = table.dataset_for(h, encoding, |u| exited.contains(u));
            let (rows, classes) = train_ds.labeled(labels, trait_);
            let y = binarize(&classes, trait_, target)?;
            if rows.is_empty() || is_degenerate(&y) {
                return Ok(EvalFrame { frame: h, stats: None, note: Some("degenerate training pool".into()) });
            }
            let pool_x = train_ds.features.select(Axis(0), &rows);
            let (test_rows, _) = test_ds.labeled(labels, trait_);
            let test_x = test_ds.features.select(Axis(0), &test_rows);
            let outcomes: Vec<(RepeatOutcome, usize)> = (0..spec.n_repeats)
                .into_par_iter()
                .map(|r| {
                    let split = stratified_split(&y, spec.train_fraction, derive_seed(spec.seed, &[h as u64, r as u64, 2]))?;
                    let tx = pool_x.select(Axis(0), &split.train);
                    let ty: Vec<bool> = split.train.iter().map(|&i| y[i]).collect();
                    let out = evaluate_split(
                        tx.view(),
                        &ty,
                        test_x.view(),
                        &test_y,
                        &train_ds.columns,
                        spec,
                        derive_seed(spec.seed, &[h as u64, r as u64, 3]),
                    )?;
                    let rep = RepeatOutcome {
                        repeat: r,
                        auc: out.auc,
                        epr: out.epr,
                        lambda: out.model.lambda,
                        nonzero: out.model.nonzero(),
                    };
                    Ok((rep, split.train.len()))
                })
                .collect::<Result<_>>()?;
            let n_train = outcomes[0].1;
            let prior = test_y.iter().filter(|&&b| b).count() as f64 / test_y.len() as f64;
            let stats =
                aggregate_repeats(outcomes.into_iter().map(|o| o.0).collect(), n_train, test_y.len(), prior);
            Ok(EvalFrame { frame: h, stats: Some(stats), note: None })
        })
        .collect::<Result<_>>()?;

    let y_sym: Vec<u32> = test_y.iter().map(|&b| u32::from(b)).collect();
    let transfer = table
        .scheme()
        .categories()
        .into_par_iter()
        .map(|cat| {
            let symbols = category_symbols(table, &test_users, cat, quantizer)?;
            Ok((cat.name().to_string(), information_transfer_series(&y_sym, &symbols, &TransferOptions::default())))
        })
        .collect::<Result<_>>()?;

    Ok(ExitedEval {
        cutoff,
        cohort_size: exited.len(),
        n_test: test_users.len(),
        series: EvalSeries { frames: evaluated, n_repeats: spec.n_repeats, seed: spec.seed },
        transfer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_timestamp;

    fn ev(user: &str, ts: &str) -> Event {
        Event::new(user, parse_timestamp(ts).unwrap(), BasicCategory::Content)
    }

    #[test]
    fn definitions() {
        let grid = TimeGrid::new(2007, 1, 8).unwrap();
        let events = vec![
            ev("early", "2007-02-01T00:00:00Z"),
            ev("late", "2007-08-01T00:00:00Z"),
            ev("stayer", "2007-01-05T00:00:00Z"),
            ev("stayer", "2008-06-01T00:00:00Z"),
        ];
        let fp = select_cohort_from_events(&events, grid, CohortKind::FixedPopulation).unwrap();
        assert!(fp.contains(&"early".into()) && !fp.contains(&"late".into()));
        let ne = select_cohort_from_events(&events, grid, CohortKind::NewEntry).unwrap();
        assert_eq!(ne.len(), 3);
        let ex = select_cohort_from_events(&events, grid, CohortKind::Exited { cutoff: 4 }).unwrap();
        assert_eq!(ex.users, ["early", "late"].into_iter().map(UserId::from).collect());
        assert!(select_cohort_from_events(&events, grid, CohortKind::Exited { cutoff: 8 }).is_err());
        assert!(matches!(
            select_cohort_from_events(&events[2..], grid, CohortKind::Exited { cutoff: 1 }),
            Err(Error::EmptyCohort(_))
        ));
        let mut buf = Vec::new();
        write_membership_csv(&mut buf, &[&ex]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "user_id,cohort\nearly,exited_5\nlate,exited_5\n");
    }

    #[test]
    fn pearson_reference() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap() - 0.997_948_715_788_673_3).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}
