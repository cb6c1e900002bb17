//! Instantaneous and longitudinal activity features with missing flags,
//! and the nested series of temporal datasets.
//!
//! Frame blocks interleave `(count, flag)` per category, e.g. for the basic
//! scheme `CONTENT_i, p_CONTENT_i, TALK-C_i, p_TALK-C_i, …`. Frame numbers in
//! column names are 1-based; frame indices in the API are 0-based and a
//! horizon `h` covers frames `0..h`.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{FirstEdits, TraitLabels};
use crate::model::{BasicCategory, Category, CategoryScheme, Event, Theme, TimeGrid, Trait, UserId};

/// How per-frame counts are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// Counts of the frame alone.
    #[default]
    Incremental,
    /// Counts from the start of the grid through the frame.
    Cumulative,
}

/// Where a user's join frame comes from.
#[derive(Debug, Clone, Copy)]
pub enum JoinSource<'a> {
    /// First in-window event.
    FirstEvent,
    /// First-ever edit from the ingest side table (may predate the grid).
    SideTable(&'a FirstEdits),
}

/// Quarter offset of the user's first-ever edit; negative for users who
/// joined before the grid origin.
pub fn join_frame(user: &UserId, first_edits: &FirstEdits, grid: &TimeGrid) -> Result<i64> {
    first_edits
        .get(user)
        .map(|ts| grid.quarter_offset(ts))
        .ok_or_else(|| Error::MissingUser(user.0.clone()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameFeatures {
    pub user: UserId,
    pub frame: usize,
    pub counts: Vec<u32>,
    pub missing: Vec<u8>,
}

impl FrameFeatures {
    /// Interleaved `(count, flag)` block.
    pub fn block(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.missing)
            .flat_map(|(&c, &m)| [c as f64, m as f64])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalFeatures {
    pub user: UserId,
    pub horizon: usize,
    pub values: Vec<f64>,
}

fn add_event(counts: &mut [u32], ev: &Event, scheme: CategoryScheme) {
    counts[ev.category.index()] += 1;
    if scheme == CategoryScheme::Extended && ev.category == BasicCategory::Content {
        for theme in ev.themes.iter() {
            counts[BasicCategory::ALL.len() + theme.index()] += 1;
        }
    }
}

fn flag(frame: usize, join: i64) -> u8 {
    u8::from((frame as i64) < join)
}

/// Features of one user in one frame, counted directly from their events.
pub fn instantaneous_features<'a>(
    user: &UserId,
    events: impl IntoIterator<Item = &'a Event>,
    grid: &TimeGrid,
    scheme: CategoryScheme,
    frame: usize,
    join: i64,
) -> FrameFeatures {
    let mut counts = vec![0u32; scheme.len()];
    for ev in events {
        if ev.user == *user && grid.frame_of(&ev.timestamp).index() == Some(frame) {
            add_event(&mut counts, ev, scheme);
        }
    }
    let m = flag(frame, join);
    FrameFeatures { user: user.clone(), frame, counts, missing: vec![m; scheme.len()] }
}

/// Column names for a horizon in fixed order.
pub fn column_names(scheme: CategoryScheme, horizon: usize) -> Vec<String> {
    let cats = scheme.categories();
    let mut names = Vec::with_capacity(horizon * 2 * cats.len());
    for f in 1..=horizon {
        for c in &cats {
            names.push(format!("{}_{f}", c.name()));
            names.push(format!("p_{}_{f}", c.name()));
        }
    }
    names
}

/// Split a column name into (category, 1-based frame, is_flag).
pub fn parse_column_name(name: &str) -> Option<(Category, usize, bool)> {
    let (flag, rest) = match name.strip_prefix("p_") {
        Some(r) => (true, r),
        None => (false, name),
    };
    let (cat, frame) = rest.rsplit_once('_')?;
    let frame: usize = frame.parse().ok().filter(|f| *f >= 1)?;
    Some((cat.parse().ok()?, frame, flag))
}

/// Activity of one user over the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserActivity {
    pub user: UserId,
    pub join_frame: i64,
    /// First frame with at least one in-window revision.
    pub first_active: Option<usize>,
    /// Frame-major counts, `frames × categories`.
    pub counts: Vec<u32>,
}

/// Per-user, per-frame counts for every user seen in the grid; the common
/// source of all temporal datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityTable {
    grid: TimeGrid,
    scheme: CategoryScheme,
    users: Vec<UserActivity>,
}

impl ActivityTable {
    /// Out-of-window events are ignored. With a side table, the join frame
    /// is the earlier of the recorded first edit and the first in-window
    /// event, so a joined flag never coexists with recorded activity.
    pub fn build(events: &[Event], grid: TimeGrid, scheme: CategoryScheme, join: JoinSource<'_>) -> Result<Self> {
        let mut by_user: BTreeMap<&UserId, Vec<&Event>> = BTreeMap::new();
        for ev in events {
            if grid.contains(&ev.timestamp) {
                by_user.entry(&ev.user).or_default().push(ev);
            }
        }
        let ncat = scheme.len();
        let users = by_user
            .into_par_iter()
            .map(|(user, evs)| {
                let mut counts = vec![0u32; grid.frames() * ncat];
                let mut first_active: Option<usize> = None;
                for ev in evs {
                    let f = grid.frame_of(&ev.timestamp).index().expect("filtered to window");
                    add_event(&mut counts[f * ncat..(f + 1) * ncat], ev, scheme);
                    first_active = Some(first_active.map_or(f, |a| a.min(f)));
                }
                let first = first_active.expect("user has at least one event") as i64;
                let join_frame = match join {
                    JoinSource::FirstEvent => first,
                    JoinSource::SideTable(table) => join_frame(user, table, &grid)?.min(first),
                };
                Ok(UserActivity { user: user.clone(), join_frame, first_active, counts })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ActivityTable { grid, scheme, users })
    }

    /// Reassemble from parts (used by the binary cache). Users are sorted.
    pub fn from_parts(grid: TimeGrid, scheme: CategoryScheme, mut users: Vec<UserActivity>) -> Result<Self> {
        let width = grid.frames() * scheme.len();
        for u in &users {
            if u.counts.len() != width {
                return Err(Error::Cache(format!("user {} has {} counts, expected {width}", u.user, u.counts.len())));
            }
        }
        users.sort_by(|a, b| a.user.cmp(&b.user));
        if users.windows(2).any(|w| w[0].user == w[1].user) {
            return Err(Error::Cache("duplicate user".into()));
        }
        Ok(ActivityTable { grid, scheme, users })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scheme(&self) -> CategoryScheme {
        self.scheme
    }

    pub fn users(&self) -> &[UserActivity] {
        &self.users
    }

    pub fn find(&self, user: &UserId) -> Option<&UserActivity> {
        self.users.binary_search_by(|u| u.user.cmp(user)).ok().map(|i| &self.users[i])
    }

    pub fn frame_counts<'a>(&self, activity: &'a UserActivity, frame: usize) -> &'a [u32] {
        let n = self.scheme.len();
        &activity.counts[frame * n..(frame + 1) * n]
    }

    pub fn frame_features(&self, activity: &UserActivity, frame: usize) -> FrameFeatures {
        let m = flag(frame, activity.join_frame);
        FrameFeatures {
            user: activity.user.clone(),
            frame,
            counts: self.frame_counts(activity, frame).to_vec(),
            missing: vec![m; self.scheme.len()],
        }
    }

    fn write_row(&self, activity: &UserActivity, horizon: usize, encoding: Encoding, out: &mut [f64]) {
        let n = self.scheme.len();
        let mut running = vec![0u64; n];
        for f in 0..horizon {
            let m = flag(f, activity.join_frame) as f64;
            let counts = self.frame_counts(activity, f);
            for (c, &count) in counts.iter().enumerate() {
                running[c] += count as u64;
                let v = match encoding {
                    Encoding::Incremental => count as f64,
                    Encoding::Cumulative => running[c] as f64,
                };
                out[(f * n + c) * 2] = v;
                out[(f * n + c) * 2 + 1] = m;
            }
        }
    }

    pub fn longitudinal(&self, activity: &UserActivity, horizon: usize, encoding: Encoding) -> LongitudinalFeatures {
        assert!(horizon >= 1 && horizon <= self.grid.frames(), "horizon {horizon} outside grid");
        let mut values = vec![0.0; horizon * 2 * self.scheme.len()];
        self.write_row(activity, horizon, encoding, &mut values);
        LongitudinalFeatures { user: activity.user.clone(), horizon, values }
    }

    /// Users with at least one in-window revision in frames `0..horizon`.
    pub fn is_eligible(activity: &UserActivity, horizon: usize) -> bool {
        activity.first_active.is_some_and(|f| f < horizon)
    }

    pub fn dataset(&self, horizon: usize, encoding: Encoding) -> TemporalDataset {
        self.dataset_for(horizon, encoding, |_| true)
    }

    /// Temporal dataset restricted to eligible users accepted by `keep`.
    pub fn dataset_for(&self, horizon: usize, encoding: Encoding, keep: impl Fn(&UserId) -> bool) -> TemporalDataset {
        assert!(horizon >= 1 && horizon <= self.grid.frames(), "horizon {horizon} outside grid");
        let rows: Vec<&UserActivity> = self
            .users
            .iter()
            .filter(|u| Self::is_eligible(u, horizon) && keep(&u.user))
            .collect();
        let width = horizon * 2 * self.scheme.len();
        let mut features = Array2::<f64>::zeros((rows.len(), width));
        for (r, act) in rows.iter().enumerate() {
            let row = features.row_mut(r).into_slice().expect("standard layout");
            self.write_row(act, horizon, encoding, row);
        }
        TemporalDataset {
            horizon,
            scheme: self.scheme,
            columns: column_names(self.scheme, horizon),
            users: rows.iter().map(|u| u.user.clone()).collect(),
            features,
        }
    }

    pub fn series(&self, encoding: Encoding) -> Vec<TemporalDataset> {
        (1..=self.grid.frames()).map(|h| self.dataset(h, encoding)).collect()
    }
}

/// The design matrix at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDataset {
    pub horizon: usize,
    pub scheme: CategoryScheme,
    pub columns: Vec<String>,
    /// Sorted by id; row `r` of `features` belongs to `users[r]`.
    pub users: Vec<UserId>,
    pub features: Array2<f64>,
}

impl TemporalDataset {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Row indices and class values of users labeled for `trait_`.
    pub fn labeled(&self, labels: &TraitLabels, trait_: Trait) -> (Vec<usize>, Vec<&'static str>) {
        let mut rows = Vec::new();
        let mut classes = Vec::new();
        for (i, u) in self.users.iter().enumerate() {
            if let Some(c) = labels.get(u, trait_).and_then(|c| trait_.canonical_class(c)) {
                rows.push(i);
                classes.push(c);
            }
        }
        (rows, classes)
    }

    pub fn select_rows(&self, rows: &[usize]) -> TemporalDataset {
        TemporalDataset {
            horizon: self.horizon,
            scheme: self.scheme,
            columns: self.columns.clone(),
            users: rows.iter().map(|&r| self.users[r].clone()).collect(),
            features: self.features.select(ndarray::Axis(0), rows),
        }
    }

    pub fn restrict(&self, keep: impl Fn(&UserId) -> bool) -> TemporalDataset {
        let rows: Vec<usize> = (0..self.len()).filter(|&r| keep(&self.users[r])).collect();
        self.select_rows(&rows)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `user_id,<cat>_<i>,p_<cat>_<i>,…`; values are integral.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["user_id".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
        let mut record = Vec::with_capacity(header.len());
        for (r, user) in self.users.iter().enumerate() {
            record.clear();
            record.push(user.0.clone());
            record.extend(self.features.row(r).iter().map(|v| format!("{}", *v as u64)));
            w.write_record(&record).map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Every horizon `1..=T`, warning about horizons without labeled users.
pub fn build_temporal_dataset_series(
    events: &[Event],
    grid: TimeGrid,
    scheme: CategoryScheme,
    join: JoinSource<'_>,
    encoding: Encoding,
    labels: Option<(&TraitLabels, Trait)>,
) -> Result<Vec<TemporalDataset>> {
    let table = ActivityTable::build(events, grid, scheme, join)?;
    let series = table.series(encoding);
    if let Some((labels, trait_)) = labels {
        for ds in &series {
            if ds.labeled(labels, trait_).0.is_empty() {
                log::warn!("horizon {}: no users labeled for {trait_}", ds.horizon);
            }
        }
    }
    Ok(series)
}

/// Names of the count columns for one category across frames `1..=horizon`.
pub fn category_columns(cat: Category, horizon: usize) -> Vec<String> {
    (1..=horizon).map(|f| format!("{}_{f}", cat.name())).collect()
}

/// Column offset of a category within a frame block.
pub fn category_offset(scheme: CategoryScheme, cat: Category) -> Option<usize> {
    match cat {
        Category::Basic(b) => Some(b.index()),
        Category::Theme(t) if scheme == CategoryScheme::Extended => Some(BasicCategory::ALL.len() + Theme::index(t)),
        Category::Theme(_) => None,
    }
}
