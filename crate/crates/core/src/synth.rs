//! Synthetic event corpora with planted trait↔behaviour signal.
//!
//! Each user draws a class from the priors, an arrival frame and exit
//! frame, and a lifetime activity multiplier. In every frame from arrival
//! up to exit, the count of each basic category is Poisson with mean
//! `activity × (base + s·offset_class) × drift`, where `s` is the signal
//! strength. Timestamps are uniform within the frame.
//!
//! An optional stayer trait gives some never-exiting users an extra
//! per-frame multiplier on one category. With a class-skewed prevalence it
//! makes that category a proxy for the class among long-lived users only,
//! which is what drives the `exit_amplify` reference corpus: once the late
//! frames reveal the trait directly, models stop leaning on the early proxy
//! and score exited users on the features that do carry over.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{derive_seed, rng};
use crate::error::{Error, Result};
use crate::ingest::TraitLabels;
use crate::model::{BasicCategory, Event, Theme, ThemeSet, TimeGrid, Trait, UserId};

const NCAT: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    pub prior: f64,
    /// Added to the base rates, scaled by the signal strength.
    pub offset: [f64; NCAT],
}

/// Multiply the rate of `category` from frame `from_frame` (0-based) on,
/// for one class or for everybody.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    #[serde(default)]
    pub class: Option<String>,
    pub category: BasicCategory,
    pub from_frame: usize,
    pub multiplier: f64,
}

/// Users arriving at or after `from_frame` use `signal_strength` instead
/// of the global one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateSignal {
    pub from_frame: usize,
    pub signal_strength: f64,
}

/// Hidden per-user propensity that multiplies one category's rate by a
/// per-frame factor. Only users who never exit can carry it; each does so
/// with the probability listed for their class (same order as `classes`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayerTrait {
    pub category: BasicCategory,
    /// One entry per frame.
    pub multiplier: Vec<f64>,
    pub prevalence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub name: String,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub n_users: usize,
    pub origin_year: i32,
    pub origin_month: u32,
    pub frames: usize,
    /// Expected edits per frame per basic category.
    pub base_rates: [f64; NCAT],
    pub classes: Vec<ClassSpec>,
    pub signal_strength: f64,
    /// Probability of arriving in each frame; sums to 1.
    pub arrival: Vec<f64>,
    /// Probability of leaving at the start of each frame, applied from the
    /// frame after arrival on.
    pub exit_hazard: Vec<f64>,
    #[serde(default)]
    pub drift: Vec<DriftSpec>,
    #[serde(default)]
    pub late_signal: Option<LateSignal>,
    #[serde(default)]
    pub stayer_trait: Option<StayerTrait>,
    /// Gamma shape of the per-user activity multiplier (mean 1); `None`
    /// gives every user multiplier 1.
    #[serde(default)]
    pub activity_shape: Option<f64>,
    /// Chance that a CONTENT event carries one uniformly drawn theme.
    #[serde(default)]
    pub theme_probability: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserTruth {
    pub user: UserId,
    pub class: String,
    /// 0-based; the user has at least one event here.
    pub arrival: usize,
    /// 0-based first frame without events from then on, if inside the grid.
    pub exit: Option<usize>,
    pub last_active: usize,
    pub activity: f64,
    pub stayer_trait: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthTruth {
    pub users: Vec<UserTruth>,
    /// `class_rates[class][frame][category]`: expected counts before the
    /// per-user activity multiplier, for users on the global signal.
    pub class_rates: Vec<Vec<[f64; NCAT]>>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub events: Vec<Event>,
    pub labels: TraitLabels,
    pub truth: SynthTruth,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl SynthConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.origin_year, self.origin_month, self.frames)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        check(self.n_users > 0, || "n_users must be positive".into())?;
        check(!self.classes.is_empty(), || "no classes".into())?;
        for c in &self.classes {
            check(self.trait_.canonical_class(&c.name).is_some(), || format!("class {} not in {} vocabulary", c.name, self.trait_))?;
            check(c.prior >= 0.0, || format!("negative prior for {}", c.name))?;
        }
        let prior_sum: f64 = self.classes.iter().map(|c| c.prior).sum();
        check((prior_sum - 1.0).abs() < 1e-9, || format!("priors sum to {prior_sum}"))?;
        check(self.signal_strength >= 0.0, || "negative signal strength".into())?;
        check(self.arrival.len() == self.frames && self.exit_hazard.len() == self.frames, || {
            format!("arrival and exit_hazard need {} entries", self.frames)
        })?;
        check(self.arrival.iter().all(|p| *p >= 0.0), || "negative arrival probability".into())?;
        let arrival_sum: f64 = self.arrival.iter().sum();
        check((arrival_sum - 1.0).abs() < 1e-9, || format!("arrival probabilities sum to {arrival_sum}"))?;
        check(self.exit_hazard.iter().all(|h| (0.0..=1.0).contains(h)), || "exit hazards must lie in [0, 1]".into())?;
        check(self.base_rates.iter().all(|r| *r >= 0.0 && r.is_finite()), || "base rates must be non-negative".into())?;
        for d in &self.drift {
            check(d.multiplier >= 0.0 && d.multiplier.is_finite(), || "drift multiplier must be non-negative".into())?;
            check(d.from_frame < self.frames, || format!("drift starts after the grid ({})", d.from_frame))?;
            if let Some(c) = &d.class {
                check(self.classes.iter().any(|k| &k.name == c), || format!("drift names unknown class {c}"))?;
            }
        }
        if let Some(l) = self.late_signal {
            check(l.signal_strength >= 0.0 && l.from_frame < self.frames, || "bad late signal".into())?;
        }
        if let Some(t) = &self.stayer_trait {
            check(t.multiplier.len() == self.frames, || format!("stayer multiplier needs {} entries", self.frames))?;
            check(t.multiplier.iter().all(|m| *m >= 0.0 && m.is_finite()), || "stayer multiplier must be non-negative".into())?;
            check(t.prevalence.len() == self.classes.len(), || "stayer prevalence needs one entry per class".into())?;
            check(t.prevalence.iter().all(|p| (0.0..=1.0).contains(p)), || "stayer prevalence outside [0, 1]".into())?;
        }
        if let Some(shape) = self.activity_shape {
            check(shape > 0.0 && shape.is_finite(), || "activity shape must be positive".into())?;
        }
        check((0.0..=1.0).contains(&self.theme_probability), || "theme probability outside [0, 1]".into())?;
        let strengths = [Some(self.signal_strength), self.late_signal.map(|l| l.signal_strength)];
        for s in strengths.into_iter().flatten() {
            for c in &self.classes {
                for k in 0..NCAT {
                    let r = self.base_rates[k] + s * c.offset[k];
                    check(r >= 0.0, || format!("class {} has negative rate on {}", c.name, BasicCategory::ALL[k]))?;
                }
            }
        }
        Ok(())
    }

    /// Expected counts of one class in one frame at signal strength `s`.
    pub fn rates(&self, class: usize, frame: usize, s: f64) -> [f64; NCAT] {
        let spec = &self.classes[class];
        let mut r = [0.0; NCAT];
        for k in 0..NCAT {
            r[k] = self.base_rates[k] + s * spec.offset[k];
        }
        for d in &self.drift {
            let applies = frame >= d.from_frame && d.class.as_ref().is_none_or(|c| *c == spec.name);
            if applies {
                r[d.category.index()] *= d.multiplier;
            }
        }
        r
    }
}

fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u * total < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

struct UserDraw {
    events: Vec<Event>,
    truth: UserTruth,
}

fn generate_user(cfg: &SynthConfig, grid: &TimeGrid, index: usize, width: usize) -> UserDraw {
    let mut r = rng(derive_seed(cfg.seed, &[index as u64]));
    let user = UserId(format!("u{:0width$}", index + 1));
    let priors: Vec<f64> = cfg.classes.iter().map(|c| c.prior).collect();
    let class = pick(&priors, r.random());
    let arrival = pick(&cfg.arrival, r.random());
    let mut exit = None;
    for f in arrival + 1..cfg.frames {
        if r.random::<f64>() < cfg.exit_hazard[f] {
            exit = Some(f);
            break;
        }
    }
    let activity = match cfg.activity_shape {
        Some(shape) => Gamma::new(shape, 1.0 / shape).expect("validated shape").sample(&mut r),
        None => 1.0,
    };
    let s = match cfg.late_signal {
        Some(l) if arrival >= l.from_frame => l.signal_strength,
        _ => cfg.signal_strength,
    };
    let stayer = match &cfg.stayer_trait {
        Some(t) if exit.is_none() => r.random::<f64>() < t.prevalence[class],
        _ => false,
    };

    let mut events = Vec::new();
    let mut last_active = arrival;
    for f in arrival..exit.unwrap_or(cfg.frames) {
        let mut rates = cfg.rates(class, f, s);
        if stayer {
            let t = cfg.stayer_trait.as_ref().expect("drawn only when configured");
            rates[t.category.index()] *= t.multiplier[f];
        }
        let mut counts = [0u64; NCAT];
        for k in 0..NCAT {
            let mean = activity * rates[k];
            if mean > 0.0 {
                counts[k] = Poisson::new(mean).expect("positive mean").sample(&mut r) as u64;
            }
        }
        if f == arrival && counts.iter().all(|&c| c == 0) {
            // an arrival is observed through at least one edit
            let k = if rates.iter().any(|&x| x > 0.0) { pick(&rates, r.random()) } else { 0 };
            counts[k] = 1;
        }
        let start = grid.frame_start(f).timestamp();
        let span = (grid.frame_start(f + 1).timestamp() - start) as u64;
        for (k, &n) in counts.iter().enumerate() {
            let category = BasicCategory::ALL[k];
            for _ in 0..n {
                let ts = start + r.random_range(0..span) as i64;
                let mut ev = Event::new(user.0.clone(), chrono::DateTime::from_timestamp(ts, 0).expect("in range"), category);
                if category == BasicCategory::Content && r.random::<f64>() < cfg.theme_probability {
                    let theme = Theme::ALL[r.random_range(0..Theme::ALL.len())];
                    ev = ev.with_themes([theme].into_iter().collect::<ThemeSet>());
                }
                events.push(ev);
            }
        }
        if counts.iter().any(|&c| c > 0) {
            last_active = f;
        }
    }
    let truth = UserTruth { user, class: cfg.classes[class].name.clone(), arrival, exit, last_active, activity, stayer_trait: stayer };
    UserDraw { events, truth }
}

/// Draw a corpus. Deterministic in the config (including its seed) and
/// independent of the thread count.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let width = cfg.n_users.to_string().len().max(5);
    let draws: Vec<UserDraw> = (0..cfg.n_users).into_par_iter().map(|i| generate_user(cfg, &grid, i, width)).collect();
    let mut events = Vec::new();
    let mut labels = TraitLabels::new();
    let mut users = Vec::with_capacity(draws.len());
    for d in draws {
        let mut evs = d.events;
        evs.sort_by(|a, b| (a.timestamp, a.category.index(), a.themes.bits()).cmp(&(b.timestamp, b.category.index(), b.themes.bits())));
        events.extend(evs);
        labels.insert(d.truth.user.clone(), cfg.trait_, &d.truth.class)?;
        users.push(d.truth);
    }
    let class_rates = (0..cfg.classes.len())
        .map(|c| (0..cfg.frames).map(|f| cfg.rates(c, f, cfg.signal_strength)).collect())
        .collect();
    Ok(SynthOutput { events, labels, truth: SynthTruth { users, class_rates } })
}

/// `user_id,class,arrival_frame,exit_frame,last_active_frame,activity,stayer_trait`;
/// frames are 1-based and `exit_frame` is empty for users who never left.
pub fn write_truth_csv<W: Write>(mut out: W, truth: &SynthTruth) -> Result<()> {
    writeln!(out, "user_id,class,arrival_frame,exit_frame,last_active_frame,activity,stayer_trait")?;
    for u in &truth.users {
        let exit = u.exit.map(|e| (e + 1).to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{exit},{},{},{}",
            u.user,
            u.class,
            u.arrival + 1,
            u.last_active + 1,
            u.activity,
            u8::from(u.stayer_trait)
        )?;
    }
    Ok(())
}

fn base_config(name: &str) -> SynthConfig {
    SynthConfig {
        name: name.to_string(),
        trait_: Trait::Gender,
        n_users: 2000,
        origin_year: 2007,
        origin_month: 1,
        frames: 8,
        base_rates: [4.0, 1.0, 0.8, 0.6, 0.6, 0.3],
        classes: vec![
            ClassSpec { name: "female".into(), prior: 0.35, offset: [-0.5, 0.0, 0.35, 0.15, 0.0, 0.0] },
            ClassSpec { name: "male".into(), prior: 0.65, offset: [0.3, 0.0, -0.15, -0.05, 0.0, 0.0] },
        ],
        signal_strength: 1.0,
        arrival: vec![0.5, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05],
        exit_hazard: vec![0.0, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
        drift: Vec::new(),
        late_signal: None,
        stayer_trait: None,
        activity_shape: Some(2.0),
        theme_probability: 0.3,
        seed: 20130101,
    }
}

/// Named configurations used by the tests and the CLI.
pub fn reference_configs() -> Vec<SynthConfig> {
    let planted = base_config("planted_signal");
    let null = SynthConfig { signal_strength: 0.0, ..base_config("null") };
    let newcomer = SynthConfig {
        signal_strength: 0.3,
        late_signal: Some(LateSignal { from_frame: 1, signal_strength: 2.0 }),
        arrival: vec![0.4, 0.15, 0.15, 0.1, 0.05, 0.05, 0.05, 0.05],
        ..base_config("newcomer_signal")
    };
    let exit_amplify = SynthConfig {
        arrival: vec![0.8, 0.05, 0.05, 0.05, 0.05, 0.0, 0.0, 0.0],
        exit_hazard: vec![0.0, 0.15, 0.15, 0.15, 0.15, 0.0, 0.0, 0.0],
        stayer_trait: Some(StayerTrait {
            category: BasicCategory::User,
            multiplier: vec![3.0, 3.0, 3.0, 3.0, 3.0, 10.0, 10.0, 10.0],
            prevalence: vec![0.0, 0.7],
        }),
        drift: vec![DriftSpec { class: Some("male".into()), category: BasicCategory::Content, from_frame: 4, multiplier: 1.2 }],
        ..base_config("exit_amplify")
    };
    vec![planted, null, newcomer, exit_amplify]
}

pub fn reference_config(name: &str) -> Option<SynthConfig> {
    reference_configs().into_iter().find(|c| c.name == name)
}
