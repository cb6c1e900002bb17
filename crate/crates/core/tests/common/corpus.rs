//! Fuzzed event corpus for the featurization invariants.

use chrono::{Datelike, TimeZone, Utc};
use rand::Rng;
use traitleak::ingest::FirstEdits;
use traitleak::model::{BasicCategory, Event, Theme, ThemeSet, UserId};

use super::rng;

pub const FRAMES: usize = 8;

/// Quarter index relative to January 2007 from the calendar fields alone.
pub fn quarter_oracle(ev: &Event) -> i64 {
    let months = (ev.timestamp.year() as i64 - 2007) * 12 + ev.timestamp.month0() as i64;
    months.div_euclid(3)
}

pub struct Corpus {
    pub events: Vec<Event>,
    pub first_edits: FirstEdits,
}

/// 1000 users with random activity from 2005 to 2010, so some events fall
/// before and after the eight-quarter grid and some users never enter it.
pub fn fuzzed_corpus(seed: u64) -> Corpus {
    let mut r = rng(seed);
    let mut events = Vec::new();
    let mut first_edits = FirstEdits::new();
    for u in 0..1000 {
        let user = format!("u{u:04}");
        let n = r.random_range(0..30);
        let mut earliest = None;
        for _ in 0..n {
            let ts = Utc
                .with_ymd_and_hms(r.random_range(2005..=2010), r.random_range(1..=12), r.random_range(1..=28), r.random_range(0..24), 0, 0)
                .unwrap();
            let cat = BasicCategory::ALL[r.random_range(0..6)];
            let mut ev = Event::new(user.as_str(), ts, cat);
            if cat == BasicCategory::Content {
                let themes: ThemeSet = Theme::ALL.iter().copied().filter(|_| r.random::<f64>() < 0.1).collect();
                ev = ev.with_themes(themes);
            }
            earliest = Some(earliest.map_or(ts, |e: chrono::DateTime<Utc>| e.min(ts)));
            events.push(ev);
        }
        // the side table sometimes records an even earlier first edit
        if let Some(e) = earliest {
            let back = if r.random::<f64>() < 0.3 { chrono::Duration::days(r.random_range(1..900)) } else { chrono::Duration::zero() };
            first_edits.insert(UserId::new(user), e - back);
        }
    }
    Corpus { events, first_edits }
}

