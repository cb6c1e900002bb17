mod common;

use std::collections::BTreeMap;

use traitleak::featurize::{instantaneous_features, ActivityTable, Encoding, JoinSource};
use traitleak::model::{BasicCategory, CategoryScheme, Event, TimeGrid, UserId};

use common::corpus::{fuzzed_corpus, quarter_oracle, Corpus, FRAMES};

fn tables(c: &Corpus) -> Vec<ActivityTable> {
    let grid = TimeGrid::new(2007, 1, FRAMES).unwrap();
    let mut out = Vec::new();
    for scheme in [CategoryScheme::Basic, CategoryScheme::Extended] {
        for join in [JoinSource::FirstEvent, JoinSource::SideTable(&c.first_edits)] {
            out.push(ActivityTable::build(&c.events, grid, scheme, join).unwrap());
        }
    }
    out
}

#[test]
fn longitudinal_vectors_are_prefixes_of_longer_horizons() {
    let c = fuzzed_corpus(1);
    for table in tables(&c) {
        let width = 2 * table.scheme().len();
        for encoding in [Encoding::Incremental, Encoding::Cumulative] {
            for act in table.users() {
                let full = table.longitudinal(act, FRAMES, encoding);
                assert_eq!(full.values.len(), FRAMES * width);
                for h in 1..FRAMES {
                    let short = table.longitudinal(act, h, encoding);
                    assert_eq!(short.values[..], full.values[..h * width]);
                }
                if encoding == Encoding::Incremental {
                    for f in 0..FRAMES {
                        assert_eq!(table.frame_features(act, f).block()[..], full.values[f * width..(f + 1) * width]);
                    }
                }
            }
        }
    }
}

#[test]
fn missing_flags_are_uniform_monotone_and_imply_zero_counts() {
    let c = fuzzed_corpus(2);
    for table in tables(&c) {
        for act in table.users() {
            let mut prev = 1u8;
            for f in 0..FRAMES {
                let ff = table.frame_features(act, f);
                assert!(ff.missing.iter().all(|&m| m == ff.missing[0]));
                let m = ff.missing[0];
                assert!(m <= prev, "{}: flag rises at frame {f}", act.user);
                if m == 1 {
                    assert!(ff.counts.iter().all(|&k| k == 0));
                }
                prev = m;
            }
        }
    }
}

#[test]
fn basic_counts_conserve_in_window_events() {
    let c = fuzzed_corpus(3);
    let mut expected: BTreeMap<&str, u64> = BTreeMap::new();
    let mut expected_themes: BTreeMap<&str, u64> = BTreeMap::new();
    for ev in &c.events {
        if (0..FRAMES as i64).contains(&quarter_oracle(ev)) {
            *expected.entry(ev.user.as_str()).or_default() += 1;
            if ev.category == BasicCategory::Content {
                *expected_themes.entry(ev.user.as_str()).or_default() += ev.themes.len() as u64;
            }
        }
    }
    for table in tables(&c) {
        assert_eq!(table.users().len(), expected.len());
        let ncat = table.scheme().len();
        for act in table.users() {
            let basic: u64 = (0..FRAMES).flat_map(|f| table.frame_counts(act, f)[..6].to_vec()).map(u64::from).sum();
            assert_eq!(basic, expected[act.user.as_str()]);
            if ncat > 6 {
                let themes: u64 = (0..FRAMES).flat_map(|f| table.frame_counts(act, f)[6..].to_vec()).map(u64::from).sum();
                assert_eq!(themes, expected_themes.get(act.user.as_str()).copied().unwrap_or(0));
            }
        }
    }
}

#[test]
fn table_agrees_with_direct_per_frame_counting() {
    let c = fuzzed_corpus(4);
    let grid = TimeGrid::new(2007, 1, FRAMES).unwrap();
    let mut by_user: BTreeMap<&UserId, Vec<&Event>> = BTreeMap::new();
    for ev in &c.events {
        by_user.entry(&ev.user).or_default().push(ev);
    }
    for table in tables(&c) {
        for act in table.users().iter().step_by(7) {
            for f in 0..FRAMES {
                let direct = instantaneous_features(&act.user, by_user[&act.user].iter().copied(), &grid, table.scheme(), f, act.join_frame);
                assert_eq!(direct, table.frame_features(act, f));
            }
        }
    }
}

#[test]
fn eligibility_is_nested_and_matches_first_activity() {
    let c = fuzzed_corpus(5);
    let mut first: BTreeMap<&str, i64> = BTreeMap::new();
    for ev in &c.events {
        let q = quarter_oracle(ev);
        if (0..FRAMES as i64).contains(&q) {
            let e = first.entry(ev.user.as_str()).or_insert(q);
            *e = (*e).min(q);
        }
    }
    for table in tables(&c) {
        let series = table.series(Encoding::Incremental);
        for (h, ds) in series.iter().enumerate() {
            let expected: Vec<&str> = first.iter().filter(|(_, &q)| q <= h as i64).map(|(u, _)| *u).collect();
            let got: Vec<&str> = ds.users.iter().map(|u| u.as_str()).collect();
            assert_eq!(got, expected, "horizon {}", h + 1);
            if h > 0 {
                assert!(series[h - 1].users.iter().all(|u| ds.users.binary_search(u).is_ok()));
            }
        }
    }
}
