use std::collections::{BTreeMap, BTreeSet};

use traitleak::featurize::{ActivityTable, JoinSource};
use traitleak::model::{BasicCategory, CategoryScheme, Trait};
use traitleak::profile::{class_feature_shares, class_temporal_means, population_dynamics, ShareMode};
use traitleak::synth::{generate, reference_config, DriftSpec, SynthConfig};

#[test]
fn dynamics_match_generator_bookkeeping() {
    let cfg = SynthConfig { n_users: 1500, ..reference_config("newcomer_signal").unwrap() };
    let out = generate(&cfg).unwrap();
    let grid = cfg.grid().unwrap();
    for scheme in [CategoryScheme::Basic, CategoryScheme::Extended] {
        let table = ActivityTable::build(&out.events, grid, scheme, JoinSource::FirstEvent).unwrap();
        let rows = population_dynamics(&table);
        let mut active = vec![BTreeSet::new(); cfg.frames];
        let mut revisions = vec![0u64; cfg.frames];
        for ev in &out.events {
            let f = grid.frame_of(&ev.timestamp).index().unwrap();
            active[f].insert(ev.user.clone());
            revisions[f] += 1;
        }
        for (f, row) in rows.iter().enumerate() {
            assert_eq!(row.frame, f + 1);
            assert_eq!(row.new, out.truth.users.iter().filter(|u| u.arrival == f).count() as u64);
            assert_eq!(row.active, active[f].len() as u64);
            assert_eq!(row.revisions[..6].iter().sum::<u64>(), revisions[f]);
        }
        assert_eq!(rows.iter().map(|r| r.new).sum::<u64>(), out.truth.users.len() as u64);
    }
}

#[test]
fn basic_shares_are_proportions() {
    let cfg = SynthConfig { n_users: 600, ..reference_config("planted_signal").unwrap() };
    let out = generate(&cfg).unwrap();
    let table = ActivityTable::build(&out.events, cfg.grid().unwrap(), CategoryScheme::Extended, JoinSource::FirstEvent).unwrap();
    for mode in [ShareMode::Unweighted, ShareMode::Pooled] {
        let shares = class_feature_shares(&table, &out.labels, Trait::Gender, mode).unwrap();
        let mut per_class: BTreeMap<&str, f64> = BTreeMap::new();
        for s in shares.iter().filter(|s| BasicCategory::ALL.iter().any(|b| b.name() == s.category)) {
            *per_class.entry(s.class).or_default() += s.mean_share;
        }
        assert_eq!(per_class.len(), 2);
        for total in per_class.values() {
            assert!((total - 1.0).abs() <= 1e-12);
        }
        let user = |class: &str| shares.iter().find(|s| s.class == class && s.category == "USER").unwrap().mean_share;
        assert!(user("female") > user("male"));
    }
}

#[test]
fn planted_user_drift_shows_up_at_its_frame() {
    let k = 4;
    let cfg = SynthConfig {
        n_users: 1500,
        drift: vec![DriftSpec { class: Some("female".into()), category: BasicCategory::User, from_frame: k, multiplier: 3.0 }],
        ..reference_config("null").unwrap()
    };
    let out = generate(&cfg).unwrap();
    let table = ActivityTable::build(&out.events, cfg.grid().unwrap(), CategoryScheme::Basic, JoinSource::FirstEvent).unwrap();
    let rows = class_temporal_means(&table, &out.labels, Trait::Gender, ShareMode::Unweighted).unwrap();
    let share = |class: &str, frame: usize| {
        rows.iter().find(|r| r.class == class && r.category == "USER" && r.frame == frame).unwrap().mean_share.unwrap()
    };
    // frame numbers in the output are 1-based
    let jump = share("female", k + 1) - share("female", k);
    let steady: f64 = (2..k).map(|f| (share("female", f + 1) - share("female", f)).abs()).fold(0.0, f64::max);
    assert!(jump > 0.05 && jump > 3.0 * steady, "jump {jump}, earlier moves up to {steady}");
    assert!((share("male", k + 1) - share("male", k)).abs() < jump / 3.0);
}

#[test]
fn single_user_class_reproduces_that_users_shares() {
    let cfg = SynthConfig { n_users: 300, ..reference_config("planted_signal").unwrap() };
    let out = generate(&cfg).unwrap();
    let table = ActivityTable::build(&out.events, cfg.grid().unwrap(), CategoryScheme::Basic, JoinSource::FirstEvent).unwrap();
    let one = &out.truth.users[0];
    let mut labels = traitleak::ingest::TraitLabels::new();
    labels.insert(one.user.clone(), Trait::Gender, "female").unwrap();
    let rows = class_temporal_means(&table, &labels, Trait::Gender, ShareMode::Unweighted).unwrap();
    let act = table.find(&one.user).unwrap();
    for f in 0..cfg.frames {
        let counts = table.frame_counts(act, f);
        let total: u32 = counts.iter().sum();
        for (c, cat) in BasicCategory::ALL.iter().enumerate() {
            let row = rows.iter().find(|r| r.frame == f + 1 && r.category == cat.name()).unwrap();
            if total == 0 {
                assert_eq!(row.mean_share, None);
            } else {
                assert_eq!(row.mean_share, Some(counts[c] as f64 / total as f64));
            }
        }
    }
}
