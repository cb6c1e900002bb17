//! Replays the checked-in fuzz corpus and simple mutations of it through every decoder.

use std::fs;
use std::path::PathBuf;

use traitleak::cache::{decode_activity, decode_events, encode_events};
use traitleak::classify::parse_model_dump;
use traitleak::ingest::{read_event_log, read_first_edits, read_page_theme_map, read_trait_labels, read_wiki_dump};
use traitleak::model::TimeGrid;

type Decoder = fn(&[u8]) -> bool;

const TARGETS: [(&str, Decoder); 8] = [
    ("wiki_dump", |d| read_wiki_dump(d, TimeGrid::default(), None).is_ok()),
    ("event_log", |d| read_event_log(d).is_ok()),
    ("trait_labels", |d| read_trait_labels(d).is_ok()),
    ("theme_map", |d| read_page_theme_map(d).is_ok()),
    ("first_edits", |d| read_first_edits(d).is_ok()),
    ("event_cache", |d| decode_events(d).is_ok()),
    ("activity_cache", |d| decode_activity(d).is_ok()),
    ("model_dump", |d| parse_model_dump(d).is_ok()),
];

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn every_target_has_seeds() {
    for (target, _) in TARGETS {
        assert!(!seeds(target).is_empty(), "{target}");
    }
}

#[test]
fn well_formed_seeds_decode() {
    for (target, decode) in TARGETS {
        for (name, data) in seeds(target) {
            // tabs.csv carries a deliberately bad row
            if name != "tabs.csv" {
                assert!(decode(&data), "{target}/{name}");
            }
        }
    }
}

#[test]
fn mutated_seeds_never_panic() {
    for (target, decode) in TARGETS {
        for (_, data) in seeds(target) {
            let step = (data.len() / 64).max(1);
            for cut in (0..data.len()).step_by(step) {
                decode(&data[..cut]);
                let mut flipped = data.clone();
                flipped[cut] ^= 0x5a;
                decode(&flipped);
                let mut spliced = data.clone();
                spliced.splice(cut..cut, data[..cut.min(16)].iter().copied());
                decode(&spliced);
            }
        }
    }
}

#[test]
fn event_cache_seed_reencodes_identically() {
    for (name, data) in seeds("event_cache") {
        let events = decode_events(&data).unwrap();
        let mut buf = Vec::new();
        encode_events(&mut buf, &events).unwrap();
        assert_eq!(buf, data, "{name}");
    }
}
