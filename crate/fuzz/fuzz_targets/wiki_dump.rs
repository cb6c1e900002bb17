#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::ingest::read_wiki_dump;
use traitleak::model::TimeGrid;

fuzz_target!(|data: &[u8]| {
    let _ = read_wiki_dump(data, TimeGrid::default(), None);
});
