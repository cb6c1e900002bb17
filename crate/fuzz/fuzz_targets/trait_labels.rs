#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::ingest::read_trait_labels;

fuzz_target!(|data: &[u8]| {
    let _ = read_trait_labels(data);
});
