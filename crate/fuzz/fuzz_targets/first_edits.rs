#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::ingest::read_first_edits;

fuzz_target!(|data: &[u8]| {
    let _ = read_first_edits(data);
});
