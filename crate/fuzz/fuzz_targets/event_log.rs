#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::ingest::read_event_log;

fuzz_target!(|data: &[u8]| {
    let _ = read_event_log(data);
});
