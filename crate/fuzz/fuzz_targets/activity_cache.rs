#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::cache::decode_activity;

fuzz_target!(|data: &[u8]| {
    let _ = decode_activity(data);
});
