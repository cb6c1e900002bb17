#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::classify::parse_model_dump;

fuzz_target!(|data: &[u8]| {
    let _ = parse_model_dump(data);
});
