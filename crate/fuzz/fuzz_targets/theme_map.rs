#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::ingest::read_page_theme_map;

fuzz_target!(|data: &[u8]| {
    let _ = read_page_theme_map(data);
});
