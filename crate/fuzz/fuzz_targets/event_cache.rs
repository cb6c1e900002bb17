#![no_main]

use libfuzzer_sys::fuzz_target;
use traitleak::cache::{decode_events, encode_events};

fuzz_target!(|data: &[u8]| {
    if let Ok(events) = decode_events(data) {
        let mut buf = Vec::new();
        encode_events(&mut buf, &events).unwrap();
        assert_eq!(decode_events(&buf).unwrap(), events);
    }
});
