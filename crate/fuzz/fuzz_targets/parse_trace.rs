#![no_main]

use libfuzzer_sys::fuzz_target;
use optosqueeze::csvio::{parse_trace, write_trace};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_trace(text) {
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).expect("parsed trace must serialize");
    }
});
