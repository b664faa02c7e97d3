#![no_main]

use libfuzzer_sys::fuzz_target;
use optosqueeze::csvio::parse_curve;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_curve(text);
    }
});
