#![no_main]

use libfuzzer_sys::fuzz_target;
use mcvrpsd::io::cmt::parse_cmt;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cmt) = parse_cmt(text) {
            let d = cmt.distances();
            assert_eq!(d.len(), cmt.customers.len() + 1);
        }
    }
});
