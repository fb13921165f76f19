#![no_main]

use libfuzzer_sys::fuzz_target;
use mcvrpsd::io::instance_file::{parse_instance, write_instance};
use mcvrpsd::Problem;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(inst) = parse_instance(text) {
            // Whatever parses must survive a write/read cycle unchanged.
            assert_eq!(parse_instance(&write_instance(&inst)).as_ref(), Ok(&inst));
            let _ = Problem::new(inst);
        }
    }
});
