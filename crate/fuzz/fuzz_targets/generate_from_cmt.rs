#![no_main]

use libfuzzer_sys::fuzz_target;
use mcvrpsd::io::benchmark::{all_specs, generate_set, DEFAULT_URGENCY};
use mcvrpsd::io::cmt::parse_cmt;
use mcvrpsd::Problem;

fuzz_target!(|data: &[u8]| {
    let Some((&pick, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let Ok(cmt) = parse_cmt(text) else { return };
    let specs = all_specs();
    let spec = &specs[pick as usize % specs.len()];
    if let Ok(inst) = generate_set(&cmt, spec, DEFAULT_URGENCY) {
        let _ = Problem::new(inst);
    }
});
