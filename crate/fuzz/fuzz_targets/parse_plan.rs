#![no_main]

use libfuzzer_sys::fuzz_target;
use mcvrpsd::datasets;
use mcvrpsd::evaluation::evaluate;
use mcvrpsd::io::plan::parse_plan;
use mcvrpsd::model::check_feasibility;
use mcvrpsd::Problem;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let problem = Problem::new(datasets::numerical(0.5)).unwrap();
    if let Ok(plan) = parse_plan(&problem, text) {
        if check_feasibility(&problem, &plan).is_feasible() {
            let _ = evaluate(&problem, &plan);
        }
    }
});
