use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcvrpsd"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn construct_worked_example() {
    let o = run(&["construct", "fictitious", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.starts_with(
            "summary objective=182.26 fixed=166.00 expected=182.26 load=11.71 routes=1"
        ),
        "{out}"
    );
    let stops: Vec<&str> = out.lines().filter(|l| l.starts_with("stop")).collect();
    assert_eq!(
        stops,
        [
            "stop 2 0 1",
            "stop 3 0 1",
            "stop 3 0 2",
            "stop 1 0 1",
            "stop 1 0 2"
        ]
    );
}

#[test]
fn oracle_numerical_example() {
    let o = run(&["oracle", "numerical", "--omega", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).starts_with("summary objective=-9.60 fixed=50.00 expected=52.00 load=25.00"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn csv_output() {
    let o = run(&["solve", "fictitious", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(
        out.lines().next(),
        Some("route,truck,position,customer,feed,replica,compartment,load")
    );
    assert_eq!(out.lines().count(), 6);
}

#[test]
fn rejected_inputs_exit_2() {
    let dir = scratch("rejected");
    let bad = dir.join("bad.mcv");
    std::fs::write(&bad, "name x\nmatrix 2\n0 1\n").unwrap();
    for args in [
        vec!["solve", "no-such-instance"],
        vec!["solve", bad.to_str().unwrap()],
        vec!["oracle", "set1-vrpnc1"],
        vec!["solve", "fictitious", "--omega", "1.5"],
        vec!["simulate", "fictitious", "/no/such/plan"],
    ] {
        let o = run(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(
        run(&["solve", "fictitious", "--sigma", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["solve", "fictitious", "--tenure", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn generate_solve_simulate_round_trip() {
    let dir = scratch("round-trip");
    let d = dir.to_str().unwrap();
    let o = run(&["generate", "set2-vrpnc1", "--out-dir", d]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let inst = dir.join("set2-vrpnc1.mcv");
    let plan = dir.join("plan.txt");
    let o = run(&[
        "solve",
        inst.to_str().unwrap(),
        "--perturbations",
        "2",
        "-o",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let direct = run(&["solve", "set2-vrpnc1", "--perturbations", "2"]);
    let first = |s: String| {
        s.lines()
            .next()
            .unwrap()
            .split(" seconds=")
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(
        first(std::fs::read_to_string(&plan).unwrap()),
        first(stdout(&direct))
    );
    let o = run(&[
        "simulate",
        inst.to_str().unwrap(),
        plan.to_str().unwrap(),
        "--samples",
        "2000",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!stdout(&o).is_empty());
}

#[test]
fn bench_reports_one_row_per_instance() {
    let o = run(&[
        "bench",
        "--set",
        "mcvrp",
        "--only",
        "mcvrp-vrpnc1",
        "--runs",
        "1",
        "--perturbations",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2, "{out}");
    assert!(lines[0].starts_with("instance,objective"));
    assert!(lines[1].starts_with("mcvrp-vrpnc1,"));
}

#[test]
fn small_limited_fleet_warns_but_succeeds() {
    let o = run(&["construct", "cooperative-stochastic-1truck"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mandatory orders could not be served"));
}

#[test]
fn order_that_fits_no_truck_exits_2() {
    let dir = scratch("no-fit");
    let inst = dir.join("x.mcv");
    std::fs::write(
        &inst,
        "name x\nfleet unbounded\nmatrix 2\n0 5\n5 0\ntruck 0 load 10 caps 10 restrict 1\norder 1 0 0.95 fixed 4\n",
    )
    .unwrap();
    let o = run(&["solve", inst.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}
