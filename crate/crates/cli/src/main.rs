use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mcvrpsd::constructive::construct;
use mcvrpsd::datasets;
use mcvrpsd::evaluation::evaluate;
use mcvrpsd::io::benchmark::{self, DEFAULT_URGENCY};
use mcvrpsd::io::instance_file::{parse_instance, write_instance};
use mcvrpsd::io::plan::{parse_plan, summary_row, write_solution, PlanFormat, SUMMARY_HEADER};
use mcvrpsd::io::published;
use mcvrpsd::model::{check_feasibility, Fleet};
use mcvrpsd::oracle::{enumerate_exact, simulate, Limits};
use mcvrpsd::tabu::{its, SearchParams};
use mcvrpsd::{Instance, Problem, Solution};

/// Routes compartmentalised trucks for orders with random demand.
#[derive(Parser)]
#[command(name = "mcvrpsd", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Savings construction followed by iterated tabu search.
    Solve(SolveArgs),
    /// Savings construction only.
    Construct(ConstructArgs),
    /// Exhaustive optimum of a small instance.
    Oracle(InstanceArgs),
    /// Monte Carlo estimate of a plan's recourse distance.
    Simulate(SimulateArgs),
    /// Write benchmark or bundled instances as instance files.
    Generate(GenerateArgs),
    /// Solve a benchmark set and print a CSV report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file (.mcv) or bundled name: fictitious, numerical,
    /// cooperative-{stochastic|deterministic}-{1|2}truck, set{1,2,3}-vrpncN[b],
    /// mcvrp-vrpncN.
    instance: String,
    /// Objective weight on distance; overrides the instance.
    #[arg(long)]
    omega: Option<f64>,
    /// Urgency probability of urgent benchmark customers.
    #[arg(long, default_value_t = DEFAULT_URGENCY)]
    urgency_prob: f64,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the plan here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct SearchArgs {
    /// Weight of the stochastic interest term in the savings.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Routes selected per tabu iteration.
    #[arg(long, default_value_t = 3)]
    sigma: usize,
    /// Replicas removed per perturbation (default: a fifth, at least 3).
    #[arg(long)]
    destroy_size: Option<usize>,
    /// Replicas moved per direction in an exchange.
    #[arg(long, default_value_t = 1)]
    kappa: usize,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Perturbation rounds.
    #[arg(long, default_value_t = 20)]
    perturbations: usize,
    #[arg(long, default_value_t = 3)]
    tenure: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SearchArgs {
    fn params(&self) -> Result<SearchParams> {
        let time_limit = match self.time_limit {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(Rejected::new("time limit must be positive"))
            }
            t => t.map(Duration::from_secs_f64),
        };
        Ok(SearchParams {
            lambda: self.lambda,
            sigma: self.sigma,
            destroy_size: self.destroy_size,
            kappa: self.kappa,
            max_iter: self.max_iter,
            perturbations: self.perturbations,
            tenure: self.tenure,
            seed: self.seed,
            time_limit,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Plan in text format, as written by `solve`.
    plan: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Instance names, or `all` for the 35 benchmark instances.
    #[arg(required = true)]
    names: Vec<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_URGENCY)]
    urgency_prob: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchSet {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    All,
    Mcvrp,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchSet::All)]
    set: BenchSet,
    /// Only these instances (names as in `generate`).
    #[arg(long)]
    only: Vec<String>,
    /// Seeds per instance; the best run is reported.
    #[arg(long, default_value_t = 5)]
    runs: u64,
    #[arg(long, default_value_t = DEFAULT_URGENCY)]
    urgency_prob: f64,
    #[command(flatten)]
    search: SearchArgs,
}

/// Input the solver refuses: exit status 2.
#[derive(Debug)]
struct Rejected(String);

impl Rejected {
    fn new(msg: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(Rejected(msg.into()))
    }
}

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Rejected {}

fn reject<E: std::fmt::Display>(e: E) -> anyhow::Error {
    Rejected::new(e.to_string())
}

fn builtin(name: &str, urgency: f64) -> Option<Result<Instance>> {
    let inst = match name {
        "fictitious" => datasets::fictitious(),
        "numerical" => datasets::numerical(0.8),
        "cooperative-stochastic-1truck" => datasets::cooperative(true, 1),
        "cooperative-stochastic-2truck" => datasets::cooperative(true, 2),
        "cooperative-deterministic-1truck" => datasets::cooperative(false, 1),
        "cooperative-deterministic-2truck" => datasets::cooperative(false, 2),
        _ => {
            if let Some(id) = name.strip_prefix("mcvrp-vrpnc") {
                let id: usize = id.parse().ok()?;
                return Some(benchmark::mcvrp_instance(id).map_err(reject));
            }
            let spec = benchmark::spec_by_name(name)?;
            return Some(
                benchmark::load_cmt(spec.base)
                    .and_then(|c| benchmark::generate_set(&c, &spec, urgency))
                    .map_err(reject),
            );
        }
    };
    Some(Ok(inst))
}

fn load_instance(args: &InstanceArgs) -> Result<Problem> {
    if !(0.0..=1.0).contains(&args.urgency_prob) {
        return Err(Rejected::new("urgency probability must lie in [0, 1]"));
    }
    let mut inst = match builtin(&args.instance, args.urgency_prob) {
        Some(r) => r?,
        None => {
            let path = Path::new(&args.instance);
            let text = fs::read_to_string(path)
                .map_err(|e| Rejected::new(format!("reading {}: {e}", path.display())))?;
            parse_instance(&text).map_err(|e| Rejected::new(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(w) = args.omega {
        inst.omega = w;
    }
    Problem::new(inst).map_err(reject)
}

fn emit(problem: &Problem, solution: &Solution, seconds: Option<f64>, out: &Output) -> Result<()> {
    let e = evaluate(problem, solution);
    let format = match out.format {
        Format::Text => PlanFormat::Text,
        Format::Csv => PlanFormat::Csv,
    };
    let text = write_solution(problem, solution, &e, seconds, format);
    match &out.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    // The plan is still written so the caller can see what was left out.
    // An unbounded fleet can always add a route, so a gap there means some
    // order fits no truck at all; a limited fleet may simply be too small.
    if e.missing_mandatory > 0 {
        let msg = format!("{} mandatory orders could not be served", e.missing_mandatory);
        if problem.instance.fleet == Fleet::Unbounded {
            return Err(Rejected::new(msg));
        }
        eprintln!("warning: {msg}");
    }
    if let Some(v) = check_feasibility(problem, solution).violations.first() {
        return Err(Rejected::new(format!("plan is infeasible: {v}")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Solve(a) => {
            let problem = load_instance(&a.inst)?;
            let out = its(&problem, &a.search.params()?).map_err(reject)?;
            emit(
                &problem,
                &out.solution,
                Some(out.elapsed.as_secs_f64()),
                &a.output,
            )
        }
        Cmd::Construct(a) => {
            let problem = load_instance(&a.inst)?;
            if !(a.lambda >= 0.0 && a.lambda.is_finite()) {
                return Err(Rejected::new("lambda must be finite and non-negative"));
            }
            let t = Instant::now();
            let sol = construct(&problem, a.lambda);
            emit(&problem, &sol, Some(t.elapsed().as_secs_f64()), &a.output)
        }
        Cmd::Oracle(a) => {
            let problem = load_instance(&a)?;
            let t = Instant::now();
            let r = enumerate_exact(&problem, &Limits::default()).map_err(reject)?;
            let e = evaluate(&problem, &r.solution);
            print!(
                "{}",
                write_solution(
                    &problem,
                    &r.solution,
                    &e,
                    Some(t.elapsed().as_secs_f64()),
                    PlanFormat::Text
                )
            );
            println!("# nodes explored {}", r.nodes_explored);
            Ok(())
        }
        Cmd::Simulate(a) => {
            let problem = load_instance(&a.inst)?;
            let text = fs::read_to_string(&a.plan)
                .map_err(|e| Rejected::new(format!("reading {}: {e}", a.plan.display())))?;
            let sol = parse_plan(&problem, &text)
                .map_err(|e| Rejected::new(format!("{}: {e}", a.plan.display())))?;
            let report = check_feasibility(&problem, &sol);
            if !report.is_feasible() {
                let first = report
                    .violations
                    .first()
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                return Err(Rejected::new(format!("plan is infeasible: {first}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let sim = simulate(&problem, &sol, a.samples, &mut rng).map_err(reject)?;
            let e = evaluate(&problem, &sol);
            println!("analytic_recourse,simulated_recourse,std_error,samples");
            println!(
                "{:.4},{:.4},{:.4},{}",
                e.expected_recourse, sim.mean_extra_distance, sim.std_error, sim.samples
            );
            Ok(())
        }
        Cmd::Generate(a) => {
            let names: Vec<String> = if a.names.iter().any(|n| n == "all") {
                benchmark::all_specs().iter().map(|s| s.name()).collect()
            } else {
                a.names.clone()
            };
            fs::create_dir_all(&a.out_dir)
                .with_context(|| format!("creating {}", a.out_dir.display()))?;
            for name in names {
                let inst = builtin(&name, a.urgency_prob)
                    .ok_or_else(|| Rejected::new(format!("unknown instance `{name}`")))??;
                let path = a.out_dir.join(format!("{name}.mcv"));
                fs::write(&path, write_instance(&inst))
                    .with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Cmd::Bench(a) => bench(&a),
    }
}

fn bench(a: &BenchArgs) -> Result<()> {
    let params = a.search.params()?;
    if a.runs == 0 {
        return Err(Rejected::new("at least one run is required"));
    }
    let mut names: Vec<String> = match a.set {
        BenchSet::Mcvrp => (1..=14).map(|i| format!("mcvrp-vrpnc{i}")).collect(),
        set => benchmark::all_specs()
            .into_iter()
            .filter(|s| match set {
                BenchSet::One => s.set == 1,
                BenchSet::Two => s.set == 2,
                BenchSet::Three => s.set == 3,
                _ => true,
            })
            .map(|s| s.name())
            .collect(),
    };
    if !a.only.is_empty() {
        names.retain(|n| a.only.contains(n));
    }
    let problems = names
        .iter()
        .map(|n| {
            let inst = builtin(n, a.urgency_prob)
                .ok_or_else(|| Rejected::new(format!("unknown instance `{n}`")))??;
            Problem::new(inst).map_err(reject)
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..problems.len())
        .flat_map(|i| (0..a.runs).map(move |r| (i, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, r)| {
            let p = SearchParams {
                seed: params.seed + r,
                ..params.clone()
            };
            its(&problems[i], &p).map(|o| (i, o)).map_err(reject)
        })
        .collect::<Result<Vec<_>>>()?;
    println!("{SUMMARY_HEADER},reference_expected,gap_percent,reference_occupancy");
    for (i, name) in names.iter().enumerate() {
        let mine: Vec<_> = results
            .iter()
            .filter(|(j, _)| *j == i)
            .map(|(_, o)| o)
            .collect();
        let best = mine
            .iter()
            .min_by(|x, y| x.key.cmp_total(&y.key))
            .expect("at least one run");
        let seconds: f64 = mine.iter().map(|o| o.elapsed.as_secs_f64()).sum();
        let p = &problems[i];
        let e = evaluate(p, &best.solution);
        let (ref_dist, ref_occ) = match name.strip_prefix("mcvrp-vrpnc") {
            Some(id) => (
                id.parse()
                    .ok()
                    .and_then(published::mcvrp_reference)
                    .map(|r| r.1),
                None,
            ),
            None => match published::stochastic_reference(name) {
                Some(r) => (Some(r.expected), Some(r.occupancy)),
                None => (None, None),
            },
        };
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
        let gap = ref_dist.map(|r| 100.0 * (e.expected_distance() - r) / r);
        println!(
            "{},{},{},{}",
            summary_row(name, p, &best.solution, &e, Some(seconds)),
            fmt(ref_dist),
            fmt(gap),
            fmt(ref_occ)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Rejected>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
