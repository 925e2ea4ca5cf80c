use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jrc::coordinator::{dual_lower_bound, run, Config, Init, RunResult, RunStatus, Strategy};
use jrc::gen::{
    apply_sweep, contended_detour_instance, example1, example1_compact_travel, example1_default_travel, example3,
    random_tiny, Example1Overrides, Example3Case, Example3Scenario, PhysicalTruck, SweepParameter, TinyLimits,
    Topology, TravelTable,
};
use jrc::model::{Assignment, CostBreakdown, VariableCatalog};
use jrc::schedule::{from_records, to_records, TruckRecord, TruckSchedule};
use jrc::verify::{brute_force_optimum, verify, OracleLimits, OracleOutcome};
use jrc::{Compiled, Instance};
use serde::{Deserialize, Serialize};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_FEASIBLE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "jrc", version, about = "Joint routing and charging for electric truck fleets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an instance and print its issues.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run the coordinator; writes solution.json and trace.csv.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Check a solution file against every constraint.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Exact optimum by exhaustive search (tiny instances only).
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// SLBLR against baseline LR over seeded initial multipliers.
    Bench {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Initial multipliers are drawn from [-span, span]; 0 starts at zero.
        #[arg(long, default_value_t = 50.0)]
        init_span: f64,
        /// Cost whose first attainment is counted in solves.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-solve an instance over scaled resources.
    Sweep {
        #[arg(long)]
        instance: PathBuf,
        /// batteryCapacityScale, chargePowerScale or chargersPerNode.
        #[arg(long)]
        parameter: SweepParameter,
        /// Strictly increasing, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        factors: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Backend::Oracle)]
        backend: Backend,
        /// JSON physical truck parameters the rates are derived from.
        #[arg(long)]
        physical: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate an instance.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Output file; stdout when absent.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenKind {
    Example1 {
        /// `compact`, `default`, or a JSON file of `[from, to, periods]` triples.
        #[arg(long, default_value = "compact")]
        travel: String,
        /// JSON scenario overrides.
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    Example3 {
        /// Topology JSON; the built-in placeholder when absent.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// base, long-range, fast-charging or fewer-chargers:NODE.
        #[arg(long, default_value = "base")]
        case: String,
        #[arg(long)]
        period_minutes: f64,
    },
    /// Two trucks contending for a single direct-route charger.
    Detour,
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        max_trucks: u32,
        #[arg(long, default_value_t = 4)]
        max_nodes: u32,
        #[arg(long, default_value_t = 20)]
        max_periods: u32,
        #[arg(long, default_value_t = 2)]
        max_travel: u32,
    },
}

#[derive(Args, Clone, Default)]
struct SolverArgs {
    /// JSON solver configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// slblr or lr.
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    #[arg(long)]
    iter_limit: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct LimitArgs {
    #[arg(long)]
    max_trucks: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    max_periods: Option<u32>,
    #[arg(long)]
    label_budget: Option<u64>,
    #[arg(long)]
    combination_budget: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Oracle,
    Solver,
}

/// Marks failures that map to the validation exit code.
#[derive(Debug)]
struct ValidationFailed;

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("instance failed validation")
    }
}

impl std::error::Error for ValidationFailed {}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SolutionFile {
    source: String,
    status: String,
    cost: Option<CostBreakdown>,
    #[serde(default)]
    lower_bound: Option<f64>,
    #[serde(default)]
    iterations: Option<u64>,
    #[serde(default)]
    subproblem_solves: Option<u64>,
    #[serde(default)]
    wall_time_s: Option<f64>,
    schedules: Vec<TruckRecord>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BenchRow {
    seed: u64,
    strategy: Strategy,
    status: RunStatus,
    best_cost: Option<f64>,
    iterations: u64,
    subproblem_solves: u64,
    solves_to_target: Option<u64>,
    wall_time: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepRow {
    scale: f64,
    best_cost: Option<f64>,
    trucks_used: Option<usize>,
    wall_time: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationFailed>().is_some() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Validate { instance } => validate_cmd(&instance),
        Cmd::Solve { instance, solver, out_dir } => solve_cmd(&instance, &solver, &out_dir),
        Cmd::Verify { instance, solution } => verify_cmd(&instance, &solution),
        Cmd::Oracle { instance, limits, out_dir } => oracle_cmd(&instance, &limits, out_dir.as_deref()),
        Cmd::Bench { instance, solver, seeds, init_span, target, out_dir } => {
            bench_cmd(&instance, &solver, seeds, init_span, target, out_dir.as_deref())
        }
        Cmd::Sweep { instance, parameter, factors, backend, physical, solver, limits, out_dir } => {
            let spec = SweepSpec { parameter, factors, backend, physical };
            sweep_cmd(&instance, &spec, &solver, &limits, out_dir.as_deref())
        }
        Cmd::Gen { kind, out } => gen_cmd(kind, out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_instance(path: &Path) -> Result<Instance> {
    Instance::from_json(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .context(ValidationFailed)
}

fn load(path: &Path) -> Result<(Instance, Compiled)> {
    let inst = read_instance(path)?;
    let report = inst.validate();
    if !report.is_pass() {
        for issue in &report.issues {
            eprintln!("{}: {}", issue.path, issue.message);
        }
        return Err(ValidationFailed.into());
    }
    let c = inst.compile().context(ValidationFailed)?;
    Ok((inst, c))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn config(args: &SolverArgs) -> Result<Config> {
    let mut cfg: Config = match &args.config {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.strategy {
        cfg.strategy = s;
    }
    if let Some(t) = args.time_limit_s {
        cfg.time_limit_s = Some(t);
    }
    if let Some(k) = args.iter_limit {
        cfg.max_iterations = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn limits(args: &LimitArgs) -> OracleLimits {
    let d = OracleLimits::default();
    OracleLimits {
        max_trucks: args.max_trucks.unwrap_or(d.max_trucks),
        max_nodes: args.max_nodes.unwrap_or(d.max_nodes),
        max_periods: args.max_periods.unwrap_or(d.max_periods),
        label_budget: args.label_budget.unwrap_or(d.label_budget),
        combination_budget: args.combination_budget.unwrap_or(d.combination_budget),
    }
}

fn trucks_used(schedules: &[TruckSchedule]) -> usize {
    schedules.iter().filter(|s| !s.is_idle()).count()
}

fn validate_cmd(path: &Path) -> Result<u8> {
    let report = read_instance(path)?.validate();
    print_json(&report)?;
    Ok(if report.is_pass() { 0 } else { EXIT_VALIDATION })
}

fn solution_from_run(c: &Compiled, r: &RunResult) -> Result<SolutionFile> {
    let lower_bound = dual_lower_bound(c, &r.multipliers)?;
    Ok(SolutionFile {
        source: r.strategy.to_string(),
        status: serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string(),
        cost: r.best_cost,
        lower_bound: Some(lower_bound),
        iterations: Some(r.iterations),
        subproblem_solves: Some(r.subproblem_solves),
        wall_time_s: Some(r.wall_time_s),
        schedules: r.best_schedules.as_deref().map(|s| to_records(c, s)).unwrap_or_default(),
    })
}

fn solve_cmd(path: &Path, args: &SolverArgs, out_dir: &Path) -> Result<u8> {
    let (_, c) = load(path)?;
    let cfg = config(args)?;
    let r = run(&c, &cfg)?;
    let sol = solution_from_run(&c, &r)?;
    write_file(out_dir, "solution.json", serde_json::to_string_pretty(&sol)?.as_bytes())?;
    let mut trace = Vec::new();
    r.write_trace(&mut trace)?;
    write_file(out_dir, "trace.csv", &trace)?;
    match sol.cost {
        Some(cost) => println!(
            "{}: cost {:.6} (lower bound {:.6}) after {} iterations, {} subproblem solves",
            sol.source,
            cost.total,
            sol.lower_bound.unwrap_or(f64::NAN),
            r.iterations,
            r.subproblem_solves
        ),
        None => println!("{}: no feasible schedule, min ‖H‖₁ = {}", sol.source, r.min_violation),
    }
    Ok(match r.status {
        RunStatus::Feasible => 0,
        RunStatus::NoFeasible => EXIT_NO_FEASIBLE,
    })
}

fn verify_cmd(path: &Path, solution: &Path) -> Result<u8> {
    let (_, c) = load(path)?;
    let sol: SolutionFile =
        serde_json::from_str(&read(solution)?).with_context(|| format!("parsing {}", solution.display()))?;
    if sol.schedules.is_empty() {
        bail!("{} holds no schedules", solution.display());
    }
    let schedules = from_records(&c, &sol.schedules)?;
    let x = Assignment::from_schedules(&c, &VariableCatalog::new(&c), &schedules)?;
    let report = verify(&c, &x, true)?;
    print_json(&report)?;
    Ok(if report.feasible { 0 } else { EXIT_NO_FEASIBLE })
}

fn oracle_cmd(path: &Path, args: &LimitArgs, out_dir: Option<&Path>) -> Result<u8> {
    let (_, c) = load(path)?;
    let start = Instant::now();
    let outcome = brute_force_optimum(&c, &limits(args));
    let wall = start.elapsed().as_secs_f64();
    let (status, code) = match &outcome {
        OracleOutcome::Optimal { .. } => ("optimal", 0),
        OracleOutcome::Infeasible => ("infeasible", EXIT_NO_FEASIBLE),
        OracleOutcome::BudgetExceeded => ("budgetExceeded", EXIT_BUDGET),
    };
    let (cost, schedules) = match &outcome {
        OracleOutcome::Optimal { cost, schedules } => (Some(*cost), to_records(&c, schedules)),
        _ => (None, Vec::new()),
    };
    let sol = SolutionFile {
        source: "oracle".into(),
        status: status.into(),
        cost,
        lower_bound: cost.map(|c| c.total),
        iterations: None,
        subproblem_solves: None,
        wall_time_s: Some(wall),
        schedules,
    };
    print_json(&sol)?;
    if let Some(dir) = out_dir {
        write_file(dir, "solution.json", serde_json::to_string_pretty(&sol)?.as_bytes())?;
    }
    Ok(code)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(w.into_inner()?)
}

fn emit_csv<T: Serialize>(rows: &[T], out_dir: Option<&Path>, name: &str) -> Result<()> {
    let bytes = csv_bytes(rows)?;
    std::io::stdout().write_all(&bytes)?;
    if let Some(dir) = out_dir {
        write_file(dir, name, &bytes)?;
    }
    Ok(())
}

fn bench_cmd(
    path: &Path,
    args: &SolverArgs,
    seeds: u64,
    span: f64,
    target: Option<f64>,
    out_dir: Option<&Path>,
) -> Result<u8> {
    let (_, c) = load(path)?;
    let base = config(args)?;
    if !(span >= 0.0) {
        bail!("init span must be non-negative");
    }
    let target = target.or(base.target_cost);
    let mut rows = Vec::new();
    for seed in 0..seeds {
        for strategy in [Strategy::Slblr, Strategy::BaselineLr] {
            let cfg = Config {
                seed,
                strategy,
                target_cost: target,
                init: if span > 0.0 { Init::Uniform { lo: -span, hi: span } } else { Init::Zeros },
                ..base.clone()
            };
            let r = run(&c, &cfg)?;
            rows.push(BenchRow {
                seed,
                strategy,
                status: r.status,
                best_cost: r.best_total(),
                iterations: r.iterations,
                subproblem_solves: r.subproblem_solves,
                solves_to_target: target.and_then(|t| r.solves_to_reach(t, 1e-9)),
                wall_time: r.wall_time_s,
            });
        }
    }
    emit_csv(&rows, out_dir, "bench.csv")?;
    Ok(0)
}

struct SweepSpec {
    parameter: SweepParameter,
    factors: Vec<f64>,
    backend: Backend,
    physical: Option<PathBuf>,
}

impl SweepSpec {
    fn check(&self) -> Result<()> {
        if self.factors.iter().any(|f| !(*f > 0.0)) {
            bail!("scale factors must be positive");
        }
        if self.factors.windows(2).any(|w| w[0] >= w[1]) {
            bail!("scale factors must be strictly increasing");
        }
        Ok(())
    }
}

fn sweep_cmd(path: &Path, spec: &SweepSpec, args: &SolverArgs, lim: &LimitArgs, out_dir: Option<&Path>) -> Result<u8> {
    spec.check()?;
    let (inst, _) = load(path)?;
    let base = match &spec.physical {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => PhysicalTruck::default(),
    };
    let cfg = config(args)?;
    let lim = limits(lim);
    let mut code = 0;
    let mut rows = Vec::new();
    for &factor in &spec.factors {
        let scaled = apply_sweep(&inst, &base, spec.parameter, factor)?;
        let report = scaled.validate();
        if !report.is_pass() {
            for issue in &report.issues {
                eprintln!("scale {factor}: {}: {}", issue.path, issue.message);
            }
            return Err(ValidationFailed.into());
        }
        let c = scaled.compile()?;
        let start = Instant::now();
        let (best, schedules) = match spec.backend {
            Backend::Oracle => match brute_force_optimum(&c, &lim) {
                OracleOutcome::Optimal { cost, schedules } => (Some(cost.total), Some(schedules)),
                OracleOutcome::Infeasible => {
                    code = code.max(EXIT_NO_FEASIBLE);
                    (None, None)
                }
                OracleOutcome::BudgetExceeded => {
                    code = code.max(EXIT_BUDGET);
                    (None, None)
                }
            },
            Backend::Solver => {
                let r = run(&c, &cfg)?;
                if r.status == RunStatus::NoFeasible {
                    code = code.max(EXIT_NO_FEASIBLE);
                }
                (r.best_total(), r.best_schedules)
            }
        };
        rows.push(SweepRow {
            scale: factor,
            best_cost: best,
            trucks_used: schedules.as_deref().map(trucks_used),
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    emit_csv(&rows, out_dir, "sweep.csv")?;
    Ok(code)
}

fn parse_travel(spec: &str) -> Result<TravelTable> {
    match spec {
        "compact" => Ok(example1_compact_travel()),
        "default" => Ok(example1_default_travel()),
        file => {
            let triples: Vec<(u32, u32, u32)> =
                serde_json::from_str(&read(Path::new(file))?).with_context(|| format!("parsing {file}"))?;
            Ok(triples.into_iter().map(|(a, b, t)| ((a, b), t)).collect())
        }
    }
}

fn parse_case(s: &str) -> Result<Example3Case> {
    Ok(match s {
        "base" => Example3Case::Base,
        "long-range" => Example3Case::LongRange,
        "fast-charging" => Example3Case::FastCharging,
        other => match other.strip_prefix("fewer-chargers:") {
            Some(node) => Example3Case::FewerChargers(node.parse().context("fewer-chargers needs a node id")?),
            None => bail!("unknown case {other}"),
        },
    })
}

fn gen_cmd(kind: GenKind, out: Option<&Path>) -> Result<u8> {
    let inst = match kind {
        GenKind::Example1 { travel, overrides } => {
            let o: Example1Overrides = match overrides {
                Some(p) => serde_json::from_str(&read(&p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => Example1Overrides::default(),
            };
            example1(&parse_travel(&travel)?, &o)?
        }
        GenKind::Example3 { topology, case, period_minutes } => {
            let topo = match topology {
                Some(p) => Topology::from_json(&read(&p)?)?,
                None => Topology::la_placeholder(),
            };
            let scenario = Example3Scenario {
                case: parse_case(&case)?,
                period_minutes,
                charge_price: 1.0,
                labor_cost: 1.0,
                cushion: None,
            };
            example3(&topo, &scenario)?
        }
        GenKind::Detour => contended_detour_instance(),
        GenKind::Random { seed, max_trucks, max_nodes, max_periods, max_travel } => random_tiny(
            seed,
            TinyLimits {
                max_trucks,
                max_nodes,
                max_periods,
                max_travel,
            },
        ),
    };
    let text = inst.to_canonical_json()?;
    match out {
        Some(p) => fs::write(p, text.as_bytes()).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(0)
}
