use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gcs_tsp::baselines::{solve_ecg, solve_greedy};
use gcs_tsp::oracle::{brute_force, OracleLimits};
use gcs_tsp::problems::{gen_bezier, gen_linear, gen_point};
use gcs_tsp::schema::{parse_instance, serialize_instance, validate_instance};
use gcs_tsp::solution::{parse_solution, serialize_solution};
use gcs_tsp::solution::Status;
use gcs_tsp::solver::{solve, SolveOptions};

use gcs_tsp_cli::{bench, plot};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_TIME_LIMIT: u8 = 4;

#[derive(Parser)]
#[command(name = "gcs-tsp", version, about = "Tour solving over graphs of convex sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Point,
    Linear,
    Bezier,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Ghost,
    EpsGhost,
    Ecg,
    Greedy,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance and write it as JSON
    Gen(GenArgs),
    /// Solve an instance file with a chosen algorithm
    Solve(SolveArgs),
    /// Run a manifest of (instance, algorithm) cells and summarize as CSV
    Bench(BenchArgs),
    /// Draw an instance and an optional solution as SVG
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Vertices for point instances (5..=25), directed edges otherwise (10..=50)
    #[arg(long)]
    size: usize,
    #[arg(long)]
    seed: u64,
    /// Junction smoothness for bezier instances: 0 or 1
    #[arg(long, default_value_t = 0)]
    continuity: u8,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Relative gap for eps-ghost, in [0, 1)
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Wall-clock budget in seconds
    #[arg(long, default_value_t = 100.0)]
    time_limit: f64,
    /// Output file for the solution record; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// File for line-delimited search events (ghost and eps-ghost only)
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads (the GCS_TSP_SOLVER_THREADS variable caps this)
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Solution record whose trajectory should be drawn
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), std::io::Error> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(args: &GenArgs) -> ExitCode {
    let size_range = match args.family {
        Family::Point => 5..=25,
        Family::Linear | Family::Bezier => 10..=50,
    };
    if !size_range.contains(&args.size) {
        return fail(
            EXIT_USAGE,
            format!("size {} outside {:?} for this family", args.size, size_range),
        );
    }
    if args.continuity > 1 {
        return fail(EXIT_USAGE, "continuity must be 0 or 1");
    }
    if args.continuity == 1 && args.family != Family::Bezier {
        return fail(EXIT_USAGE, "continuity only applies to the bezier family");
    }
    let generated = match args.family {
        Family::Point => gen_point(args.size, args.seed),
        Family::Linear => gen_linear(args.size, args.seed),
        Family::Bezier => gen_bezier(args.size, args.seed, args.continuity == 1),
    };
    let instance = match generated {
        Ok(i) => i,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    match write_or_print(args.out.as_deref(), &serialize_instance(&instance)) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => fail(EXIT_USAGE, e),
    }
}

fn cmd_solve(args: &SolveArgs) -> ExitCode {
    if !(0.0..1.0).contains(&args.epsilon) {
        return fail(EXIT_USAGE, format!("epsilon {} outside [0, 1)", args.epsilon));
    }
    if args.algo != Algo::EpsGhost && args.epsilon != 0.0 {
        return fail(EXIT_USAGE, "--epsilon only applies to eps-ghost");
    }
    if !args.time_limit.is_finite() || args.time_limit < 0.0 {
        return fail(EXIT_USAGE, format!("bad time limit {}", args.time_limit));
    }
    let text = match fs::read_to_string(&args.instance) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", args.instance.display())),
    };
    let instance = match parse_instance(&text) {
        Ok(i) => i,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let violations = validate_instance(&instance);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invalid instance: {v}");
        }
        return ExitCode::from(EXIT_USAGE);
    }
    let time_limit = Some(Duration::from_secs_f64(args.time_limit));
    let solved = match args.algo {
        Algo::Ghost | Algo::EpsGhost => solve(
            &instance,
            &SolveOptions {
                epsilon: args.epsilon,
                time_limit,
                log_events: args.log.is_some(),
            },
        ),
        Algo::Ecg => solve_ecg(&instance, time_limit),
        Algo::Greedy => solve_greedy(&instance, time_limit),
        Algo::Oracle => match brute_force(&instance, OracleLimits::default()) {
            Ok(s) => s,
            Err(e) => return fail(EXIT_USAGE, e),
        },
    };
    if let Some(log) = &args.log {
        let mut lines = solved.events.join("\n");
        lines.push('\n');
        if let Err(e) = fs::write(log, lines) {
            return fail(EXIT_USAGE, format!("{}: {e}", log.display()));
        }
    }
    let record = solved.to_record(&instance);
    if let Err(e) = write_or_print(args.out.as_deref(), &serialize_solution(&record)) {
        return fail(EXIT_USAGE, e);
    }
    match record.status {
        Status::Optimal | Status::BoundedSuboptimal | Status::Heuristic => ExitCode::from(EXIT_OK),
        Status::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
        Status::TimeLimit => ExitCode::from(EXIT_TIME_LIMIT),
    }
}

fn cmd_bench(args: &BenchArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.manifest) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", args.manifest.display())),
    };
    let manifest = match bench::parse_manifest(&text) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    if args.parallel == 0 {
        return fail(EXIT_USAGE, "--parallel must be at least 1");
    }
    if let Err(e) = fs::create_dir_all(&args.out_dir) {
        return fail(EXIT_USAGE, format!("{}: {e}", args.out_dir.display()));
    }
    let outcomes = bench::run_manifest(&manifest, args.parallel);
    for (i, outcome) in outcomes.iter().enumerate() {
        if let Ok(record) = &outcome.record {
            let file = args
                .out_dir
                .join(format!("{i:03}-{}-{}.json", outcome.instance, outcome.algo));
            if let Err(e) = fs::write(&file, serialize_solution(record)) {
                return fail(EXIT_USAGE, format!("{}: {e}", file.display()));
            }
        }
    }
    let summary = bench::summary_csv(&outcomes);
    let path = args.out_dir.join("summary.csv");
    match fs::write(&path, summary) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => fail(EXIT_USAGE, format!("{}: {e}", path.display())),
    }
}

fn cmd_plot(args: &PlotArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.instance) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", args.instance.display())),
    };
    let instance = match parse_instance(&text) {
        Ok(i) => i,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let record = match &args.result {
        None => None,
        Some(path) => match fs::read_to_string(path) {
            Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", path.display())),
            Ok(t) => match parse_solution(&t) {
                Ok(r) => Some(r),
                Err(e) => return fail(EXIT_USAGE, e),
            },
        },
    };
    let trajectory = record.as_ref().and_then(|r| r.trajectory.as_deref());
    let svg = match plot::render(&instance, trajectory) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    match fs::write(&args.out, svg) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => fail(EXIT_USAGE, format!("{}: {e}", args.out.display())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Plot(args) => cmd_plot(args),
    }
}
