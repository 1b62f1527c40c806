//! Command-line surface: ingest norm logs, emit schedules, evaluate
//! last-iterate bounds, and run desk-scale experiments.
//!
//! Exit codes: 0 success, 2 usage or parse errors, 3 domain or degenerate
//! inputs. Every subcommand is a pure function of its flags and input
//! files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use schedkit::bounds::{anyeta_bound, BoundReport};
use schedkit::io;
use schedkit::lab::{parse_libsvm, run_sgd, Problem, RunReport};
use schedkit::plot::{render_svg, Panel, Series};
use schedkit::refine::{refine, GradientNormLog, NormKind, RefinementConfig, Weighting, ZeroPolicy};
use schedkit::{apply_warmup, fit_poly, make_schedule, Error, Schedule, ScheduleKind};

/// Fraction of the filtered peak used when clamping zero norms.
const CLAMP_EPSILON_FRACTION: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "schedkit",
    version,
    about = "Weight-based learning-rate schedules: refine, emit, bound, simulate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a gradient-norm log into a refined multiplier schedule
    Refine(RefineArgs),
    /// Emit a named schedule as CSV
    Schedule(ScheduleArgs),
    /// Evaluate the last-iterate bound for a schedule
    Bound(BoundArgs),
    /// Run desk-scale convex experiments and aggregate results
    Simulate(SimulateArgs),
    /// Fit warmup fraction and polynomial decay power to a schedule
    FitPoly(FitPolyArgs),
}

#[derive(Args)]
struct RefineArgs {
    /// Norm log: CSV `step,norm[,kind]` or JSON-lines `{"step":..,"norm":..}`
    norms_file: PathBuf,
    /// Filter-width fraction of the horizon
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// Inversion rule; `auto` follows the log's norm kind
    #[arg(long, value_enum, default_value_t = WeightingFlag::Auto)]
    weighting: WeightingFlag,
    /// What to do when a filtered norm is zero
    #[arg(long, value_enum, default_value_t = ZeroPolicyFlag::Error)]
    zero_policy: ZeroPolicyFlag,
    /// Override the norm kind declared by the file
    #[arg(long, value_enum)]
    norm_kind: Option<NormKindFlag>,
    /// Output schedule CSV path
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG overlaying raw norms, filtered norms, and the schedule
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Schedule family
    #[arg(long, value_enum)]
    kind: KindFlag,
    /// Horizon T
    #[arg(long)]
    steps: usize,
    /// Warmup fraction in [0, 1)
    #[arg(long, default_value_t = 0.0)]
    warmup: f64,
    /// Decay power for `poly`
    #[arg(long, default_value_t = 2.0)]
    power: f64,
    /// Offset for `inv-t` and `inv-sqrt`
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Output schedule CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(
    clap::ArgGroup::new("norm_source").required(true).args(["norms_file", "g"])
))]
struct BoundArgs {
    /// Schedule CSV holding the multipliers
    #[arg(long)]
    eta_file: PathBuf,
    /// Per-step gradient norms (CSV or JSON-lines)
    #[arg(long)]
    norms_file: Option<PathBuf>,
    /// Constant gradient-norm bound G used for every step
    #[arg(long = "G")]
    g: Option<f64>,
    /// Distance bound D between the start and the comparator
    #[arg(long = "D")]
    d: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Problem: `abs`, `logreg`, or `libsvm:<path>`
    #[arg(long)]
    problem: String,
    /// Comma-separated schedule names; `refined` triggers the two-phase
    /// protocol (linear baseline, refine from its norms, rerun)
    #[arg(long, value_delimiter = ',', required = true)]
    schedules: Vec<String>,
    /// Number of seeds
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// First seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Steps per run
    #[arg(long)]
    steps: usize,
    /// Base learning rate; defaults to D/(G sqrt(T)) for `abs`, 0.3 otherwise
    #[arg(long)]
    scale: Option<f64>,
    /// Results CSV path; the per-run JSON-lines log lands next to it
    /// with extension `.jsonl`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitPolyArgs {
    /// Schedule CSV to fit
    schedule_file: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingFlag {
    Auto,
    InvSqL2,
    InvL1,
    InvAdamWeighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ZeroPolicyFlag {
    Error,
    Clamp,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKindFlag {
    L2,
    L1,
    AdamWeighted,
}

impl From<NormKindFlag> for NormKind {
    fn from(flag: NormKindFlag) -> NormKind {
        match flag {
            NormKindFlag::L2 => NormKind::L2,
            NormKindFlag::L1 => NormKind::L1,
            NormKindFlag::AdamWeighted => NormKind::AdamWeighted,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindFlag {
    Linear,
    Poly,
    Cosine,
    Stepwise,
    InvT,
    InvSqrt,
    Constant,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Refine(args) => cmd_refine(args),
        Command::Schedule(args) => cmd_schedule(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::FitPoly(args) => cmd_fit_poly(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for malformed input, 3 for well-formed input outside the domain.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io(_) => 2,
        _ => 3,
    }
}

fn cmd_refine(args: RefineArgs) -> Result<(), Error> {
    let log = io::read_norm_log(&args.norms_file, args.norm_kind.map(NormKind::from))?;
    let weighting = match args.weighting {
        WeightingFlag::Auto => Weighting::for_kind(log.kind()),
        WeightingFlag::InvSqL2 => Weighting::InvSqL2,
        WeightingFlag::InvL1 => Weighting::InvL1,
        WeightingFlag::InvAdamWeighted => Weighting::InvAdamWeighted,
    };
    let config = RefinementConfig {
        tau: args.tau,
        weighting,
        zero_policy: match args.zero_policy {
            ZeroPolicyFlag::Error => ZeroPolicy::Error,
            ZeroPolicyFlag::Clamp => ZeroPolicy::Clamp {
                epsilon_fraction: CLAMP_EPSILON_FRACTION,
            },
        },
    };
    let refinement = refine(&log, &config)?;
    if refinement.clamped {
        eprintln!("note: zero filtered norms were clamped before inversion");
    }
    io::write_schedule_csv(&args.out, &refinement.schedule)?;
    if let Some(plot_path) = &args.plot {
        let svg = refine_plot(&log, &refinement.filtered_norms, &refinement.schedule);
        std::fs::write(plot_path, svg)?;
    }
    Ok(())
}

fn refine_plot(log: &GradientNormLog, filtered: &[f64], schedule: &Schedule) -> String {
    let mut norms_panel = Panel::new(
        "gradient norms",
        vec![
            Series::from_steps("raw", log.steps(), log.norms()),
            Series::from_steps("filtered", log.steps(), filtered),
        ],
    );
    norms_panel.log_y = true;
    let schedule_panel = Panel::new(
        "refined schedule",
        vec![Series::from_values("multiplier", schedule.values())],
    );
    render_svg(&[norms_panel, schedule_panel])
}

fn cmd_schedule(args: ScheduleArgs) -> Result<(), Error> {
    let kind = match args.kind {
        KindFlag::Linear => ScheduleKind::Linear,
        KindFlag::Poly => ScheduleKind::Poly { power: args.power },
        KindFlag::Cosine => ScheduleKind::Cosine,
        KindFlag::Stepwise => ScheduleKind::stepwise_default(),
        KindFlag::InvT => ScheduleKind::InvT { beta: args.beta },
        KindFlag::InvSqrt => ScheduleKind::InvSqrt { beta: args.beta },
        KindFlag::Constant => ScheduleKind::Constant,
    };
    let schedule = build_schedule(&kind, args.steps, args.warmup)?;
    io::write_schedule_csv(&args.out, &schedule)
}

/// Shared pipeline: construct, normalize to peak 1, then apply warmup.
fn build_schedule(kind: &ScheduleKind, steps: usize, warmup: f64) -> Result<Schedule, Error> {
    let schedule = make_schedule(kind, steps)?.normalize()?;
    apply_warmup(&schedule, warmup)
}

fn cmd_bound(args: BoundArgs) -> Result<(), Error> {
    let eta = io::read_schedule_csv(&args.eta_file)?;
    let gnorms: Vec<f64> = match (&args.norms_file, args.g) {
        (Some(path), None) => io::read_norm_log(path, None)?.norms().to_vec(),
        (None, Some(g)) => {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Domain(format!(
                    "gradient bound G must be finite and nonnegative, got {g}"
                )));
            }
            vec![g; eta.len()]
        }
        _ => unreachable!("clap enforces exactly one norm source"),
    };
    let report: BoundReport = anyeta_bound(&eta, &gnorms, args.d)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Domain(format!("cannot serialize bound report: {e}")))?;
    println!("{json}");
    Ok(())
}

fn cmd_fit_poly(args: FitPolyArgs) -> Result<(), Error> {
    let schedule = io::read_schedule_csv(&args.schedule_file)?;
    let fit = fit_poly(&schedule)?;
    let json = serde_json::to_string_pretty(&fit)
        .map_err(|e| Error::Domain(format!("cannot serialize fit: {e}")))?;
    println!("{json}");
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// One line of the JSON run log: either a completed report or the step at
/// which the run produced a non-finite value.
#[derive(serde::Serialize)]
struct RunRecord {
    schedule: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    diverged_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<RunReport>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    if args.seeds == 0 {
        return Err(Error::Domain("need at least one seed".into()));
    }
    let problem = resolve_problem(&args.problem)?;
    let scale = args.scale.unwrap_or_else(|| default_scale(&problem, args.steps));
    let seeds: Vec<u64> = (0..args.seeds as u64).map(|i| args.seed + i).collect();

    // Baseline linear runs are shared between the `linear` row and the
    // two-phase refinement, so compute them once per seed, lazily.
    let mut baselines: Vec<Option<Result<schedkit::lab::RunOutcome, Error>>> =
        (0..seeds.len()).map(|_| None).collect();
    let linear = build_schedule(&ScheduleKind::Linear, args.steps, 0.0)?;

    let mut records: Vec<RunRecord> = Vec::new();
    let mut rows: Vec<io::ResultRow> = Vec::new();
    let mut any_ok = false;
    for name in &args.schedules {
        let mut reports: Vec<RunReport> = Vec::new();
        for (i, &seed) in seeds.iter().enumerate() {
            let outcome = if name == "refined" {
                match baseline(&mut baselines, i, &problem, &linear, scale, args.steps, seed) {
                    Ok(base) => refine(
                        &base.report.norm_log,
                        &RefinementConfig {
                            tau: 0.1,
                            weighting: Weighting::for_kind(base.report.norm_log.kind()),
                            zero_policy: ZeroPolicy::Clamp {
                                epsilon_fraction: CLAMP_EPSILON_FRACTION,
                            },
                        },
                    )
                    .and_then(|refined| {
                        run_sgd(&problem, &refined.schedule, scale, args.steps, seed)
                    }),
                    Err(e) => Err(clone_error(e)),
                }
            } else if name == "linear" {
                match baseline(&mut baselines, i, &problem, &linear, scale, args.steps, seed) {
                    Ok(out) => Ok(out.clone()),
                    Err(e) => Err(clone_error(e)),
                }
            } else {
                named_schedule(name, args.steps)
                    .and_then(|s| run_sgd(&problem, &s, scale, args.steps, seed))
            };
            match outcome {
                Ok(out) => {
                    any_ok = true;
                    records.push(RunRecord {
                        schedule: name.clone(),
                        seed,
                        diverged_at: None,
                        report: Some(out.report.clone()),
                    });
                    reports.push(out.report);
                }
                Err(Error::Diverged { step }) => {
                    eprintln!("note: {name} run with seed {seed} diverged at step {step}");
                    records.push(RunRecord {
                        schedule: name.clone(),
                        seed,
                        diverged_at: Some(step),
                        report: None,
                    });
                }
                Err(other) => return Err(other),
            }
        }
        if reports.is_empty() {
            eprintln!("note: every {name} run diverged; no results row");
            continue;
        }
        rows.push(aggregate(name, &reports));
    }
    if !any_ok {
        return Err(Error::Domain("all runs diverged".into()));
    }
    io::write_results_csv(&args.out, &rows)?;
    let log_path = args.out.with_extension("jsonl");
    let mut log_text = String::new();
    for record in &records {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Domain(format!("cannot serialize run record: {e}")))?;
        log_text.push_str(&line);
        log_text.push('\n');
    }
    std::fs::write(&log_path, log_text)?;
    Ok(())
}

#[allow(clippy::type_complexity)]
fn baseline<'a>(
    baselines: &'a mut [Option<Result<schedkit::lab::RunOutcome, Error>>],
    index: usize,
    problem: &Problem,
    linear: &Schedule,
    scale: f64,
    steps: usize,
    seed: u64,
) -> &'a Result<schedkit::lab::RunOutcome, Error> {
    if baselines[index].is_none() {
        baselines[index] = Some(run_sgd(problem, linear, scale, steps, seed));
    }
    baselines[index].as_ref().expect("just filled")
}

/// Errors are not `Clone`; rebuild the few variants a run can produce.
fn clone_error(e: &Error) -> Error {
    match e {
        Error::Diverged { step } => Error::Diverged { step: *step },
        other => Error::Domain(other.to_string()),
    }
}

fn named_schedule(name: &str, steps: usize) -> Result<Schedule, Error> {
    let kind = match name {
        "constant" => ScheduleKind::Constant,
        "linear" => ScheduleKind::Linear,
        "cosine" => ScheduleKind::Cosine,
        "poly" => ScheduleKind::Poly { power: 2.0 },
        "stepwise" => ScheduleKind::stepwise_default(),
        "inv-t" => ScheduleKind::InvT { beta: 1.0 },
        "inv-sqrt" => ScheduleKind::InvSqrt { beta: 1.0 },
        other => {
            return Err(Error::Domain(format!(
                "unknown schedule '{other}' (expected constant, linear, cosine, poly, \
                 stepwise, inv-t, inv-sqrt, or refined)"
            )))
        }
    };
    build_schedule(&kind, steps, 0.0)
}

fn resolve_problem(name: &str) -> Result<Problem, Error> {
    if name == "abs" {
        // unit Lipschitz constant, unit distance to the minimizer
        return Problem::abs_lipschitz(1.0, 0.0, 1.0);
    }
    if name == "logreg" {
        return Problem::synthetic_logreg(512, 10, 7);
    }
    if let Some(path) = name.strip_prefix("libsvm:") {
        let text = std::fs::read_to_string(Path::new(path))?;
        return Problem::from_libsvm(parse_libsvm(&text)?);
    }
    Err(Error::Domain(format!(
        "unknown problem '{name}' (expected abs, logreg, or libsvm:<path>)"
    )))
}

/// The classic D/(G sqrt(T)) rate for the scalar problem; a fixed desk-scale
/// rate for the logistic problems.
fn default_scale(problem: &Problem, steps: usize) -> f64 {
    match problem {
        Problem::AbsLipschitz {
            lipschitz,
            center,
            initial,
        } => (initial - center).abs() / (lipschitz * (steps.max(1) as f64).sqrt()),
        _ => 0.3,
    }
}

fn aggregate(name: &str, reports: &[RunReport]) -> io::ResultRow {
    let losses: Vec<f64> = reports.iter().map(|r| r.final_loss).collect();
    let (mean_final_loss, stderr_final_loss) = io::mean_stderr(&losses);
    let collect_opt = |f: fn(&RunReport) -> Option<f64>| -> (Option<f64>, Option<f64>) {
        let vals: Vec<f64> = reports.iter().filter_map(f).collect();
        if vals.len() == reports.len() {
            let (m, s) = io::mean_stderr(&vals);
            (Some(m), Some(s))
        } else {
            (None, None)
        }
    };
    let (mean_gap, stderr_gap) = collect_opt(|r| r.final_suboptimality);
    let (mean_err, stderr_err) = collect_opt(|r| r.error_rate);
    io::ResultRow {
        schedule: name.to_string(),
        seeds: reports.len(),
        mean_final_loss,
        stderr_final_loss,
        mean_final_suboptimality: mean_gap,
        stderr_final_suboptimality: stderr_gap,
        mean_error_rate: mean_err,
        stderr_error_rate: stderr_err,
    }
}
