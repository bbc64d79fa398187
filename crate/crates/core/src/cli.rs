//! Command-line front end: parse an instance, solve it, print the
//! convergence log and a one-line summary.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::baselines::{subgradient_solve, StepRule};
use crate::engine::{Reparametrization, StopRule};
use crate::gen::random_order;
use crate::io::{parse_dd, parse_multicut, parse_uai, parse_uai_neglog, write_csv, ConvergenceRecord, Event};
use crate::matching::{build_gm_factor_graph, round_gm, solve_gm, MatchingModel};
use crate::mrf::{build_crf_factor_graph, round_crf, solve_crf, CrfSchedule, PairwiseModel};
use crate::multicut::{
    build_multicut_factor_graph, enumerate_triangles, multicut_cost, received_edge_costs, round_multicut_kl,
    solve_multicut, MulticutConfig, MulticutInstance,
};
use crate::solve::SolveOptions;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Step rule of the subgradient baseline.
pub const SUBGRADIENT_STEP: StepRule = StepRule::Diminishing(1.0);

#[derive(Parser, Debug)]
#[command(name = "dual-ascent", version, about = "Dual block-coordinate ascent solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pairwise CRF MAP inference on a UAI MARKOV file
    Mrf(MrfArgs),
    /// Graph matching on an assignment-list file
    Gm(CommonArgs),
    /// Multicut on an edge-list file
    Multicut(MulticutArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Round on every n-th forward pass (0 disables periodic rounding)
    #[arg(long, default_value_t = 10)]
    round_interval: usize,
    /// Shuffle the node order with this seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV log here instead of standard output
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Solver::Mp)]
    solver: Solver,
}

#[derive(Args, Debug)]
struct MrfArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Srmp)]
    schedule: ScheduleArg,
    /// Read tables as potentials and use their negative logarithm
    #[arg(long)]
    uai_neglog: bool,
}

#[derive(Args, Debug)]
struct MulticutArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 20)]
    tighten_interval: usize,
    /// Triangles added per separation round (default: number of edges)
    #[arg(long)]
    separation_budget: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Solver {
    Mp,
    Subgradient,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ScheduleArg {
    Srmp,
    Msd,
    Mplp,
}

impl From<ScheduleArg> for CrfSchedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Srmp => CrfSchedule::Srmp,
            ScheduleArg::Msd => CrfSchedule::Msd,
            ScheduleArg::Mplp => CrfSchedule::Mplp,
        }
    }
}

struct Report {
    dual: f64,
    primal: f64,
    trace: Vec<ConvergenceRecord>,
}

enum Failure {
    Usage(String),
    Input(String),
    Solve(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Input(e.to_string()),
            _ => Failure::Solve(e.to_string()),
        }
    }
}

/// Runs the CLI on `argv` (program name first) with the process streams.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}

pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Input(m) => (EXIT_INPUT, m),
                Failure::Solve(m) => (EXIT_SOLVE, m),
            };
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let common = match &cli.command {
        Command::Mrf(a) => &a.common,
        Command::Gm(a) => a,
        Command::Multicut(a) => &a.common,
    };
    if !(common.tol >= 0.0 && common.tol.is_finite()) {
        return Err(Failure::Usage(format!(
            "--tol must be a non-negative number, got {}",
            common.tol
        )));
    }
    let text = fs::read_to_string(&common.input)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", common.input.display())))?;
    let stop = StopRule {
        max_iters: common.max_iters,
        tol: common.tol,
        ..StopRule::default()
    };
    let options = SolveOptions {
        stop,
        round_interval: common.round_interval,
    };

    let report = match &cli.command {
        Command::Mrf(a) => {
            let model = if a.uai_neglog {
                parse_uai_neglog(&text)?
            } else {
                parse_uai(&text)?
            };
            let order = node_order(model.num_nodes(), common.seed);
            match common.solver {
                Solver::Mp => {
                    let o = solve_crf(&model, a.schedule.into(), &order, &options)?;
                    Report {
                        dual: o.dual,
                        primal: o.primal,
                        trace: o.trace,
                    }
                }
                Solver::Subgradient => subgradient_mrf(&model, &order, common.max_iters)?,
            }
        }
        Command::Gm(a) => {
            let model = parse_dd(&text)?;
            let order = node_order(model.num_nodes(), a.seed);
            match a.solver {
                Solver::Mp => {
                    let o = solve_gm(&model, &order, &options)?;
                    Report {
                        dual: o.dual,
                        primal: o.primal,
                        trace: o.trace,
                    }
                }
                Solver::Subgradient => subgradient_gm(&model, &order, a.max_iters)?,
            }
        }
        Command::Multicut(a) => {
            if a.tighten_interval == 0 {
                return Err(Failure::Usage("--tighten-interval must be positive".into()));
            }
            let instance = parse_multicut(&text)?;
            match common.solver {
                Solver::Mp => {
                    let config = MulticutConfig {
                        stop,
                        tighten_interval: a.tighten_interval,
                        separation_budget: a.separation_budget,
                    };
                    let s = solve_multicut(&instance, &config)?;
                    Report {
                        dual: s.dual,
                        primal: s.primal,
                        trace: s.trace,
                    }
                }
                Solver::Subgradient => subgradient_multicut(&instance, common.max_iters)?,
            }
        }
    };

    let io_err = |e: io::Error| Failure::Solve(format!("write failed: {e}"));
    match &common.log {
        Some(path) => {
            let file =
                fs::File::create(path).map_err(|e| Failure::Solve(format!("cannot create {}: {e}", path.display())))?;
            write_csv(io::BufWriter::new(file), &report.trace).map_err(io_err)?;
        }
        None => write_csv(&mut *out, &report.trace).map_err(io_err)?,
    }
    writeln!(out, "{}", summary_line(report.dual, report.primal)).map_err(io_err)?;
    Ok(())
}

fn node_order(n: usize, seed: Option<u64>) -> Vec<usize> {
    match seed {
        Some(s) => random_order(&mut StdRng::seed_from_u64(s), n),
        None => (0..n).collect(),
    }
}

/// `dual=<D> primal=<P> gap=<P-D>`, each rounded to 9 decimals.
pub fn summary_line(dual: f64, primal: f64) -> String {
    format!(
        "dual={} primal={} gap={}",
        format_value(dual),
        format_value(primal),
        format_value(primal - dual)
    )
}

/// Rounds to 9 decimals and prints the shortest form, so integral values
/// print without a fractional part.
pub fn format_value(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}

fn subgradient_trace(bounds: &[f64], start: Instant, primal: Option<f64>) -> Vec<ConvergenceRecord> {
    let elapsed = start.elapsed().as_millis() as u64;
    let mut trace: Vec<ConvergenceRecord> = bounds
        .iter()
        .enumerate()
        .map(|(it, &d)| ConvergenceRecord {
            iteration: it,
            elapsed_ms: elapsed,
            dual_bound: d,
            best_primal: None,
            event: Event::Iterate,
        })
        .collect();
    trace.push(ConvergenceRecord {
        iteration: bounds.len().saturating_sub(1),
        elapsed_ms: elapsed,
        dual_bound: *bounds.last().expect("initial bound present"),
        best_primal: primal,
        event: Event::Round,
    });
    trace
}

fn subgradient_mrf(model: &PairwiseModel, order: &[usize], steps: usize) -> Result<Report, Failure> {
    let start = Instant::now();
    let crf = build_crf_factor_graph(model)?;
    let res = subgradient_solve(&crf.fg, steps, SUBGRADIENT_STEP)?;
    let state = Reparametrization::from_duals(&crf.fg, res.duals);
    let primal = model.energy(&round_crf(model, &state, order)?);
    Ok(Report {
        dual: res.best_bound,
        primal,
        trace: subgradient_trace(&res.trace, start, Some(primal)),
    })
}

fn subgradient_gm(model: &MatchingModel, order: &[usize], steps: usize) -> Result<Report, Failure> {
    let start = Instant::now();
    let gm = build_gm_factor_graph(model)?;
    let res = subgradient_solve(&gm.fg, steps, SUBGRADIENT_STEP)?;
    let state = Reparametrization::from_duals(&gm.fg, res.duals);
    let primal = model.cost(&round_gm(model, &state, order)?);
    Ok(Report {
        dual: res.best_bound,
        primal: primal.unwrap_or(f64::INFINITY),
        trace: subgradient_trace(&res.trace, start, primal),
    })
}

/// Subgradient on the relaxation with every triangle of the input graph.
fn subgradient_multicut(instance: &MulticutInstance, steps: usize) -> Result<Report, Failure> {
    let start = Instant::now();
    let mfg = build_multicut_factor_graph(instance, &enumerate_triangles(instance))?;
    let res = subgradient_solve(&mfg.fg, steps, SUBGRADIENT_STEP)?;
    let state = Reparametrization::from_duals(&mfg.fg, res.duals);
    let costs = received_edge_costs(&mfg, &state)?;
    let primal = multicut_cost(instance, &round_multicut_kl(instance, &costs));
    Ok(Report {
        dual: res.best_bound,
        primal,
        trace: subgradient_trace(&res.trace, start, Some(primal)),
    })
}
