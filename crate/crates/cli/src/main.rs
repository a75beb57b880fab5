//! Command-line front end: condition checking, pair synthesis, transitivity
//! verdicts, cascade simulation, and one-command reproduction of the
//! built-in demonstration scenarios.
//!
//! Machine-readable JSON goes to stdout, human-readable summaries to stderr.
//! Exit codes: 0 success/commutative, 1 checked-and-failed, 2 usage or load
//! error.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ltv_commute::commute::{
    check_pair, check_transitivity, derivative_ratio, required_initial_state,
    state_feasibility_gap, synthesize_pair, PairConstants,
};
use ltv_commute::sim::{
    compare, simulate_chain, write_comparison_csv, write_csv, ComparisonMetrics, Integrator,
    SimulationConfig, Trajectory,
};
use ltv_commute::system::LTVSystem;
use ltv_commute::{parse, Error, Result, TimeGrid, DEFAULT_TOL};

mod scenario;
use scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "ltv-commute",
    about = "Commutativity algebra and cascade simulation for second-order linear time-varying systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridArgs {
    /// Start of the checking grid (defaults to the first system's t0)
    #[arg(long)]
    t0: Option<f64>,
    /// End of the checking grid (defaults to t0 + 10)
    #[arg(long)]
    tf: Option<f64>,
    /// Number of grid points
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    /// Tolerance for constancy and residual checks
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

impl GridArgs {
    fn build(&self, t0: f64) -> Result<TimeGrid> {
        let start = self.t0.unwrap_or(t0);
        let end = self.tf.unwrap_or(start + 10.0);
        TimeGrid::new(start, end, self.grid)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check whether two systems form a commutative pair
    Check {
        /// First system file
        #[arg(long)]
        a: PathBuf,
        /// Second system file
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Synthesize the commutative pair of a system from a constant triple
    Synthesize {
        /// Base system file
        #[arg(long)]
        a: PathBuf,
        /// Pair constants as `c2,c1,c0`
        #[arg(long, value_parser = parse_triple)]
        k: (f64, f64, f64),
        /// Also derive the commuting initial state for this output value
        #[arg(long)]
        y0: Option<f64>,
        /// Output system file
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check the three pairs of a chain and the composition of constants
    Transitivity {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        c: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Simulate a cascade chain and export CSV
    Simulate {
        /// System files, cascaded left to right (leftmost takes the input)
        #[arg(long, value_delimiter = ',', required = true)]
        chain: Vec<PathBuf>,
        /// Input signal expression
        #[arg(long, default_value = "40*sin(10*pi*t)")]
        input: String,
        /// Fixed integration step
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        /// Start time (defaults to the first system's t0)
        #[arg(long)]
        t0: Option<f64>,
        /// Final time (defaults to t0 + 10)
        #[arg(long)]
        tf: Option<f64>,
        /// Simulate the reversed chain instead
        #[arg(long)]
        reverse: bool,
        /// Simulate both orders and write a comparison CSV
        #[arg(long)]
        compare: bool,
        /// Output CSV file
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reproduce a built-in demonstration scenario (2, 3 or 4)
    Paper {
        /// Scenario number
        #[arg(long)]
        figure: u8,
        /// Output directory for the CSVs and summary.json
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_triple(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected `c2,c1,c0`, got `{s}`"));
    }
    let mut values = [0.0; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("`{part}` is not a number"))?;
    }
    Ok((values[0], values[1], values[2]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 1 for outcomes of a well-posed computation that failed its check, 2 for
/// input, validation and usage problems.
fn classify(err: &Error) -> u8 {
    match err {
        Error::NotEligible { .. }
        | Error::NoCommutingState { .. }
        | Error::DegenerateComposition { .. }
        | Error::Unstable { .. } => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Check { a, b, grid } => cmd_check(&a, &b, &grid),
        Command::Synthesize {
            a,
            k,
            y0,
            output,
            grid,
        } => cmd_synthesize(&a, k, y0, &output, &grid),
        Command::Transitivity { a, b, c, grid } => cmd_transitivity(&a, &b, &c, &grid),
        Command::Simulate {
            chain,
            input,
            step,
            t0,
            tf,
            reverse,
            compare,
            output,
        } => cmd_simulate(&chain, &input, step, t0, tf, reverse, compare, &output),
        Command::Paper { figure, output } => cmd_paper(figure, &output),
    }
}

fn cmd_check(a: &PathBuf, b: &PathBuf, grid_args: &GridArgs) -> Result<u8> {
    let a = LTVSystem::load(a)?;
    let b = LTVSystem::load(b)?;
    let grid = grid_args.build(a.t0)?;
    let report = check_pair(&a, &b, &grid, grid_args.tol)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    match &report.failed_condition {
        None => {
            eprintln!("verdict: {:?}", report.verdict);
            Ok(0)
        }
        Some(reason) => {
            eprintln!("verdict: {:?} ({reason})", report.verdict);
            Ok(1)
        }
    }
}

fn cmd_synthesize(
    a: &PathBuf,
    (c2, c1, c0): (f64, f64, f64),
    y0: Option<f64>,
    output: &PathBuf,
    grid_args: &GridArgs,
) -> Result<u8> {
    let a = LTVSystem::load(a)?;
    let k = PairConstants::new(c2, c1, c0)?;
    let grid = grid_args.build(a.t0)?;
    let mut b = synthesize_pair(&a, &k, &grid, grid_args.tol)?;
    if let Some(y0) = y0 {
        b.ic = Some(required_initial_state(&a, &k, y0, &grid, grid_args.tol)?);
    }
    b.save(output)?;
    println!("{}", b.to_json());
    eprintln!("wrote {}", output.display());
    Ok(0)
}

fn cmd_transitivity(a: &PathBuf, b: &PathBuf, c: &PathBuf, grid_args: &GridArgs) -> Result<u8> {
    let a = LTVSystem::load(a)?;
    let b = LTVSystem::load(b)?;
    let c = LTVSystem::load(c)?;
    let grid = grid_args.build(a.t0)?;
    let report = check_transitivity(&a, &b, &c, &grid, grid_args.tol)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.transitive {
        eprintln!(
            "transitive: all three pairs commutative, constants compose (gap {:e})",
            report.composition_gap.unwrap_or(0.0)
        );
        Ok(0)
    } else {
        for (label, pair) in [("A-B", &report.ab), ("B-C", &report.bc), ("A-C", &report.ac)] {
            match &pair.failed_condition {
                Some(reason) => eprintln!("{label}: {:?} ({reason})", pair.verdict),
                None => eprintln!("{label}: {:?}", pair.verdict),
            }
        }
        Ok(1)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    chain_paths: &[PathBuf],
    input: &str,
    step: f64,
    t0: Option<f64>,
    tf: Option<f64>,
    reverse: bool,
    run_compare: bool,
    output: &PathBuf,
) -> Result<u8> {
    let mut chain = Vec::with_capacity(chain_paths.len());
    for path in chain_paths {
        chain.push(LTVSystem::load(path)?);
    }
    if chain.is_empty() {
        return Err(Error::Config("chain must contain at least one system".into()));
    }
    let t0 = t0.unwrap_or(chain[0].t0);
    let tf = tf.unwrap_or(t0 + 10.0);
    let cfg = SimulationConfig::new(t0, tf, step, Integrator::Bs3, parse(input)?)?;

    let reversed: Vec<LTVSystem> = chain.iter().rev().cloned().collect();
    if run_compare {
        let forward = simulate_chain(&chain, &cfg)?;
        let backward = simulate_chain(&reversed, &cfg)?;
        let mut w = BufWriter::new(File::create(output)?);
        write_comparison_csv(&forward, &backward, &mut w)?;
        let metrics = compare(&forward, &backward, &[])?;
        println!("{}", serde_json::to_string_pretty(&metrics)?);
        eprintln!(
            "wrote {} (max order difference {:e})",
            output.display(),
            metrics.max_abs_diff
        );
    } else {
        let traj = simulate_chain(if reverse { &reversed } else { &chain }, &cfg)?;
        let mut w = BufWriter::new(File::create(output)?);
        write_csv(&traj, &mut w)?;
        eprintln!("wrote {} ({} samples)", output.display(), traj.times.len());
    }
    Ok(0)
}

fn run_pair(
    first: &LTVSystem,
    second: &LTVSystem,
    cfg: &SimulationConfig,
    windows: &[(f64, f64)],
) -> Result<(Trajectory, Trajectory, ComparisonMetrics)> {
    let fwd = simulate_chain(&[first.clone(), second.clone()], cfg)?;
    let rev = simulate_chain(&[second.clone(), first.clone()], cfg)?;
    let metrics = compare(&fwd, &rev, windows)?;
    Ok((fwd, rev, metrics))
}

fn cmd_paper(figure: u8, output: &PathBuf) -> Result<u8> {
    let scenario = Scenario::figure(figure)?;
    std::fs::create_dir_all(output)?;
    let grid = TimeGrid::default_span(scenario.a.t0);

    let report = check_transitivity(&scenario.a, &scenario.b, &scenario.c, &grid, DEFAULT_TOL)?;
    let inv_a = scenario.a.commutativity_invariant(&grid, DEFAULT_TOL)?;
    let inv_b = scenario.b.commutativity_invariant(&grid, DEFAULT_TOL)?;
    let inv_c = scenario.c.commutativity_invariant(&grid, DEFAULT_TOL)?;

    // feasibility and derivative-ratio checks for the composed constants,
    // applicable when the scenario carries initial states
    let composed_checks = match (&report.composed, &scenario.c.ic) {
        (Some(p), Some(state)) => {
            let rho = derivative_ratio(&scenario.a, p)?;
            Some((
                state_feasibility_gap(p, inv_a.value),
                (state.dy0 - rho * state.y0).abs(),
            ))
        }
        _ => None,
    };

    let mut pair_summaries = serde_json::Map::new();
    for (name, first, second) in [
        ("ab_vs_ba", &scenario.a, &scenario.b),
        ("bc_vs_cb", &scenario.b, &scenario.c),
        ("ca_vs_ac", &scenario.c, &scenario.a),
    ] {
        let (fwd, rev, metrics) = run_pair(first, second, &scenario.config, &scenario.windows)?;
        let csv_name = format!("{name}.csv");
        let mut w = BufWriter::new(File::create(output.join(&csv_name))?);
        write_comparison_csv(&fwd, &rev, &mut w)?;
        pair_summaries.insert(
            name.to_string(),
            serde_json::json!({
                "csv": csv_name,
                "max_abs_diff": metrics.max_abs_diff,
                "rms_diff": metrics.rms_diff,
                "windows": metrics.windows,
            }),
        );
    }

    let summary = serde_json::json!({
        "figure": scenario.figure,
        "input": scenario.config.input.to_string(),
        "t0": scenario.config.t0,
        "tf": scenario.config.tf,
        "step": scenario.config.step,
        "invariants": {
            "a0": inv_a.value,
            "b0": inv_b.value,
            "c0": inv_c.value,
        },
        "constants": {
            "k": scenario.k,
            "m": scenario.m,
            "p": report.composed,
        },
        "transitivity": report,
        "composed_state_feasibility_gap": composed_checks.map(|c| c.0),
        "composed_derivative_ratio_gap": composed_checks.map(|c| c.1),
        "pairs": pair_summaries,
    });
    let summary_text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(output.join("summary.json"), summary_text.clone() + "\n")?;
    println!("{summary_text}");
    eprintln!("wrote scenario {} outputs to {}", figure, output.display());
    Ok(0)
}
