//! Command-line front end.
//!
//! Three subcommands: `run` executes one solve and writes a per-iteration
//! CSV, `sweep` repeats sampled solves over a list of sampling accuracies,
//! and `estimate` prints the hardware cost table for a problem scale.
//!
//! Exit codes: 0 success (for `run`: converged), 2 budget exhausted or
//! diverged, 1 runtime error, 64 usage error, 74 output I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{BeamProblem, DiffusionProblem, NonlinearProblem};
use crate::resource::{alpha_from_c, query_counts, tail_params, time_estimates, CostInputs};
use crate::solver::{newton_solve_with, qnm_solve_with, RunTrace, SolveOptions};
use crate::tomography::{ChannelMode, SignMode, TomographyConfig};

#[derive(Parser)]
#[command(
    name = "qnm",
    version,
    about = "Sampled inexact-Newton solver for sparse nonlinear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write one CSV row per iteration
    Run(RunArgs),
    /// Repeat sampled solves across sampling accuracies and seeds
    Sweep(SweepArgs),
    /// Print query and wall-time estimates for one correction step
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    /// Nonlinear advection-diffusion marching problem
    Diffusion,
    /// Clamped nonlinear beam with a time history
    Beam,
}

impl ProblemKind {
    fn label(self) -> &'static str {
        match self {
            ProblemKind::Diffusion => "diffusion",
            ProblemKind::Beam => "beam",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Correction direction passes through the sampling channel
    Qnm,
    /// Exact correction direction
    Newton,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Multinomial,
    Clip,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Exact,
    TwoPass,
}

#[derive(Args)]
struct ProblemArgs {
    /// Test problem to solve
    #[arg(long, value_enum)]
    problem: ProblemKind,
    /// Spatial grid size
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(4..))]
    n1: u64,
    /// Temporal grid size
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(4..))]
    n2: u64,
    /// Evaluate the diffusion source at the local grid point; `false`
    /// reproduces a published variant with the argument frozen at the
    /// domain edge
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    typo_fix: bool,
}

impl ProblemArgs {
    fn build(&self) -> Result<Box<dyn NonlinearProblem>> {
        Ok(match self.problem {
            ProblemKind::Diffusion => Box::new(DiffusionProblem::new(
                self.n1 as usize,
                self.n2 as usize,
                self.typo_fix,
            )?),
            ProblemKind::Beam => Box::new(BeamProblem::new(self.n1 as usize, self.n2 as usize)?),
        })
    }
}

#[derive(Args)]
struct SamplingArgs {
    /// Per-entry accuracy of the sampled direction
    #[arg(long, default_value_t = 0.005)]
    eps_s: f64,
    /// Oversampling constant in the shot-count formula
    #[arg(long, default_value_t = 36.0)]
    shot_constant: f64,
    /// What the channel does to sampled amplitudes
    #[arg(long, value_enum, default_value_t = ChannelArg::Multinomial)]
    channel: ChannelArg,
    /// How signs are attached to sampled magnitudes
    #[arg(long, value_enum, default_value_t = SignArg::Exact)]
    sign_mode: SignArg,
}

impl SamplingArgs {
    fn config(&self, eps_s: f64, seed: u64) -> Result<TomographyConfig> {
        let channel = match self.channel {
            ChannelArg::Multinomial => ChannelMode::Multinomial,
            ChannelArg::Clip => ChannelMode::Clip,
            ChannelArg::Identity => ChannelMode::Identity,
        };
        let sign = match self.sign_mode {
            SignArg::Exact => SignMode::ExactSign,
            SignArg::TwoPass => SignMode::TwoPass,
        };
        Ok(TomographyConfig::new(eps_s)?
            .with_shot_constant(self.shot_constant)?
            .with_sign_mode(sign)
            .with_channel(channel)
            .with_seed(seed))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Convergence cutoff on the residual norm
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Iteration budget
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Exact or sampled correction direction
    #[arg(long, value_enum, default_value_t = ModeArg::Qnm)]
    mode: ModeArg,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Seed of the sampling channel
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate the Jacobian condition number each iteration
    /// (appends a kappa column)
    #[arg(long)]
    track_kappa: bool,
    /// CSV destination; standard output when omitted (the summary line
    /// then moves to standard error)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Convergence cutoff on the residual norm
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Iteration budget per run
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Exact or sampled correction direction
    #[arg(long, value_enum, default_value_t = ModeArg::Qnm)]
    mode: ModeArg,
    /// Comma-separated sampling accuracies
    #[arg(long, value_delimiter = ',', required = true)]
    eps_s_list: Vec<f64>,
    /// Runs per accuracy
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Base seed; each cell derives its own
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 picks the machine default)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    sampling_rest: SweepSamplingArgs,
    /// CSV destination; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Sampling flags for `sweep`, which takes its accuracies from
/// `--eps-s-list` instead of a single `--eps-s`.
#[derive(Args)]
struct SweepSamplingArgs {
    /// Oversampling constant in the shot-count formula
    #[arg(long, default_value_t = 36.0)]
    shot_constant: f64,
    /// What the channel does to sampled amplitudes
    #[arg(long, value_enum, default_value_t = ChannelArg::Multinomial)]
    channel: ChannelArg,
    /// How signs are attached to sampled magnitudes
    #[arg(long, value_enum, default_value_t = SignArg::Exact)]
    sign_mode: SignArg,
}

#[derive(Args)]
struct EstimateArgs {
    /// System dimension
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Row sparsity bound
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    d: u64,
    /// Condition number of the scaled Jacobian
    #[arg(long)]
    kappa: f64,
    /// Accuracy target of the linear solve
    #[arg(long)]
    eps: f64,
    /// Per-entry sampling accuracy
    #[arg(long)]
    eps_s: f64,
}

/// Parses arguments and executes; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Estimate(args) => cmd_estimate(&args),
    };
    match outcome {
        Ok(code) => code,
        // a closed stdout (e.g. piping into `head`) is not a failure
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => 74,
                _ => 1,
            }
        }
    }
}

fn solve_options(eps: f64, max_iter: usize, track_kappa: bool) -> Result<SolveOptions> {
    let mut opts = SolveOptions::new(eps, max_iter)?;
    opts.track_kappa = track_kappa;
    Ok(opts)
}

fn write_run_csv(w: &mut dyn Write, trace: &RunTrace, kappa_column: bool) -> io::Result<()> {
    if kappa_column {
        writeln!(w, "iter,residual_norm,c_delta_x,n_x,n_f,wall_ms,kappa")?;
    } else {
        writeln!(w, "iter,residual_norm,c_delta_x,n_x,n_f,wall_ms")?;
    }
    for r in &trace.records {
        write!(
            w,
            "{},{:e},{:e},{},{},{:e}",
            r.iter,
            r.residual_norm,
            r.c_delta_x,
            r.n_x,
            r.n_f,
            r.wall_seconds * 1e3
        )?;
        if kappa_column {
            write!(w, ",{:e}", r.kappa.unwrap_or(f64::NAN))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let problem = args.problem.build()?;
    let opts = solve_options(args.eps, args.max_iter, args.track_kappa)?;
    let trace = match args.mode {
        ModeArg::Newton => newton_solve_with(problem.as_ref(), &problem.initial_guess(), &opts)?,
        ModeArg::Qnm => {
            let cfg = args.sampling.config(args.sampling.eps_s, args.seed)?;
            let mut rng = cfg.make_rng();
            qnm_solve_with(problem.as_ref(), &problem.initial_guess(), &opts, &cfg, &mut rng)?
        }
    };
    let summary = format!(
        "converged={} diverged={} iters={} final_residual={:e}",
        trace.converged,
        trace.diverged,
        trace.records.len(),
        trace.final_residual
    );
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_run_csv(&mut w, &trace, args.track_kappa)?;
            w.flush()?;
            println!("{summary}");
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_run_csv(&mut w, &trace, args.track_kappa)?;
            w.flush()?;
            eprintln!("{summary}");
        }
    }
    Ok(if trace.converged { 0 } else { 2 })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    if args.eps_s_list.is_empty() {
        return Err(Error::InvalidInput("the accuracy list is empty".into()));
    }
    if args.repeats == 0 {
        return Err(Error::InvalidInput("repeats must be at least 1".into()));
    }
    let problem = args.problem.build()?;
    let opts = solve_options(args.eps, args.max_iter, false)?;
    let sampling = SamplingArgs {
        eps_s: args.eps_s_list[0],
        shot_constant: args.sampling_rest.shot_constant,
        channel: args.sampling_rest.channel,
        sign_mode: args.sampling_rest.sign_mode,
    };

    struct Cell {
        eps_s: f64,
        rep: usize,
        seed: u64,
    }
    let cells: Vec<Cell> = args
        .eps_s_list
        .iter()
        .enumerate()
        .flat_map(|(idx, &eps_s)| {
            (0..args.repeats).map(move |rep| Cell {
                eps_s,
                rep,
                seed: args.seed ^ splitmix64(((idx as u64) << 32) | rep as u64),
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
    let label = args.problem.problem.label();
    let x0 = problem.initial_guess();
    let rows: Result<Vec<String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let trace = match args.mode {
                    ModeArg::Newton => newton_solve_with(problem.as_ref(), &x0, &opts)?,
                    ModeArg::Qnm => {
                        let cfg = sampling.config(cell.eps_s, cell.seed)?;
                        let mut rng = cfg.make_rng();
                        qnm_solve_with(problem.as_ref(), &x0, &opts, &cfg, &mut rng)?
                    }
                };
                Ok(format!(
                    "{},{:e},{},{},{},{},{:e}",
                    label,
                    cell.eps_s,
                    cell.rep,
                    cell.seed,
                    trace.converged,
                    trace.records.len(),
                    trace.final_residual
                ))
            })
            .collect()
    });
    let rows = rows?;

    let mut body = String::from("problem,eps_s,rep,seed,converged,iters,final_residual\n");
    for row in &rows {
        body.push_str(row);
        body.push('\n');
    }
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(body.as_bytes())?;
            w.flush()?;
        }
        None => {
            io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(0)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<i32> {
    let inputs = CostInputs {
        n: args.n as usize,
        d: args.d as usize,
        kappa: args.kappa,
        eps: args.eps,
        eps_s: args.eps_s,
    };
    let tail = tail_params(args.kappa, args.eps)?;
    let alpha = alpha_from_c(tail.c, tail.j0, inputs.d)?;
    let queries = query_counts(&inputs)?;
    let times = time_estimates(&inputs)?;
    let rows: [(&str, f64); 9] = [
        ("c", tail.c as f64),
        ("j0", tail.j0 as f64),
        ("alpha", alpha),
        ("matrix_queries", queries.matrix),
        ("norm_queries", queries.residual_norm),
        ("prep_queries", queries.state_prep),
        ("t_quantum", times.quantum),
        ("t_classical", times.classical),
        ("crossover", times.crossover),
    ];
    let stdout = io::stdout();
    let mut w = stdout.lock();
    for (name, value) in rows {
        writeln!(w, "{name:<16}{value:.6e}")?;
    }
    Ok(0)
}
