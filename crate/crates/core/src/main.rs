use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ccwlan::cache::TimeUnit;
use ccwlan::harness::{self, Axis, ExperimentReport, Mode, RunConfig, Timing};
use ccwlan::policy::{enumerate_rate_vectors, maximal_indices, unique_vectors, EnumerationMode};
use ccwlan::rga::{self, RgaConfig};
use ccwlan::rng::{derive_seed, Stream};
use ccwlan::Result;

/// Throughput region, fair scheduling and greedy association for
/// coded-caching delivery in multi-AP wireless LANs.
///
/// Exit codes: 0 success, 1 usage or input error, 2 infeasible problem,
/// 3 exhausted budget or stalled scheduler.
#[derive(Parser)]
#[command(name = "ccwlan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a hex-grid topology with Poisson users as JSON.
    GenTopology(RunArgs),
    /// List every policy with its exact rate vector as CSV.
    Enumerate(RunArgs),
    /// Solve every seed of a configuration.
    Solve(RunArgs),
    /// Sweep users per helper or profile count.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run the greedy association scheduler.
    Rga {
        #[command(flatten)]
        run: RunArgs,
        /// Write the event trace of the first seed as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

/// Configuration file plus overrides. Precedence: defaults < file < flags.
#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Run configuration, or a report.json to re-run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (a file for gen-topology and enumerate).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Solver used by the uncoded mode.
    #[arg(long, value_enum)]
    baseline: Option<Mode>,
    /// Run a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run seeds 0..n.
    #[arg(long, conflicts_with = "seed")]
    seeds: Option<u64>,
    /// Policy-count budget of the analytical mode.
    #[arg(long)]
    budget: Option<u64>,
    /// Exclude users no policy can serve instead of failing.
    #[arg(long)]
    drop_unserved: bool,
    /// Keep the degree vector in ascending order (debugging aid).
    #[arg(long)]
    no_shuffle_degrees: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Mean users per helper.
    #[arg(long = "users-per-helper", short = 'U')]
    users_per_helper: Option<f64>,
    /// Number of cache profiles.
    #[arg(long, short = 'L')]
    profiles: Option<usize>,
    #[arg(long, short = 'M')]
    memory: Option<u64>,
    #[arg(long, short = 'N')]
    library: Option<u64>,
    #[arg(long)]
    rings: Option<usize>,
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(long)]
    v_limit: Option<u64>,
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long, value_enum)]
    time_unit: Option<TimeUnitArg>,
    #[arg(long, value_enum)]
    enumeration: Option<EnumerationArg>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TimeUnitArg {
    Codeword,
    Chunk,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EnumerationArg {
    Full,
    Restricted,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(m) = self.baseline {
            c.baseline = m;
        }
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        if let Some(n) = self.seeds {
            c.seeds = (0..n).collect();
        }
        if let Some(b) = self.budget {
            c.budget = b;
        }
        c.drop_unserved |= self.drop_unserved;
        if self.no_shuffle_degrees {
            c.shuffle_degrees = false;
        }
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(t) = self.tol {
            c.tol = Some(t);
        }
        if let Some(u) = self.users_per_helper {
            c.users_per_helper = u;
        }
        if let Some(l) = self.profiles {
            c.profiles = l;
        }
        if let Some(m) = self.memory {
            c.memory = m;
        }
        if let Some(n) = self.library {
            c.library = n;
        }
        if let Some(r) = self.rings {
            c.topology.rings = r;
        }
        if let Some(f) = &self.fixture {
            c.topology.fixture = Some(f.clone());
        }
        if let Some(v) = self.v_limit {
            c.v_limit = v;
        }
        if let Some(i) = self.max_iterations {
            c.max_iterations = i;
        }
        if let Some(t) = self.time_unit {
            c.time_unit = match t {
                TimeUnitArg::Codeword => TimeUnit::Codeword,
                TimeUnitArg::Chunk => TimeUnit::Chunk,
            };
        }
        if let Some(e) = self.enumeration {
            c.enumeration = match e {
                EnumerationArg::Full => EnumerationMode::Full,
                EnumerationArg::Restricted => EnumerationMode::Restricted,
            };
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit(report: &ExperimentReport, timing: &Timing, out: &Option<PathBuf>) -> Result<()> {
    if let Some(dir) = out {
        report.write(timing, dir)?;
    }
    print!("{}", report.table());
    Ok(())
}

fn write_or_print(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTopology(args) => {
            let c = args.config()?;
            let t = harness::build_topology(&c, c.seeds[0])?;
            write_or_print(&(t.to_json() + "\n"), &args.out)
        }
        Command::Enumerate(args) => {
            let c = args.config()?;
            let inst = harness::build_instance(&c, c.seeds[0])?;
            let policies = enumerate_rate_vectors(
                &inst.topology,
                &inst.params,
                &inst.assignment,
                c.enumeration,
                c.budget,
            )?;
            let (unique, _) = unique_vectors(&policies);
            eprintln!(
                "{} policies, {} distinct rate vectors, {} maximal",
                policies.len(),
                unique.len(),
                maximal_indices(&unique).len()
            );
            write_or_print(
                &harness::rate_table_csv(&policies, inst.topology.user_count()),
                &args.out,
            )
        }
        Command::Solve(args) => {
            let c = args.config()?;
            let (report, timing) = harness::cmd_solve(&c)?;
            emit(&report, &timing, &args.out)
        }
        Command::Sweep { run, axis, values } => {
            let c = run.config()?;
            let (report, timing) = harness::cmd_sweep(&c, axis, &values)?;
            emit(&report, &timing, &run.out)
        }
        Command::Rga { run, trace } => {
            let mut c = run.config()?;
            if c.mode != Mode::Uncoded {
                c.mode = Mode::Rga;
            } else {
                c.baseline = Mode::Rga;
            }
            if let Some(path) = &trace {
                let seed = c.seeds[0];
                let inst = harness::build_instance(&c, seed)?;
                let rc = RgaConfig {
                    v_limit: c.v_limit,
                    seed: derive_seed(seed, Stream::Scheduler),
                    shuffle_degrees: c.shuffle_degrees,
                    max_iterations: c.max_iterations,
                    trace: true,
                };
                let res = rga::run(&inst.topology, &inst.params, &inst.assignment, &rc)?;
                std::fs::write(path, res.trace_jsonl())?;
            }
            let (report, timing) = harness::cmd_solve(&c)?;
            emit(&report, &timing, &run.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
