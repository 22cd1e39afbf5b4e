use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rtamp::bench::{cdf, compare, read_records, run_suite, write_cdf_csv, GroupKey, SuiteConfig};
use rtamp::domains::{load_bundle, validate_solution, write_bundle, BenchmarkInstance, DomainKind};
use rtamp::tamp::{solve, Outcome, SearchParams, Solution, Variant};

/// Reachability-tree task and motion planner with its benchmark harness.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trial suite, appending to a results file.
    Run(RunArgs),
    /// Success-time CDFs from a results file, as CSV.
    Cdf {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated keys among domain, m, instance, variant.
        #[arg(long, value_delimiter = ',', default_value = "domain,variant")]
        group: Vec<GroupKey>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// JSON summary per instance and variant.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write a benchmark instance as a problem bundle directory.
    Gen {
        #[arg(long)]
        domain: DomainKind,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a solution file against a bundle; exits nonzero if invalid.
    Validate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Solve one instance and write the solution as JSON.
    Solve(SolveArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    domain: Option<Vec<DomainKind>>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    variant: Option<Vec<Variant>>,
    #[arg(long)]
    trials: Option<u64>,
    /// Per-trial budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// First planner seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instance_seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(self) -> Result<SuiteConfig> {
        let mut c = match &self.config {
            Some(p) => SuiteConfig::load(p)?,
            None => SuiteConfig::default(),
        };
        if let Some(v) = self.domain {
            c.domains = v;
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.variant {
            c.variants = v;
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.timeout {
            c.timeout = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.instance_seed {
            c.instance_seed = v;
        }
        if self.max_iterations.is_some() {
            c.max_iterations = self.max_iterations;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem bundle directory; otherwise the instance is generated.
    #[arg(long, conflicts_with_all = ["domain", "m"])]
    bundle: Option<PathBuf>,
    #[arg(long, requires = "m")]
    domain: Option<DomainKind>,
    #[arg(long, requires = "domain")]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    #[arg(long, default_value = "full")]
    variant: Variant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Solution file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn instance(bundle: Option<PathBuf>, domain: Option<DomainKind>, m: Option<usize>, seed: u64) -> Result<BenchmarkInstance> {
    match (bundle, domain, m) {
        (Some(dir), _, _) => load_bundle(&dir).with_context(|| format!("loading {}", dir.display())),
        (None, Some(d), Some(m)) => Ok(d.build(m, seed)?),
        _ => bail!("either --bundle or --domain with --m is required"),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config()?;
            let added = run_suite(&config)?;
            let solved = added.iter().filter(|r| r.solved()).count();
            log::info!("{} new records ({solved} solved) in {}", added.len(), config.out.display());
            if added.iter().any(|r| r.valid == Some(false)) {
                log::error!("some solutions failed validation");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Cdf { input, group, out } => {
            let records = read_records(&input)?;
            let mut buf = Vec::new();
            write_cdf_csv(&mut buf, &group, &cdf(&records, &group))?;
            emit(out.as_ref(), &String::from_utf8(buf)?)?;
        }
        Command::Compare { input } => {
            let summary = compare(&read_records(&input)?);
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Gen { domain, m, seed, out } => {
            let inst = domain.build(m, seed)?;
            write_bundle(&inst, &out)?;
            log::info!("wrote {} to {}", inst.id(), out.display());
        }
        Command::Validate { bundle, solution } => {
            let inst = load_bundle(&bundle)?;
            let text = fs::read_to_string(&solution).with_context(|| format!("reading {}", solution.display()))?;
            let sol: Solution = serde_json::from_str(&text)?;
            match validate_solution(&inst.problem, &sol, &SearchParams::default().mp) {
                Ok(()) => println!("valid"),
                Err(v) => {
                    println!("invalid: {v}");
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::Solve(args) => {
            let inst = instance(args.bundle, args.domain, args.m, args.instance_seed)?;
            let mut params = SearchParams::for_variant(args.variant, args.seed);
            params.timeout = args.timeout;
            let (outcome, stats) = solve(&inst.problem, &params)?;
            log::info!("{}: {stats:?}", inst.id());
            match outcome {
                Outcome::Solved(sol) => emit(args.out.as_ref(), &serde_json::to_string_pretty(&sol)?)?,
                other => {
                    eprintln!("no solution: {other:?}");
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RTAMP_LOG", "info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
