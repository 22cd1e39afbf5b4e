use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{validate_solution, BenchmarkInstance, DomainKind};
use crate::tamp::{solve, Outcome, SearchParams, Variant};

use super::{BenchError, Counters, TrialKey, TrialOutcome, TrialRecord};

/// A trial suite: every (domain, m, variant) combination is run with
/// planner seeds `seed, seed + 1, ..., seed + trials - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub domains: Vec<DomainKind>,
    pub m: Vec<usize>,
    pub variants: Vec<Variant>,
    pub trials: u64,
    /// Per-trial wall-clock budget in seconds.
    pub timeout: f64,
    pub seed: u64,
    pub instance_seed: u64,
    pub max_iterations: Option<usize>,
    /// Worker threads; all cores when unset.
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            domains: vec![DomainKind::Kitchen],
            m: vec![3],
            variants: vec![Variant::Full],
            trials: 30,
            timeout: 60.0,
            seed: 0,
            instance_seed: 0,
            max_iterations: None,
            threads: None,
            out: PathBuf::from("results.jsonl"),
        }
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn params(&self, variant: Variant, seed: u64) -> SearchParams {
        let mut p = SearchParams::for_variant(variant, seed);
        p.timeout = self.timeout;
        if let Some(n) = self.max_iterations {
            p.max_iterations = n;
        }
        p
    }

    fn check(&self) -> Result<(), BenchError> {
        if !(self.timeout > 0.0) {
            return Err(BenchError::Config(format!("timeout must be positive, got {}", self.timeout)));
        }
        if self.threads == Some(0) {
            return Err(BenchError::Config("threads must be positive".into()));
        }
        Ok(())
    }
}

/// Runs one seeded trial and validates its solution.
pub fn run_trial(inst: &BenchmarkInstance, params: &SearchParams, variant: Variant) -> Result<TrialRecord, BenchError> {
    let (outcome, stats) = solve(&inst.problem, params)?;
    let (valid, plan_length) = match &outcome {
        Outcome::Solved(sol) => {
            let ok = validate_solution(&inst.problem, sol, &params.mp);
            if let Err(v) = &ok {
                log::error!("{} {variant} seed {}: invalid solution: {v}", inst.id(), params.seed);
            }
            (Some(ok.is_ok()), Some(sol.actions().len()))
        }
        _ => (None, None),
    };
    Ok(TrialRecord {
        instance: inst.id(),
        domain: inst.kind,
        m: inst.m,
        instance_seed: inst.seed,
        variant,
        seed: params.seed,
        outcome: TrialOutcome::of(&outcome),
        valid,
        plan_length,
        counters: Counters::of(&stats),
        wall_seconds: stats.wall_seconds,
        tp_seconds: stats.tp_seconds,
    })
}

/// Reads a results file. A missing file reads as empty; a torn final line
/// left by an interrupted writer is ignored.
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>, BenchError> {
    Ok(read_complete(path)?.0)
}

/// Records plus the byte length of the complete lines they came from.
fn read_complete(path: &Path) -> Result<(Vec<TrialRecord>, u64), BenchError> {
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(io(e)),
    };
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut complete = 0u64;
    let mut line = String::new();
    for n in 1.. {
        line.clear();
        let read = reader.read_line(&mut line).map_err(io)?;
        if read == 0 || !line.ends_with('\n') {
            break;
        }
        complete += read as u64;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|source| BenchError::Record {
            path: path.to_path_buf(),
            line: n,
            source,
        })?;
        records.push(r);
    }
    Ok((records, complete))
}

struct Job<'a> {
    inst: &'a BenchmarkInstance,
    variant: Variant,
    seed: u64,
}

/// Runs every trial of the suite not already recorded in `config.out`,
/// appending one line per trial. Trials run in parallel but are written in
/// suite order, one whole line per write, so an interrupted run resumes
/// to the same file as an uninterrupted one. Returns the records added.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<TrialRecord>, BenchError> {
    config.check()?;
    let path = &config.out;
    let io = |source| BenchError::Io {
        path: path.clone(),
        source,
    };
    let (existing, complete) = read_complete(path)?;
    let done: BTreeSet<TrialKey> = existing.iter().map(TrialRecord::key).collect();

    let mut instances = Vec::new();
    for &kind in &config.domains {
        for &m in &config.m {
            instances.push(kind.build(m, config.instance_seed)?);
        }
    }
    let mut jobs = Vec::new();
    for inst in &instances {
        for &variant in &config.variants {
            for seed in config.seed..config.seed + config.trials {
                let key = TrialKey {
                    instance: inst.id(),
                    instance_seed: inst.seed,
                    variant,
                    seed,
                };
                if !done.contains(&key) {
                    jobs.push(Job { inst, variant, seed });
                }
            }
        }
    }
    log::info!("{} trials to run, {} already recorded", jobs.len(), done.len());
    if jobs.is_empty() {
        return Ok(Vec::new());
    }

    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    // Drop a torn line so the next append starts on a fresh one.
    if file.metadata().map_err(io)?.len() > complete {
        file.set_len(complete).map_err(io)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let chunk = pool.current_num_threads().max(1);
    let mut added = Vec::with_capacity(jobs.len());
    for batch in jobs.chunks(chunk) {
        let results: Vec<Result<TrialRecord, BenchError>> = pool.install(|| {
            batch
                .par_iter()
                .map(|j| run_trial(j.inst, &config.params(j.variant, j.seed), j.variant))
                .collect()
        });
        for r in results {
            let r = r?;
            let mut line = serde_json::to_string(&r)?;
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(io)?;
            file.flush().map_err(io)?;
            log::info!("{} {} seed {}: {:?} in {:.2}s", r.instance, r.variant, r.seed, r.outcome, r.wall_seconds);
            added.push(r);
        }
    }
    file.sync_all().map_err(io)?;
    Ok(added)
}
