//! Experiment harness: seeded trial suites over domains and planner
//! variants, a line-delimited results file, and the aggregations used to
//! compare variants (success-time CDFs and per-variant summaries).

mod stats;
mod suite;

#[cfg(test)]
mod tests;

pub use stats::{cdf, compare, write_cdf_csv, CdfGroup, GroupKey, Summary, VariantSummary};
pub use suite::{read_records, run_suite, run_trial, SuiteConfig};

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::domains::{DomainError, DomainKind};
use crate::tamp::{Outcome, SearchStats, TampError, Variant};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Record {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Tamp(#[from] TampError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    Solved,
    Timeout,
    /// Iteration budget spent before the wall-clock budget.
    IterationLimit,
    Infeasible,
}

impl TrialOutcome {
    pub fn of(outcome: &Outcome) -> Self {
        match outcome {
            Outcome::Solved(_) => TrialOutcome::Solved,
            Outcome::Timeout => TrialOutcome::Timeout,
            Outcome::IterationLimit => TrialOutcome::IterationLimit,
            Outcome::Infeasible => TrialOutcome::Infeasible,
        }
    }
}

/// Deterministic search counters of one trial.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub iterations: u64,
    pub mp_calls: u64,
    pub rrt_calls: u64,
    pub transition_failures: u64,
    pub collision_checks: u64,
    pub candidates_drawn: u64,
    pub candidates_rejected: u64,
    pub tp_calls: u64,
    pub art_size: u64,
    pub rt_size: u64,
}

impl Counters {
    pub fn of(stats: &SearchStats) -> Self {
        Counters {
            iterations: stats.iterations,
            mp_calls: stats.mp_calls,
            rrt_calls: stats.rrt_calls,
            transition_failures: stats.transition_failures,
            collision_checks: stats.collision_checks,
            candidates_drawn: stats.candidates_drawn,
            candidates_rejected: stats.candidates_rejected,
            tp_calls: stats.tp_calls,
            art_size: stats.art_size,
            rt_size: stats.rt_size,
        }
    }

    /// Name/value pairs in declaration order.
    pub fn fields(&self) -> [(&'static str, u64); 10] {
        [
            ("iterations", self.iterations),
            ("mp_calls", self.mp_calls),
            ("rrt_calls", self.rrt_calls),
            ("transition_failures", self.transition_failures),
            ("collision_checks", self.collision_checks),
            ("candidates_drawn", self.candidates_drawn),
            ("candidates_rejected", self.candidates_rejected),
            ("tp_calls", self.tp_calls),
            ("art_size", self.art_size),
            ("rt_size", self.rt_size),
        ]
    }
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// `<domain>-<m>`.
    pub instance: String,
    pub domain: DomainKind,
    pub m: usize,
    /// Seed the instance was generated from.
    pub instance_seed: u64,
    pub variant: Variant,
    /// Planner seed.
    pub seed: u64,
    pub outcome: TrialOutcome,
    /// Whether the returned solution passed the validator; `None` unless solved.
    pub valid: Option<bool>,
    pub plan_length: Option<usize>,
    pub counters: Counters,
    pub wall_seconds: f64,
    pub tp_seconds: f64,
}

impl TrialRecord {
    pub fn solved(&self) -> bool {
        self.outcome == TrialOutcome::Solved
    }

    /// Identity of the trial within a suite.
    pub fn key(&self) -> TrialKey {
        TrialKey {
            instance: self.instance.clone(),
            instance_seed: self.instance_seed,
            variant: self.variant,
            seed: self.seed,
        }
    }

    /// The record with its timing fields zeroed.
    pub fn untimed(&self) -> TrialRecord {
        TrialRecord {
            wall_seconds: 0.0,
            tp_seconds: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialKey {
    pub instance: String,
    pub instance_seed: u64,
    pub variant: Variant,
    pub seed: u64,
}

/// Mean of each counter over `records`; empty for no records.
pub fn counter_means<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut n = 0usize;
    for r in records {
        n += 1;
        for (name, v) in r.counters.fields() {
            *sums.entry(name.to_string()).or_default() += v as f64;
        }
    }
    sums.values_mut().for_each(|s| *s /= n as f64);
    sums
}
