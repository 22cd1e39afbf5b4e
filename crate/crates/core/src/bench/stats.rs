use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{counter_means, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKey {
    Domain,
    M,
    Instance,
    Variant,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Domain => "domain",
            GroupKey::M => "m",
            GroupKey::Instance => "instance",
            GroupKey::Variant => "variant",
        }
    }

    fn value(self, r: &TrialRecord) -> String {
        match self {
            GroupKey::Domain => r.domain.to_string(),
            GroupKey::M => r.m.to_string(),
            GroupKey::Instance => r.instance.clone(),
            GroupKey::Variant => r.variant.to_string(),
        }
    }
}

impl std::str::FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [GroupKey::Domain, GroupKey::M, GroupKey::Instance, GroupKey::Variant]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown group key `{s}`"))
    }
}

/// Success-time distribution of one group of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfGroup {
    /// Values of the group keys, in key order.
    pub key: Vec<String>,
    pub trials: usize,
    pub successes: usize,
    /// `(t, F(t))` at each distinct solve time: the fraction of all trials
    /// solved within `t` seconds.
    pub steps: Vec<(f64, f64)>,
}

impl CdfGroup {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

fn group<'a>(records: &'a [TrialRecord], keys: &[GroupKey]) -> BTreeMap<Vec<String>, Vec<&'a TrialRecord>> {
    let mut groups: BTreeMap<Vec<String>, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(keys.iter().map(|k| k.value(r)).collect()).or_default().push(r);
    }
    groups
}

/// One CDF per group, groups in key order.
pub fn cdf(records: &[TrialRecord], keys: &[GroupKey]) -> Vec<CdfGroup> {
    group(records, keys)
        .into_iter()
        .map(|(key, rs)| {
            let n = rs.len();
            let mut times: Vec<f64> = rs.iter().filter(|r| r.solved()).map(|r| r.wall_seconds).collect();
            times.sort_by(f64::total_cmp);
            let mut steps: Vec<(f64, f64)> = Vec::new();
            for (i, &t) in times.iter().enumerate() {
                let f = (i + 1) as f64 / n as f64;
                match steps.last_mut() {
                    Some(last) if last.0 == t => last.1 = f,
                    _ => steps.push((t, f)),
                }
            }
            CdfGroup {
                key,
                trials: n,
                successes: times.len(),
                steps,
            }
        })
        .collect()
}

/// Writes the CDFs as CSV: one column per group key, then `time` and
/// `fraction`. Each group starts with a `(0, 0)` row so that groups with
/// no successes still appear.
pub fn write_cdf_csv<W: Write>(out: &mut W, keys: &[GroupKey], groups: &[CdfGroup]) -> Result<(), std::io::Error> {
    let header: Vec<&str> = keys.iter().map(|k| k.name()).chain(["time", "fraction"]).collect();
    writeln!(out, "{}", header.join(","))?;
    for g in groups {
        let prefix = g.key.join(",");
        let sep = if prefix.is_empty() { "" } else { "," };
        writeln!(out, "{prefix}{sep}0,0")?;
        for (t, f) in &g.steps {
            writeln!(out, "{prefix}{sep}{t},{f}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub instance: String,
    pub variant: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Solutions that failed validation.
    pub invalid: usize,
    pub median_solve_seconds: Option<f64>,
    /// Symbolic-planner time over total wall time.
    pub tp_share: Option<f64>,
    pub counter_means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<VariantSummary>,
}

impl Summary {
    pub fn get(&self, instance: &str, variant: &str) -> Option<&VariantSummary> {
        self.groups.iter().find(|g| g.instance == instance && g.variant == variant)
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Per (instance, variant) aggregates. Counter means are over all trials,
/// solved or not.
pub fn compare(records: &[TrialRecord]) -> Summary {
    let groups = group(records, &[GroupKey::Instance, GroupKey::Variant])
        .into_iter()
        .map(|(key, rs)| {
            let solved: Vec<&&TrialRecord> = rs.iter().filter(|r| r.solved()).collect();
            let wall: f64 = rs.iter().map(|r| r.wall_seconds).sum();
            let tp: f64 = rs.iter().map(|r| r.tp_seconds).sum();
            VariantSummary {
                instance: key[0].clone(),
                variant: key[1].clone(),
                trials: rs.len(),
                successes: solved.len(),
                success_rate: solved.len() as f64 / rs.len() as f64,
                invalid: rs.iter().filter(|r| r.valid == Some(false)).count(),
                median_solve_seconds: median(solved.iter().map(|r| r.wall_seconds).collect()),
                tp_share: (wall > 0.0).then(|| tp / wall),
                counter_means: counter_means(rs.iter().copied()),
            }
        })
        .collect();
    Summary { groups }
}
