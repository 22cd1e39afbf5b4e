//! Satisficing STRIPS search: greedy best-first with the additive
//! heuristic, plus a breadth-first mode that returns shortest plans.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use super::ground::{AbstractState, ActionId, FactId, GroundTask};

pub const DEFAULT_NODE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Greedy best-first on h_add, ties by insertion order.
    #[default]
    Greedy,
    /// Exact breadth-first; plans are shortest.
    BreadthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub mode: SearchMode,
    pub node_budget: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            mode: SearchMode::Greedy,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("goal is unreachable from the given state")]
    Unreachable,
    #[error("node budget of {0} expansions exhausted")]
    BudgetExhausted(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlanStats {
    pub expanded: usize,
    pub generated: usize,
}

const INF: u32 = u32::MAX;

/// Additive relaxation cost of `goal` from `s`; `None` if some goal fact
/// is relaxed-unreachable (which proves it unreachable).
pub fn h_add(task: &GroundTask, s: &AbstractState, goal: &[FactId]) -> Option<u32> {
    let mut cost = vec![INF; task.num_facts()];
    for &f in s.facts() {
        cost[f.0 as usize] = 0;
    }
    let actions = task.actions();
    loop {
        let mut changed = false;
        for a in actions {
            let mut c: u32 = 1;
            let mut ok = true;
            for p in &a.pre_pos {
                let pc = cost[p.0 as usize];
                if pc == INF {
                    ok = false;
                    break;
                }
                c = c.saturating_add(pc);
            }
            if !ok {
                continue;
            }
            for f in &a.add {
                let slot = &mut cost[f.0 as usize];
                if c < *slot {
                    *slot = c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut h: u32 = 0;
    for g in goal {
        let c = cost[g.0 as usize];
        if c == INF {
            return None;
        }
        h = h.saturating_add(c);
    }
    Some(h)
}

fn reconstruct(parents: &[(usize, Option<ActionId>)], mut idx: usize) -> Vec<ActionId> {
    let mut plan = Vec::new();
    while let (p, Some(a)) = parents[idx] {
        plan.push(a);
        idx = p;
    }
    plan.reverse();
    plan
}

/// Finds an action sequence from `s0` to a state containing all of `goal`.
pub fn task_plan(
    task: &GroundTask,
    s0: &AbstractState,
    goal: &[FactId],
    cfg: &PlannerConfig,
) -> Result<Vec<ActionId>, PlanError> {
    task_plan_with_stats(task, s0, goal, cfg).0
}

pub fn task_plan_with_stats(
    task: &GroundTask,
    s0: &AbstractState,
    goal: &[FactId],
    cfg: &PlannerConfig,
) -> (Result<Vec<ActionId>, PlanError>, PlanStats) {
    let mut stats = PlanStats::default();
    if s0.is_superset_of(goal) {
        return (Ok(Vec::new()), stats);
    }
    let Some(h0) = h_add(task, s0, goal) else {
        return (Err(PlanError::Unreachable), stats);
    };
    let result = match cfg.mode {
        SearchMode::Greedy => greedy(task, s0, goal, h0, cfg.node_budget, &mut stats),
        SearchMode::BreadthFirst => breadth_first(task, s0, goal, cfg.node_budget, &mut stats),
    };
    (result, stats)
}

fn greedy(
    task: &GroundTask,
    s0: &AbstractState,
    goal: &[FactId],
    h0: u32,
    budget: usize,
    stats: &mut PlanStats,
) -> Result<Vec<ActionId>, PlanError> {
    let mut states: Vec<AbstractState> = vec![s0.clone()];
    let mut parents: Vec<(usize, Option<ActionId>)> = vec![(0, None)];
    let mut seen: HashMap<AbstractState, usize> = HashMap::new();
    seen.insert(s0.clone(), 0);
    let mut open = BinaryHeap::new();
    open.push(Reverse((h0, 0usize)));
    while let Some(Reverse((_, idx))) = open.pop() {
        if stats.expanded >= budget {
            return Err(PlanError::BudgetExhausted(budget));
        }
        stats.expanded += 1;
        let s = states[idx].clone();
        for a in task.applicable_actions(&s) {
            let next = task.apply_unchecked(&s, a);
            if seen.contains_key(&next) {
                continue;
            }
            stats.generated += 1;
            let nidx = states.len();
            seen.insert(next.clone(), nidx);
            parents.push((idx, Some(a)));
            if next.is_superset_of(goal) {
                return Ok(reconstruct(&parents, nidx));
            }
            // Relaxed dead ends can never reach the goal.
            if let Some(h) = h_add(task, &next, goal) {
                open.push(Reverse((h, nidx)));
            }
            states.push(next);
        }
    }
    Err(PlanError::Unreachable)
}

fn breadth_first(
    task: &GroundTask,
    s0: &AbstractState,
    goal: &[FactId],
    budget: usize,
    stats: &mut PlanStats,
) -> Result<Vec<ActionId>, PlanError> {
    let mut states: Vec<AbstractState> = vec![s0.clone()];
    let mut parents: Vec<(usize, Option<ActionId>)> = vec![(0, None)];
    let mut seen: HashMap<AbstractState, usize> = HashMap::new();
    seen.insert(s0.clone(), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        if stats.expanded >= budget {
            return Err(PlanError::BudgetExhausted(budget));
        }
        stats.expanded += 1;
        let s = states[idx].clone();
        for a in task.applicable_actions(&s) {
            let next = task.apply_unchecked(&s, a);
            if seen.contains_key(&next) {
                continue;
            }
            stats.generated += 1;
            let nidx = states.len();
            seen.insert(next.clone(), nidx);
            parents.push((idx, Some(a)));
            if next.is_superset_of(goal) {
                return Ok(reconstruct(&parents, nidx));
            }
            states.push(next);
            queue.push_back(nidx);
        }
    }
    Err(PlanError::Unreachable)
}

/// Replays `plan` from `s0`, returning the final state if every step is
/// applicable.
pub fn replay(task: &GroundTask, s0: &AbstractState, plan: &[ActionId]) -> Option<AbstractState> {
    let mut s = s0.clone();
    for &a in plan {
        s = task.apply(&s, a).ok()?;
    }
    Some(s)
}
