use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Attachment, Config, Mode};
use crate::motion::{plan_motion, Trajectory};
use crate::symbolic::{task_plan, AbstractState, ActionId, ActionKind, GroundTask, PlanError};

use super::sampler::{make_goal_candidate, sample_batch_attachments, sample_transition};
use super::{
    AbstractTree, ArtId, CompletionReward, HybridState, Problem, ReachabilityTree, RejectionMode, RewardMode, RtEdge,
    RtId, SearchParams, Solution, TampError,
};

/// Tolerance for treating two modes as the same.
const MODE_TOL: f64 = 1e-9;
/// Relative tolerance under which child values count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub iterations: u64,
    pub tp_calls: u64,
    pub tp_cache_hits: u64,
    pub tp_seconds: f64,
    /// Motion-layer invocations: batch-extension steps of geometric
    /// actions plus goal connections.
    pub mp_calls: u64,
    /// RRT-Connect runs actually started (after a transition was found).
    pub rrt_calls: u64,
    pub transition_failures: u64,
    pub collision_checks: u64,
    pub candidates_drawn: u64,
    pub candidates_rejected: u64,
    pub batch_sampler_failures: u64,
    pub goal_connect_failures: u64,
    pub plan_failures: u64,
    pub dead_nodes: u64,
    pub reward_updates: u64,
    pub art_size: u64,
    pub rt_size: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Solution),
    Timeout,
    IterationLimit,
    Infeasible,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SsOutcome {
    pub rewards: Vec<f64>,
    pub solved: bool,
}

fn values_tied(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOL * a.abs().max(b.abs())
}

fn cached_applicable(art: &mut AbstractTree, task: &GroundTask, id: ArtId) -> Vec<ActionId> {
    let node = art.node_mut(id);
    if node.applicable.is_none() {
        node.applicable = Some(task.applicable_actions(&node.state).collect());
    }
    node.applicable.clone().unwrap()
}

/// Walks down the abstract tree from the root: stop at a leaf or with the
/// node's termination probability; otherwise with probability `epsilon`
/// take a uniformly random applicable action (creating its child if
/// needed), else the best existing child (unvisited first, ties uniform).
/// Dead nodes are never entered.
pub fn randomized_tree_search<R: Rng + ?Sized>(
    art: &mut AbstractTree,
    task: &GroundTask,
    epsilon: f64,
    rng: &mut R,
) -> (ArtId, Vec<ActionId>) {
    let mut cur = art.root();
    let mut actions = Vec::new();
    loop {
        let node = art.node(cur);
        if node.is_leaf() || rng.gen_bool(node.terminate_prob) {
            break;
        }
        let step = if rng.gen_bool(epsilon) {
            let options: Vec<ActionId> = cached_applicable(art, task, cur)
                .into_iter()
                .filter(|&a| art.node(cur).child(a).is_none_or(|c| !art.node(c).dead))
                .collect();
            options.choose(rng).map(|&a| {
                let state = art.node(cur).state.clone();
                let c = art.child_or_insert(cur, a, || task.apply(&state, a).expect("applicable action"));
                (a, c)
            })
        } else {
            let live: Vec<(ActionId, ArtId)> =
                node.children.iter().copied().filter(|&(_, c)| !art.node(c).dead).collect();
            let best = live.iter().map(|&(_, c)| art.node(c).value()).fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<(ActionId, ArtId)> =
                live.into_iter().filter(|&(_, c)| values_tied(art.node(c).value(), best)).collect();
            tied.choose(rng).copied()
        };
        let Some((a, c)) = step else { break };
        actions.push(a);
        cur = c;
    }
    (cur, actions)
}

/// Backs the mean reward up every node of `nodes`.
pub fn update_tree(art: &mut AbstractTree, nodes: &[ArtId], reward: f64, mode: RewardMode) {
    for &n in nodes {
        let node = art.node_mut(n);
        node.n_visit += 1;
        if mode == RewardMode::Full {
            node.r_total += reward;
        }
    }
}

/// Root-to-solution steps of the reachability tree.
pub fn extract_solution(problem: &Problem, rt: &ReachabilityTree) -> Option<Solution> {
    let goal = rt.solution?;
    let path = rt.path_to(goal);
    let edges = path.iter().skip(1).map(|&id| &rt.node(id).parent.as_ref().unwrap().1);
    Some(Solution::from_edges(problem, edges))
}

/// One search run: both trees, the rng and the counters.
pub struct Solver<'p> {
    pub problem: &'p Problem,
    pub params: SearchParams,
    pub rt: ReachabilityTree,
    pub art: AbstractTree,
    pub stats: SearchStats,
    rng: ChaCha8Rng,
    plans: HashMap<AbstractState, Result<Vec<ActionId>, PlanError>>,
    started: Instant,
}

impl<'p> Solver<'p> {
    pub fn new(problem: &'p Problem, params: &SearchParams) -> Result<Self, TampError> {
        params.validate()?;
        let rt = ReachabilityTree::new(problem.init.clone());
        let art = AbstractTree::new(problem.init.s.clone(), rt.root(), params.terminate_prob);
        Ok(Solver {
            problem,
            params: params.clone(),
            rt,
            art,
            stats: SearchStats::default(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            plans: HashMap::new(),
            started: Instant::now(),
        })
    }

    fn timed_out(&self) -> bool {
        self.started.elapsed().as_secs_f64() > self.params.timeout
    }

    /// Symbolic plan from `s` to the goal atoms. Plans are a deterministic
    /// function of the state, so they are cached.
    pub fn plan_from(&mut self, s: &AbstractState) -> Result<Vec<ActionId>, PlanError> {
        if let Some(r) = self.plans.get(s) {
            self.stats.tp_cache_hits += 1;
            return r.clone();
        }
        let t = Instant::now();
        let r = task_plan(&self.problem.task, s, &self.problem.goal.atoms, &self.params.planner);
        self.stats.tp_seconds += t.elapsed().as_secs_f64();
        self.stats.tp_calls += 1;
        self.plans.insert(s.clone(), r.clone());
        r
    }

    /// Adds the path `actions` below `from`, returning its nodes (from
    /// inclusive).
    pub fn extend_art(&mut self, from: ArtId, actions: &[ActionId]) -> Vec<ArtId> {
        let task = &self.problem.task;
        let mut out = vec![from];
        let mut cur = from;
        for &a in actions {
            let state = self.art.node(cur).state.clone();
            cur = self.art.child_or_insert(cur, a, || task.apply(&state, a).expect("plan replays"));
            out.push(cur);
        }
        out
    }

    /// Random prefix from the tree search completed by the symbolic
    /// planner; the completion is grafted onto the tree. Returns the plan
    /// and the abstract node sequence along it.
    pub fn sample_action_seq(&mut self) -> Option<(Vec<ActionId>, Vec<ArtId>)> {
        for _ in 0..self.params.resample_limit {
            let (last, mut plan) = randomized_tree_search(&mut self.art, &self.problem.task, self.params.epsilon, &mut self.rng);
            let state = self.art.node(last).state.clone();
            match self.plan_from(&state) {
                Ok(rest) => {
                    self.extend_art(last, &rest);
                    plan.extend(rest);
                    let nodes = self.art.follow(self.art.root(), &plan).expect("path exists");
                    return Some((plan, nodes));
                }
                Err(PlanError::Unreachable) => {
                    if !self.art.node(last).dead {
                        self.art.node_mut(last).dead = true;
                        self.stats.dead_nodes += 1;
                    }
                    if last == self.art.root() {
                        return None;
                    }
                }
                Err(PlanError::BudgetExhausted(_)) => self.stats.plan_failures += 1,
            }
        }
        None
    }

    fn add_rt_node(&mut self, state: HybridState, parent: RtId, edge: RtEdge, art_node: ArtId) -> Result<RtId, TampError> {
        self.problem.check_consistent(&state.s, &state.sigma)?;
        debug_assert_eq!(state.s, self.art.node(art_node).state);
        let id = self.rt.add(state, parent, edge);
        self.art.node_mut(art_node).v_s.push(id);
        Ok(id)
    }

    /// Transition configuration plus a path to it in the current mode.
    fn mode_switch(&mut self, x: &HybridState, next: &Mode) -> Result<Option<Trajectory>, TampError> {
        let ts = sample_transition(self.problem, &x.sigma, next, &self.params.ik, &mut self.rng)?;
        self.stats.collision_checks += ts.collision_checks;
        let Some(q) = ts.q else {
            self.stats.transition_failures += 1;
            return Ok(None);
        };
        self.motion(&x.sigma, &x.q, &q)
    }

    fn motion(&mut self, sigma: &Mode, from: &Config, to: &Config) -> Result<Option<Trajectory>, TampError> {
        let geom = self.problem.geometry(sigma)?;
        self.stats.rrt_calls += 1;
        let r = plan_motion(&geom, from, to, &self.params.mp, &mut self.rng);
        self.stats.collision_checks += geom.checks();
        Ok(r.ok())
    }

    /// Draws attachment batches until one yields a goal candidate. In
    /// no-rejection mode the first batch is used without a check.
    fn goal_candidate(&mut self, plan: &[ActionId], s_goal: &AbstractState) -> Result<Option<(Vec<Option<Attachment>>, HybridState)>, TampError> {
        for _ in 0..self.params.k_goal {
            self.stats.candidates_drawn += 1;
            let Some(batch) = sample_batch_attachments(self.problem, plan, &mut self.rng) else {
                self.stats.batch_sampler_failures += 1;
                self.stats.candidates_rejected += 1;
                continue;
            };
            let c = make_goal_candidate(self.problem, &batch, s_goal, &mut self.rng)?;
            self.stats.collision_checks += c.collision_checks;
            if c.feasible || self.params.rejection_mode == RejectionMode::NoRejection {
                return Ok(Some((batch, c.state)));
            }
            self.stats.candidates_rejected += 1;
        }
        Ok(None)
    }

    /// The subgoal sampling layer for one plan; returns the rewards it
    /// produced.
    pub fn ss_layer(&mut self, plan: &[ActionId], nodes: &[ArtId]) -> Result<SsOutcome, TampError> {
        assert_eq!(nodes.len(), plan.len() + 1);
        let s_goal = self.art.node(*nodes.last().unwrap()).state.clone();
        let Some((alphas, x_goal)) = self.goal_candidate(plan, &s_goal)? else {
            return Ok(SsOutcome::default());
        };
        let n = plan.len();
        let mut rewards = Vec::new();
        let mut last = if n == 0 { self.art.node(nodes[0]).v_s.choose(&mut self.rng).copied() } else { None };
        for i in 0..n {
            if self.timed_out() {
                last = None;
                break;
            }
            let Some(&x_id) = self.art.node(nodes[i]).v_s.choose(&mut self.rng) else {
                last = None;
                break;
            };
            let x = self.rt.node(x_id).state.clone();
            let a = plan[i];
            let s_next = self.art.node(nodes[i + 1]).state.clone();
            if self.problem.task.action(a).kind == ActionKind::NonGeometric {
                let next = HybridState {
                    s: s_next,
                    sigma: x.sigma,
                    q: x.q,
                };
                last = Some(self.add_rt_node(next, x_id, RtEdge::Symbolic(a), nodes[i + 1])?);
                continue;
            }
            let alpha = alphas[i].expect("geometric action carries an attachment");
            let sigma_next = x.sigma.with_attachment(alpha).expect("movable of the scene");
            self.stats.mp_calls += 1;
            match self.mode_switch(&x, &sigma_next)? {
                Some(trajectory) => {
                    let next = HybridState {
                        s: s_next,
                        sigma: sigma_next,
                        q: trajectory.end(),
                    };
                    let edge = RtEdge::ModeSwitch {
                        action: a,
                        attachment: alpha,
                        trajectory,
                    };
                    last = Some(self.add_rt_node(next, x_id, edge, nodes[i + 1])?);
                }
                None => {
                    rewards.push(i as f64 / n as f64);
                    last = None;
                }
            }
        }
        let mut solved = false;
        if let Some(xp_id) = last {
            self.stats.mp_calls += 1;
            let xp = self.rt.node(xp_id).state.clone();
            solved = self.connect_goal(xp_id, &xp, &x_goal)?;
            if !solved {
                self.stats.goal_connect_failures += 1;
            }
            rewards.push(match (solved, self.params.completion_reward) {
                (true, _) | (false, CompletionReward::One) => 1.0,
                (false, CompletionReward::LengthRatio) => n as f64 / (n as f64 + 1.0),
            });
        }
        Ok(SsOutcome { rewards, solved })
    }

    /// Motion from the last extended state to the goal candidate's
    /// configuration. When the extension reached a different mode than
    /// the candidate's, the connection is made in the reached mode as long
    /// as it still satisfies every goal attachment.
    fn connect_goal(&mut self, xp_id: RtId, xp: &HybridState, x_goal: &HybridState) -> Result<bool, TampError> {
        if !self.problem.goal_attachments_hold(&xp.sigma, MODE_TOL) {
            return Ok(false);
        }
        let same_mode = xp
            .sigma
            .attachments()
            .iter()
            .zip(x_goal.sigma.attachments())
            .all(|(a, b)| a.approx_eq(b, MODE_TOL));
        let q_goal = if same_mode || self.problem.goal.q.is_some() {
            x_goal.q
        } else {
            let geom = self.problem.geometry(&xp.sigma)?;
            let (q, free) = super::sampler::goal_configuration(self.problem, &geom, &mut self.rng);
            self.stats.collision_checks += geom.checks();
            if !free {
                return Ok(false);
            }
            q
        };
        let Some(trajectory) = self.motion(&xp.sigma, &xp.q, &q_goal)? else {
            return Ok(false);
        };
        let goal = HybridState {
            s: xp.s.clone(),
            sigma: xp.sigma.clone(),
            q: q_goal,
        };
        self.problem.check_consistent(&goal.s, &goal.sigma)?;
        let id = self.rt.add(goal, xp_id, RtEdge::Motion(trajectory));
        self.rt.solution = Some(id);
        Ok(true)
    }

    fn finish(&mut self, outcome: Outcome) -> (Outcome, SearchStats) {
        self.stats.art_size = self.art.len() as u64;
        self.stats.rt_size = self.rt.len() as u64;
        self.stats.wall_seconds = self.started.elapsed().as_secs_f64();
        (outcome, self.stats.clone())
    }

    pub fn run(mut self) -> Result<(Outcome, SearchStats), TampError> {
        if self.problem.goal_reached(&self.problem.init, MODE_TOL) {
            self.rt.solution = Some(self.rt.root());
            let sol = extract_solution(self.problem, &self.rt).unwrap();
            return Ok(self.finish(Outcome::Solved(sol)));
        }
        let root_state = self.problem.init.s.clone();
        if let Err(PlanError::Unreachable) = self.plan_from(&root_state) {
            return Ok(self.finish(Outcome::Infeasible));
        }
        for _ in 0..self.params.max_iterations {
            if self.timed_out() {
                return Ok(self.finish(Outcome::Timeout));
            }
            self.stats.iterations += 1;
            let Some((plan, nodes)) = self.sample_action_seq() else {
                if self.art.node(self.art.root()).dead {
                    return Ok(self.finish(Outcome::Infeasible));
                }
                continue;
            };
            let mut rewards = Vec::new();
            for _ in 0..self.params.k_ss {
                let out = self.ss_layer(&plan, &nodes)?;
                rewards.extend(out.rewards);
                if out.solved {
                    let sol = extract_solution(self.problem, &self.rt).unwrap();
                    return Ok(self.finish(Outcome::Solved(sol)));
                }
            }
            if !rewards.is_empty() {
                let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
                update_tree(&mut self.art, &nodes, mean, self.params.reward_mode);
                self.stats.reward_updates += 1;
            }
        }
        if self.timed_out() {
            return Ok(self.finish(Outcome::Timeout));
        }
        Ok(self.finish(Outcome::IterationLimit))
    }
}

/// Runs the planner on `problem` until a solution, the iteration budget
/// or the wall-clock budget.
pub fn solve(problem: &Problem, params: &SearchParams) -> Result<(Outcome, SearchStats), TampError> {
    Solver::new(problem, params)?.run()
}
