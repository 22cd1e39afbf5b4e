//! Reachability-tree search over hybrid states: the action-sequence
//! sampler (tree search over abstract states plus symbolic completion),
//! the subgoal sampling layer and the motion layer.

mod problem;
mod sampler;
mod search;
mod solution;
mod trees;


pub use problem::{GoalSpec, HybridState, Problem};
pub use sampler::{
    approachable_grasps, contact_pose, fold_modes, make_goal_candidate, sample_attachment, sample_batch_attachments,
    sample_transition, GoalCandidate, TransitionSample, ATTACHMENT_DRAWS, GOAL_Q_TRIES, TRANSITION_SEEDS,
};
pub use search::{
    extract_solution, randomized_tree_search, solve, update_tree, Outcome, SearchStats, Solver, SsOutcome,
};
pub use solution::{Solution, SolutionStep, StepAttachment};
pub use trees::{AbstractTree, ArtId, ArtNode, ReachabilityTree, RtEdge, RtId, RtNode};

use serde::{Deserialize, Serialize};

use crate::geometry::{GeomError, IkConfig};
use crate::motion::MpConfig;
use crate::symbolic::{PlannerConfig, SearchMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    #[default]
    Full,
    /// Statistics are counted but rewards never stored.
    NoReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RejectionMode {
    #[default]
    Full,
    /// Goal candidates are built but never checked for collision.
    NoRejection,
}

/// Reward pushed when every step of the plan was realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CompletionReward {
    /// 1.0 whether or not the goal connection succeeds.
    #[default]
    One,
    /// 1.0 on goal connection, `|π| / (|π| + 1)` when it fails.
    LengthRatio,
}

/// Planner variants compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    NoReward,
    NoRejection,
    NoRewardNoRejection,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoReward, Variant::NoRejection, Variant::NoRewardNoRejection];

    pub fn modes(self) -> (RewardMode, RejectionMode) {
        match self {
            Variant::Full => (RewardMode::Full, RejectionMode::Full),
            Variant::NoReward => (RewardMode::NoReward, RejectionMode::Full),
            Variant::NoRejection => (RewardMode::Full, RejectionMode::NoRejection),
            Variant::NoRewardNoRejection => (RewardMode::NoReward, RejectionMode::NoRejection),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoReward => "no-reward",
            Variant::NoRejection => "no-rejection",
            Variant::NoRewardNoRejection => "no-reward-no-rejection",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub k_ss: usize,
    pub k_goal: usize,
    pub epsilon: f64,
    pub terminate_prob: f64,
    pub reward_mode: RewardMode,
    pub rejection_mode: RejectionMode,
    pub completion_reward: CompletionReward,
    pub seed: u64,
    /// Wall-clock budget in seconds.
    pub timeout: f64,
    /// Deterministic budget on task-planning-layer iterations.
    pub max_iterations: usize,
    /// Attempts at drawing a plan per iteration before giving up on it.
    pub resample_limit: usize,
    #[serde(skip)]
    pub mp: MpConfig,
    #[serde(skip)]
    pub ik: IkConfig,
    #[serde(skip)]
    pub planner: PlannerConfig,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            k_ss: 2,
            k_goal: 10,
            epsilon: 0.5,
            terminate_prob: 0.2,
            reward_mode: RewardMode::Full,
            rejection_mode: RejectionMode::Full,
            completion_reward: CompletionReward::One,
            seed: 0,
            timeout: 60.0,
            max_iterations: 400,
            resample_limit: 50,
            mp: MpConfig::default(),
            ik: IkConfig::default(),
            planner: PlannerConfig {
                mode: SearchMode::Greedy,
                ..Default::default()
            },
        }
    }
}

impl SearchParams {
    pub fn for_variant(variant: Variant, seed: u64) -> Self {
        let (reward_mode, rejection_mode) = variant.modes();
        SearchParams {
            reward_mode,
            rejection_mode,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), TampError> {
        let p = |v: f64| (0.0..=1.0).contains(&v);
        if self.k_ss == 0 || self.k_goal == 0 || !p(self.epsilon) || !p(self.terminate_prob) || !(self.timeout > 0.0) {
            return Err(TampError::InvalidParams(format!("{self:?}")));
        }
        self.mp.validate().map_err(|e| TampError::InvalidParams(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TampError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("binding error: {0}")]
    Binding(String),
    #[error("abstract and geometric modes disagree: {symbolic:?} vs {geometric:?}")]
    Inconsistent {
        symbolic: Vec<String>,
        geometric: Vec<String>,
    },
    #[error("initial configuration is in collision")]
    InitialCollision,
    #[error("transition must change exactly one attachment, got {0}")]
    TransitionArity(usize),
    #[error("transition of `{0}` is neither a pick nor a place")]
    UnsupportedTransition(String),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
}
