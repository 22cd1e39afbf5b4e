//! Benchmark scene generators, problem bundles and the solution validator.

mod blocktower;
mod bundle;
mod kitchen;
mod nonmonotonic;
mod validate;


pub use blocktower::{build_blocktower, BLOCKTOWER_DOMAIN};
pub use bundle::{load_bundle, write_bundle, GoalFile, InitFile, InstanceMeta};
pub use kitchen::{build_kitchen, KITCHEN_DOMAIN, KITCHEN_MARGIN};
pub use nonmonotonic::{build_nonmonotonic, direct_plan_successes, NONMONOTONIC_DOMAIN};
pub use validate::{validate_solution, Violation, ViolationKind, CONTINUITY_TOL, GOAL_TOL};

use serde::{Deserialize, Serialize};

use crate::geometry::{Attachment, BodyId, Config, Mode, Parent, Pose2, Scene};
use crate::symbolic::{load_task, task_plan, ParseError, PlannerConfig};
use crate::tamp::{GoalSpec, Problem, TampError};

/// Robot configuration every benchmark starts from: the arm straight up.
pub const INIT_Q: Config = [std::f64::consts::FRAC_PI_2, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Kitchen,
    #[serde(alias = "nonmon")]
    Nonmonotonic,
    Blocktower,
}

impl DomainKind {
    pub const ALL: [DomainKind; 3] = [DomainKind::Kitchen, DomainKind::Nonmonotonic, DomainKind::Blocktower];

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Kitchen => "kitchen",
            DomainKind::Nonmonotonic => "nonmonotonic",
            DomainKind::Blocktower => "blocktower",
        }
    }

    pub fn max_m(self) -> usize {
        match self {
            DomainKind::Kitchen => 6,
            DomainKind::Nonmonotonic => 2,
            DomainKind::Blocktower => 6,
        }
    }

    pub fn build(self, m: usize, seed: u64) -> Result<BenchmarkInstance, DomainError> {
        match self {
            DomainKind::Kitchen => build_kitchen(m, seed),
            DomainKind::Nonmonotonic => build_nonmonotonic(m, seed),
            DomainKind::Blocktower => build_blocktower(m, seed),
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kitchen" => Ok(DomainKind::Kitchen),
            "nonmonotonic" | "nonmon" => Ok(DomainKind::Nonmonotonic),
            "blocktower" => Ok(DomainKind::Blocktower),
            _ => Err(format!("unknown domain `{s}`")),
        }
    }
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("{domain} supports 1..={max} movables, got {m}")]
    MOutOfRange { domain: DomainKind, m: usize, max: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Tamp(#[from] TampError),
    #[error("generated instance failed a self-check: {0}")]
    SelfCheck(String),
    #[error("bundle: {0}")]
    Bundle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A generated problem together with the texts it was built from.
#[derive(Debug, Clone)]
pub struct BenchmarkInstance {
    pub kind: DomainKind,
    pub m: usize,
    pub seed: u64,
    pub domain_text: String,
    pub problem_text: String,
    pub problem: Problem,
}

impl BenchmarkInstance {
    /// Short identifier such as `kitchen-3`.
    pub fn id(&self) -> String {
        format!("{}-{}", self.kind, self.m)
    }

    pub fn scene(&self) -> &Scene {
        &self.problem.scene
    }
}

fn check_m(kind: DomainKind, m: usize) -> Result<(), DomainError> {
    if m == 0 || m > kind.max_m() {
        return Err(DomainError::MOutOfRange {
            domain: kind,
            m,
            max: kind.max_m(),
        });
    }
    Ok(())
}

/// Placement of `child` in slot `k` of `parent`.
fn slot(scene: &Scene, child: &str, parent: &str, k: usize) -> Attachment {
    let c = scene.body_id(child).expect("generated body");
    let p = scene.body_id(parent).expect("generated body");
    Attachment {
        movable: c,
        parent: Parent::Body(p),
        transform: scene.placement_slots(c, p)[k],
    }
}

/// Surface slab of width `w` whose top edge is the body's frame origin,
/// with a region along it.
fn surface(name: &str, w: f64) -> crate::geometry::Body {
    crate::geometry::Body::new(name, crate::geometry::Shape::rect_from(-w / 2.0, -0.05, w / 2.0, 0.0), false).with_top_region()
}

/// Parses, assembles and checks abstract solvability.
fn assemble(
    kind: DomainKind,
    m: usize,
    seed: u64,
    domain_text: &str,
    problem_text: String,
    scene: Scene,
    init: Vec<Attachment>,
    goal_attachments: Vec<Attachment>,
) -> Result<BenchmarkInstance, DomainError> {
    let task = load_task(domain_text, &problem_text)?;
    let mode = Mode::new(&scene, init).map_err(TampError::from)?;
    let goal = GoalSpec {
        atoms: task.goal.clone(),
        attachments: goal_attachments,
        q: None,
    };
    let problem = Problem::new(task, scene, mode, INIT_Q, goal)?;
    task_plan(&problem.task, &problem.init.s, &problem.goal.atoms, &PlannerConfig::default())
        .map_err(|e| DomainError::SelfCheck(format!("goal abstractly unreachable: {e}")))?;
    Ok(BenchmarkInstance {
        kind,
        m,
        seed,
        domain_text: domain_text.to_string(),
        problem_text,
        problem,
    })
}

fn translation(x: f64, y: f64) -> Pose2 {
    Pose2::translation(x, y)
}

fn body_id(scene: &Scene, name: &str) -> BodyId {
    scene.body_id(name).expect("generated body")
}
