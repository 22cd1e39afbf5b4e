use rand::seq::SliceRandom;
use rand::Rng;

use crate::geometry::{world_pose, Attachment, BodyId, Config, IkConfig, Mode, ModeGeometry, Parent, Pose2};
use crate::symbolic::{ActionId, ActionKind};

use super::{HybridState, Problem, TampError};

/// Draws per sampled attachment before the whole batch is abandoned.
pub const ATTACHMENT_DRAWS: usize = 50;
/// Random IK seeds per transition.
pub const TRANSITION_SEEDS: usize = 20;
/// Random configurations tried for a goal configuration.
pub const GOAL_Q_TRIES: usize = 20;

/// Ports whose approach direction points more steeply upward than this
/// (gripper below the object) are never drawn.
const MAX_UPWARD_APPROACH: f64 = 0.7;

/// Grasp transforms of `m` usable from above or the side.
pub fn approachable_grasps(problem: &Problem, m: BodyId) -> Vec<Pose2> {
    let body = problem.scene.body(m);
    body.grasp_ports
        .iter()
        .filter(|p| p.theta.sin() <= MAX_UPWARD_APPROACH)
        .map(Pose2::inverse)
        .collect()
}

/// True if the last link, holding the object at `obj` through `grasp`,
/// clears every fixture.
fn grasp_clear_of_fixtures(problem: &Problem, obj: &Pose2, grasp: &Pose2) -> bool {
    let scene = &problem.scene;
    let arm = &scene.arm;
    let ee = obj.compose(&grasp.inverse());
    let last = crate::geometry::DOF - 1;
    let frame = ee.compose(&Pose2::translation(-arm.link_lengths[last], 0.0));
    let link = arm.link_shape(last).at(&frame);
    scene
        .bodies()
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.movable)
        .all(|(i, b)| !link.intersects(&b.shape.at(&scene.static_pose(BodyId(i)).unwrap())))
}

/// Samples one attachment realizing the geometric action `a` from mode
/// `sigma`. Grasps and placements are screened against the fixtures only;
/// whether other movables are in the way is left to the motion layer.
pub fn sample_attachment<R: Rng + ?Sized>(problem: &Problem, a: ActionId, sigma: &Mode, rng: &mut R) -> Option<Attachment> {
    let (m, to) = problem.action_change(a)?;
    match to {
        Parent::Robot => {
            let obj = world_pose(sigma, &problem.scene, &problem.init.q, m).ok()?;
            let grasps: Vec<Pose2> = approachable_grasps(problem, m)
                .into_iter()
                .filter(|g| grasp_clear_of_fixtures(problem, &obj, g))
                .collect();
            grasps.choose(rng).map(|&transform| Attachment {
                movable: m,
                parent: Parent::Robot,
                transform,
            })
        }
        Parent::Body(p) => {
            let slots = problem.scene.placement_slots(m, p);
            if slots.is_empty() {
                return None;
            }
            let fixed = problem.scene.static_pose(p);
            for _ in 0..ATTACHMENT_DRAWS {
                let t = *slots.choose(rng).unwrap();
                if let Some(pp) = fixed {
                    let pose = pp.compose(&t);
                    let shape = problem.scene.body(m).shape.at(&pose);
                    let blocked = problem.scene.bodies().iter().enumerate().any(|(i, b)| {
                        i != p.0 && !b.movable && shape.intersects(&b.shape.at(&problem.scene.static_pose(BodyId(i)).unwrap()))
                    });
                    if blocked {
                        continue;
                    }
                }
                return Some(Attachment {
                    movable: m,
                    parent: Parent::Body(p),
                    transform: t,
                });
            }
            None
        }
    }
}

/// Attachment batch for `plan`. A reverse scan assigns each movable's goal
/// attachment to the last action changing it; the remaining attachments
/// are then sampled forward, each in the mode its action starts from.
/// `None` if a sampler runs dry.
pub fn sample_batch_attachments<R: Rng + ?Sized>(
    problem: &Problem,
    plan: &[ActionId],
    rng: &mut R,
) -> Option<Vec<Option<Attachment>>> {
    let mut fixed: Vec<Option<Attachment>> = vec![None; plan.len()];
    let mut undecided: Vec<BodyId> = problem.scene.movables().to_vec();
    for (i, &a) in plan.iter().enumerate().rev() {
        if problem.task.action(a).kind != ActionKind::Geometric {
            continue;
        }
        let (m, to) = problem.action_change(a)?;
        if undecided.contains(&m) {
            fixed[i] = problem.goal.attachments.iter().find(|g| g.movable == m && g.parent == to).copied();
            undecided.retain(|&b| b != m);
        }
    }
    let mut sigma = problem.init.sigma.clone();
    let mut out = Vec::with_capacity(plan.len());
    for (i, &a) in plan.iter().enumerate() {
        if problem.task.action(a).kind != ActionKind::Geometric {
            out.push(None);
            continue;
        }
        let alpha = match fixed[i] {
            Some(g) => g,
            None => sample_attachment(problem, a, &sigma, rng)?,
        };
        sigma = sigma.with_attachment(alpha)?;
        out.push(Some(alpha));
    }
    Some(out)
}

/// Mode after every non-null attachment of `alphas` is applied to `sigma`.
pub fn fold_modes(sigma: &Mode, alphas: &[Option<Attachment>]) -> Mode {
    alphas
        .iter()
        .flatten()
        .fold(sigma.clone(), |m, a| m.with_attachment(*a).expect("attachment of a scene movable"))
}

/// Robot configuration for a goal state: the goal's own, or a random
/// collision-free one. The second component reports whether the returned
/// configuration was checked free.
pub fn goal_configuration<R: Rng + ?Sized>(problem: &Problem, geom: &ModeGeometry, rng: &mut R) -> (Config, bool) {
    if let Some(q) = problem.goal.q {
        return (q, geom.check(&q));
    }
    let mut q = problem.init.q;
    for _ in 0..GOAL_Q_TRIES {
        q = problem.scene.arm.random_config(rng);
        if geom.check(&q) {
            return (q, true);
        }
    }
    (q, false)
}

pub struct GoalCandidate {
    pub state: HybridState,
    /// Candidate passed the collision test.
    pub feasible: bool,
    pub collision_checks: u64,
}

/// Builds `x_G` from the batch. `s_goal` is the abstract state reached by
/// the plan.
pub fn make_goal_candidate<R: Rng + ?Sized>(
    problem: &Problem,
    alphas: &[Option<Attachment>],
    s_goal: &crate::symbolic::AbstractState,
    rng: &mut R,
) -> Result<GoalCandidate, TampError> {
    let sigma = fold_modes(&problem.init.sigma, alphas);
    let geom = problem.geometry(&sigma)?;
    let (q, free) = if geom.static_clear() {
        goal_configuration(problem, &geom, rng)
    } else {
        (problem.goal.q.unwrap_or_else(|| problem.scene.arm.random_config(rng)), false)
    };
    let checks = geom.checks();
    Ok(GoalCandidate {
        state: HybridState {
            s: s_goal.clone(),
            sigma,
            q,
        },
        feasible: free,
        collision_checks: checks,
    })
}

/// End-effector pose at which the one attachment that differs between
/// `sigma` and `next` can be switched.
pub fn contact_pose(problem: &Problem, sigma: &Mode, next: &Mode) -> Result<Pose2, TampError> {
    let diff = sigma.diff(next);
    let [m] = diff[..] else {
        return Err(TampError::TransitionArity(diff.len()));
    };
    let before = sigma.get(m).unwrap();
    let after = next.get(m).unwrap();
    // The placed side fixes the object pose; the grasp side fixes the
    // end effector relative to it.
    let (placed_mode, grasp) = match (before.is_grasp(), after.is_grasp()) {
        (false, true) => (sigma, after.transform),
        (true, false) => (next, before.transform),
        _ => return Err(TampError::UnsupportedTransition(problem.scene.body(m).id.clone())),
    };
    let obj = world_pose(placed_mode, &problem.scene, &problem.init.q, m)?;
    Ok(obj.compose(&grasp.inverse()))
}

pub struct TransitionSample {
    pub q: Option<Config>,
    pub collision_checks: u64,
}

/// A configuration in the intersection of both modes' free spaces, by IK
/// to the contact pose from random seeds.
pub fn sample_transition<R: Rng + ?Sized>(
    problem: &Problem,
    sigma: &Mode,
    next: &Mode,
    ik: &IkConfig,
    rng: &mut R,
) -> Result<TransitionSample, TampError> {
    let target = contact_pose(problem, sigma, next)?;
    let arm = &problem.scene.arm;
    let g0 = problem.geometry(sigma)?;
    let g1 = problem.geometry(next)?;
    let reach = (target.x - arm.base.x).hypot(target.y - arm.base.y);
    let mut found = None;
    if g0.static_clear() && g1.static_clear() && reach <= arm.reach() + ik.position_tolerance {
        for _ in 0..TRANSITION_SEEDS {
            let seed = arm.random_config(rng);
            if let Some(q) = arm.ik_from_seed(&target, &seed, ik) {
                if g0.check(&q) && g1.check(&q) {
                    found = Some(q);
                    break;
                }
            }
        }
    }
    Ok(TransitionSample {
        q: found,
        collision_checks: g0.checks() + g1.checks(),
    })
}
