use crate::geometry::{state_collision_free, world_pose, Config, Mode, Parent};
use crate::motion::{distance, edge_points, MpConfig};
use crate::symbolic::ActionKind;
use crate::tamp::{Problem, Solution};

/// Object pose jump allowed across a mode switch.
pub const CONTINUITY_TOL: f64 = 1e-3;
/// Match required between reached and goal attachments.
pub const GOAL_TOL: f64 = 1e-6;
const PLACEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ViolationKind {
    #[error("cannot parse action `{0}`")]
    UnknownAction(String),
    #[error("`{0}` is not applicable")]
    NotApplicable(String),
    #[error("geometric action without an attachment")]
    MissingAttachment,
    #[error("non-geometric step carries an attachment")]
    UnexpectedAttachment,
    #[error("attachment does not resolve: {0}")]
    BadAttachment(String),
    #[error("attachment ({found}) does not realize the action's change ({expected})")]
    AttachmentMismatch { expected: String, found: String },
    #[error("grasp transform matches no grasp port")]
    InvalidGrasp,
    #[error("placement is not supported by the parent's region")]
    UnsupportedPlacement,
    #[error("step has neither an action nor a trajectory")]
    EmptyStep,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory starts at {found:?}, robot is at {expected:?}")]
    TrajectoryStart { expected: Config, found: Config },
    #[error("waypoint {0} violates joint limits")]
    JointLimit(usize),
    #[error("step {size} between waypoints {waypoint} and {} exceeds {max}", waypoint + 1)]
    StepTooLarge { waypoint: usize, size: f64, max: f64 },
    #[error("collision on the segment after waypoint {0}")]
    Collision(usize),
    #[error("object pose jumps by {0} across the mode switch")]
    Discontinuity(f64),
    #[error("switch configuration collides in the new mode")]
    SwitchCollision,
    #[error("abstract and geometric states disagree: {0}")]
    Inconsistent(String),
    #[error("goal atoms not reached: {0:?}")]
    GoalAtoms(Vec<String>),
    #[error("goal attachment of `{0}` not matched")]
    GoalAttachment(String),
    #[error("goal configuration not reached")]
    GoalConfiguration,
}

/// First violation found; `step` is `None` for checks on the final state.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}: {kind}", step.map_or("final state".to_string(), |s| format!("step {s}")))]
pub struct Violation {
    pub step: Option<usize>,
    pub kind: ViolationKind,
}

/// Replays `solution` from the problem's initial state and checks every
/// symbolic transition, trajectory, mode switch and the goal. Trajectories
/// are checked with the all-pairs collision test on the same segment grid
/// the motion planner uses.
pub fn validate_solution(problem: &Problem, solution: &Solution, mp: &MpConfig) -> Result<(), Violation> {
    let scene = &problem.scene;
    let mut s = problem.init.s.clone();
    let mut sigma = problem.init.sigma.clone();
    let mut q = problem.init.q;
    for (i, step) in solution.steps.iter().enumerate() {
        let fail = |kind| Violation { step: Some(i), kind };
        if step.action.is_none() && step.trajectory.is_none() {
            return Err(fail(ViolationKind::EmptyStep));
        }
        if let Some(t) = &step.trajectory {
            check_trajectory(problem, &sigma, &q, t, mp).map_err(fail)?;
            q = *t.last().unwrap();
        }
        let Some(name) = &step.action else {
            if step.attachment.is_some() {
                return Err(fail(ViolationKind::UnexpectedAttachment));
            }
            continue;
        };
        let a = problem
            .task
            .parse_action(name)
            .map_err(|_| fail(ViolationKind::UnknownAction(name.clone())))?;
        let next_s = problem
            .task
            .apply(&s, a)
            .map_err(|_| fail(ViolationKind::NotApplicable(name.clone())))?;
        match (problem.task.action(a).kind, &step.attachment) {
            (ActionKind::Geometric, None) => return Err(fail(ViolationKind::MissingAttachment)),
            (ActionKind::Geometric, Some(sa)) => {
                let alpha = sa.resolve(scene).map_err(|e| fail(ViolationKind::BadAttachment(e.to_string())))?;
                let found = format!("{} {}", sa.movable, sa.parent);
                let (m, to) = problem.action_change(a).ok_or_else(|| fail(ViolationKind::BadAttachment(name.clone())))?;
                if (alpha.movable, alpha.parent) != (m, to) {
                    let expected = format!("{} {}", scene.body(m).id, scene.parent_name(to));
                    return Err(fail(ViolationKind::AttachmentMismatch { expected, found }));
                }
                match alpha.parent {
                    Parent::Robot => {
                        if scene.grasp_port_of(m, &alpha.transform, PLACEMENT_TOL).is_none() {
                            return Err(fail(ViolationKind::InvalidGrasp));
                        }
                    }
                    Parent::Body(p) => {
                        if !scene.placement_supported(m, p, &alpha.transform, PLACEMENT_TOL) {
                            return Err(fail(ViolationKind::UnsupportedPlacement));
                        }
                    }
                }
                let next = sigma.with_attachment(alpha).ok_or_else(|| fail(ViolationKind::BadAttachment(found.clone())))?;
                let before = world_pose(&sigma, scene, &q, m).map_err(|e| fail(ViolationKind::BadAttachment(e.to_string())))?;
                let after = world_pose(&next, scene, &q, m).map_err(|e| fail(ViolationKind::BadAttachment(e.to_string())))?;
                let jump = before.position_distance(&after).max(before.angle_distance(&after));
                if jump > CONTINUITY_TOL {
                    return Err(fail(ViolationKind::Discontinuity(jump)));
                }
                if !state_collision_free(scene, &next, &q) {
                    return Err(fail(ViolationKind::SwitchCollision));
                }
                sigma = next;
            }
            (_, Some(_)) => return Err(fail(ViolationKind::UnexpectedAttachment)),
            (_, None) => {}
        }
        s = next_s;
        problem
            .check_consistent(&s, &sigma)
            .map_err(|e| fail(ViolationKind::Inconsistent(e.to_string())))?;
    }

    let fail = |kind| Violation { step: None, kind };
    let missing: Vec<String> = problem
        .goal
        .atoms
        .iter()
        .filter(|&&f| !s.contains(f))
        .map(|&f| problem.task.fact_name(f))
        .collect();
    if !missing.is_empty() {
        return Err(fail(ViolationKind::GoalAtoms(missing)));
    }
    for g in &problem.goal.attachments {
        if !sigma.get(g.movable).is_some_and(|a| a.approx_eq(g, GOAL_TOL)) {
            return Err(fail(ViolationKind::GoalAttachment(scene.body(g.movable).id.clone())));
        }
    }
    if let Some(gq) = problem.goal.q {
        if distance(&scene.arm, &gq, &q) > GOAL_TOL {
            return Err(fail(ViolationKind::GoalConfiguration));
        }
    }
    Ok(())
}

fn check_trajectory(problem: &Problem, sigma: &Mode, q: &Config, t: &[Config], mp: &MpConfig) -> Result<(), ViolationKind> {
    let arm = &problem.scene.arm;
    let Some(first) = t.first() else {
        return Err(ViolationKind::EmptyTrajectory);
    };
    if distance(arm, first, q) > 1e-9 {
        return Err(ViolationKind::TrajectoryStart {
            expected: *q,
            found: *first,
        });
    }
    for (k, w) in t.iter().enumerate() {
        if !arm.within_limits(w) {
            return Err(ViolationKind::JointLimit(k));
        }
    }
    if !state_collision_free(&problem.scene, sigma, first) {
        return Err(ViolationKind::Collision(0));
    }
    for (k, pair) in t.windows(2).enumerate() {
        let size = distance(arm, &pair[0], &pair[1]);
        if size > mp.step + 1e-9 {
            return Err(ViolationKind::StepTooLarge {
                waypoint: k,
                size,
                max: mp.step,
            });
        }
        let free = edge_points(arm, &pair[0], &pair[1], mp.edge_resolution())
            .iter()
            .all(|p| state_collision_free(&problem.scene, sigma, p));
        if !free {
            return Err(ViolationKind::Collision(k));
        }
    }
    Ok(())
}
