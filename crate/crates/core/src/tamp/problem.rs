use crate::geometry::{Attachment, BodyId, Config, GeomError, Mode, ModeGeometry, Parent, Scene, ROBOT};
use crate::symbolic::{AbstractState, ActionId, AttachmentChange, FactId, GroundTask, ObjId};

use super::TampError;

/// The implicit goal set: symbolic atoms, attachments that must hold
/// exactly, and optionally a final robot configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    pub atoms: Vec<FactId>,
    pub attachments: Vec<Attachment>,
    pub q: Option<Config>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub s: AbstractState,
    pub sigma: Mode,
    pub q: Config,
}

/// A ground task tied to a scene: symbolic objects are matched to scene
/// bodies (and the robot) by name.
#[derive(Debug, Clone)]
pub struct Problem {
    pub task: GroundTask,
    pub scene: Scene,
    pub init: HybridState,
    pub goal: GoalSpec,
    obj_parent: Vec<Option<Parent>>,
    body_obj: Vec<Option<ObjId>>,
    robot_obj: Option<ObjId>,
}

impl Problem {
    pub fn new(task: GroundTask, scene: Scene, init_mode: Mode, init_q: Config, goal: GoalSpec) -> Result<Problem, TampError> {
        let mut obj_parent = vec![None; task.objects().len()];
        let mut body_obj = vec![None; scene.bodies().len()];
        let mut robot_obj = None;
        for (i, o) in task.objects().iter().enumerate() {
            let id = ObjId(i as u32);
            if o.name == ROBOT {
                obj_parent[i] = Some(Parent::Robot);
                robot_obj = Some(id);
            } else if let Some(b) = scene.body_id(&o.name) {
                obj_parent[i] = Some(Parent::Body(b));
                body_obj[b.0] = Some(id);
            }
        }
        let init = HybridState {
            s: task.init.clone(),
            sigma: init_mode,
            q: init_q,
        };
        let p = Problem {
            task,
            scene,
            init,
            goal,
            obj_parent,
            body_obj,
            robot_obj,
        };
        for &m in p.scene.movables() {
            if p.body_obj[m.0].is_none() {
                return Err(TampError::Binding(format!(
                    "movable `{}` has no symbolic object",
                    p.scene.body(m).id
                )));
            }
        }
        for a in p.task.actions() {
            if let Some(ch) = a.change {
                p.change_bodies(&ch)?;
            }
        }
        p.check_consistent(&p.init.s, &p.init.sigma)?;
        let g = ModeGeometry::new(&p.scene, &p.init.sigma)?;
        if !g.check(&p.init.q) {
            return Err(TampError::InitialCollision);
        }
        for att in &p.goal.attachments {
            let key = p.attachment_fact(att)?;
            if !p.goal.atoms.contains(&key) {
                return Err(TampError::Binding(format!(
                    "goal attachment {} is not among the goal atoms",
                    p.task.fact_name(key)
                )));
            }
        }
        Ok(p)
    }

    pub fn parent_of_obj(&self, o: ObjId) -> Option<Parent> {
        self.obj_parent[o.0 as usize]
    }

    pub fn obj_of_parent(&self, p: Parent) -> Option<ObjId> {
        match p {
            Parent::Robot => self.robot_obj,
            Parent::Body(b) => self.body_obj[b.0],
        }
    }

    /// Scene movable and new parent of a geometric action's change.
    pub fn change_bodies(&self, ch: &AttachmentChange) -> Result<(BodyId, Parent), TampError> {
        let name = |o: ObjId| self.task.object_name(o).to_string();
        let m = match self.parent_of_obj(ch.movable) {
            Some(Parent::Body(b)) if self.scene.body(b).movable => b,
            _ => return Err(TampError::Binding(format!("`{}` is not a movable body", name(ch.movable)))),
        };
        let to = self
            .parent_of_obj(ch.to)
            .ok_or_else(|| TampError::Binding(format!("`{}` is not in the scene", name(ch.to))))?;
        Ok((m, to))
    }

    pub fn action_change(&self, a: ActionId) -> Option<(BodyId, Parent)> {
        self.task.action(a).change.and_then(|ch| self.change_bodies(&ch).ok())
    }

    /// The `attached(m, p)` fact of an attachment.
    pub fn attachment_fact(&self, a: &Attachment) -> Result<FactId, TampError> {
        let m = self.obj_of_parent(Parent::Body(a.movable));
        let p = self.obj_of_parent(a.parent);
        m.zip(p)
            .and_then(|(m, p)| self.task.attached_fact(m, p))
            .ok_or_else(|| {
                TampError::Binding(format!(
                    "no attached fact for ({} {})",
                    self.scene.body(a.movable).id,
                    self.scene.parent_name(a.parent)
                ))
            })
    }

    /// Checks that the `attached` facts of `s` are exactly the mode's
    /// (movable, parent) pairs.
    pub fn check_consistent(&self, s: &AbstractState, sigma: &Mode) -> Result<(), TampError> {
        let mut expected = sigma
            .attachments()
            .iter()
            .map(|a| self.attachment_fact(a))
            .collect::<Result<Vec<_>, _>>()?;
        expected.sort();
        let actual = self.task.abstract_mode(s);
        if expected != actual {
            return Err(TampError::Inconsistent {
                symbolic: actual.iter().map(|&f| self.task.fact_name(f)).collect(),
                geometric: expected.iter().map(|&f| self.task.fact_name(f)).collect(),
            });
        }
        Ok(())
    }

    /// True iff every goal attachment holds in `sigma` to `tol`.
    pub fn goal_attachments_hold(&self, sigma: &Mode, tol: f64) -> bool {
        self.goal
            .attachments
            .iter()
            .all(|g| sigma.get(g.movable).is_some_and(|a| a.approx_eq(g, tol)))
    }

    pub fn goal_reached(&self, x: &HybridState, tol: f64) -> bool {
        self.task.goal_satisfied(&x.s, &self.goal.atoms)
            && self.goal_attachments_hold(&x.sigma, tol)
            && self.goal.q.is_none_or(|q| q.iter().zip(&x.q).all(|(a, b)| (a - b).abs() <= tol))
    }

    pub fn geometry(&self, sigma: &Mode) -> Result<ModeGeometry<'_>, GeomError> {
        ModeGeometry::new(&self.scene, sigma)
    }
}
