use std::cell::Cell;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{ArmModel, Config, GeomError, Pose2, Shape, WorldShape, DOF};

/// Number of grasp ports generated on each body's perimeter.
pub const GRASP_PORTS: usize = 8;

/// Name of the robot as a kinematic parent.
pub const ROBOT: &str = "robot";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BodyId(pub usize);

/// Placement support: the segment `x_min..x_max` at height `y` of the
/// body frame. Objects rest on it with their lowest point at `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y: f64,
}

impl Region {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub id: String,
    pub shape: Shape,
    pub movable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    /// End-effector poses in the body frame that realize a grasp: the
    /// tip sits on the perimeter, heading along the inward normal.
    #[serde(default)]
    pub grasp_ports: Vec<Pose2>,
}

impl Body {
    pub fn new(id: impl Into<String>, shape: Shape, movable: bool) -> Self {
        let grasp_ports = if movable { perimeter_ports(&shape, GRASP_PORTS) } else { Vec::new() };
        Body {
            id: id.into(),
            shape,
            movable,
            region: None,
            grasp_ports,
        }
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }

    /// Region spanning the full top edge of the body's bounds.
    pub fn with_top_region(self) -> Self {
        let [x0, _, x1, y1] = self.shape.local_bounds();
        self.with_region(Region {
            x_min: x0,
            x_max: x1,
            y: y1,
        })
    }

    /// Height of the body frame above a supporting surface it rests on.
    pub fn rest_offset(&self) -> f64 {
        REST_GAP - self.shape.local_bounds()[1]
    }

    pub fn width(&self) -> f64 {
        let [x0, _, x1, _] = self.shape.local_bounds();
        x1 - x0
    }
}

/// Clearance between a resting body and its support. Boundary contact
/// counts as collision, so without it a grasped object could never leave
/// (or reach) its placement.
pub const REST_GAP: f64 = 1e-4;

/// Ports at perimeter fractions `(k + 1/2) / n`, walking from vertex 0.
pub fn perimeter_ports(shape: &Shape, n: usize) -> Vec<Pose2> {
    match shape {
        Shape::Circle { radius } => (0..n)
            .map(|k| {
                let phi = (k as f64 + 0.5) * 2.0 * std::f64::consts::PI / n as f64;
                Pose2::new(radius * phi.cos(), radius * phi.sin(), phi + std::f64::consts::PI)
            })
            .collect(),
        Shape::Polygon { vertices } => {
            let m = vertices.len();
            let edges: Vec<([f64; 2], [f64; 2], f64)> = (0..m)
                .map(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % m];
                    (a, b, (b[0] - a[0]).hypot(b[1] - a[1]))
                })
                .collect();
            let perimeter: f64 = edges.iter().map(|e| e.2).sum();
            (0..n)
                .map(|k| {
                    let mut s = (k as f64 + 0.5) * perimeter / n as f64;
                    for &(a, b, len) in &edges {
                        if s <= len {
                            let t = s / len;
                            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                            // CCW edge: inward normal is (-dy, dx).
                            let inward = (b[0] - a[0]).atan2(-(b[1] - a[1]));
                            return Pose2::new(p[0], p[1], inward);
                        }
                        s -= len;
                    }
                    unreachable!("port arclength beyond perimeter")
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parent {
    Robot,
    Body(BodyId),
}

/// Kinematic parent relation `(movable, parent, transform)`; the
/// transform is the movable's pose in the parent's frame (for a grasp,
/// the end-effector frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attachment {
    pub movable: BodyId,
    pub parent: Parent,
    pub transform: Pose2,
}

impl Attachment {
    pub fn is_grasp(&self) -> bool {
        self.parent == Parent::Robot
    }

    pub fn approx_eq(&self, other: &Attachment, tol: f64) -> bool {
        self.movable == other.movable
            && self.parent == other.parent
            && self.transform.approx_eq(&other.transform, tol)
    }
}

/// One attachment per movable, ordered like [`Scene::movables`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    attachments: Vec<Attachment>,
}

impl Mode {
    /// Builds a mode, checking it is total over the scene's movables and
    /// free of attachment cycles.
    pub fn new(scene: &Scene, attachments: Vec<Attachment>) -> Result<Mode, GeomError> {
        let mut slots: Vec<Option<Attachment>> = vec![None; scene.movables.len()];
        for a in attachments {
            let idx = scene
                .movable_index(a.movable)
                .ok_or_else(|| GeomError::NotMovable(scene.body(a.movable).id.clone()))?;
            if slots[idx].replace(a).is_some() {
                return Err(GeomError::DuplicateAttachment(scene.body(a.movable).id.clone()));
            }
        }
        let attachments = slots
            .into_iter()
            .enumerate()
            .map(|(i, a)| a.ok_or_else(|| GeomError::MissingAttachment(scene.body(scene.movables[i]).id.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let mode = Mode { attachments };
        for a in &mode.attachments {
            mode.chain_root(scene, a.movable)?;
        }
        Ok(mode)
    }

    pub fn attachments(&self) -> &[Attachment] {
        &self.attachments
    }

    pub fn get(&self, movable: BodyId) -> Option<&Attachment> {
        self.attachments.iter().find(|a| a.movable == movable)
    }

    /// `self` with `alpha.movable`'s attachment replaced.
    pub fn with_attachment(&self, alpha: Attachment) -> Option<Mode> {
        let mut next = self.clone();
        let slot = next.attachments.iter_mut().find(|a| a.movable == alpha.movable)?;
        *slot = alpha;
        Some(next)
    }

    /// Follows parents up from `id`; `Ok(true)` if the chain ends at the
    /// robot, `Ok(false)` if it ends at a static body.
    pub fn chain_root(&self, scene: &Scene, id: BodyId) -> Result<bool, GeomError> {
        let mut cur = id;
        for _ in 0..=self.attachments.len() {
            if !scene.body(cur).movable {
                return Ok(false);
            }
            match self.get(cur) {
                None => return Err(GeomError::MissingAttachment(scene.body(cur).id.clone())),
                Some(a) => match a.parent {
                    Parent::Robot => return Ok(true),
                    Parent::Body(p) => cur = p,
                },
            }
        }
        Err(GeomError::AttachmentCycle(scene.body(id).id.clone()))
    }

    /// Movables whose attachment differs between the two modes.
    pub fn diff(&self, other: &Mode) -> Vec<BodyId> {
        self.attachments
            .iter()
            .zip(&other.attachments)
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.movable)
            .collect()
    }

    /// `(movable, parent)` pairs, i.e. the abstract mode.
    pub fn abstract_pairs(&self) -> Vec<(BodyId, Parent)> {
        self.attachments.iter().map(|a| (a.movable, a.parent)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SceneFile", into = "SceneFile")]
pub struct Scene {
    bodies: Vec<Body>,
    pub arm: ArmModel,
    static_poses: BTreeMap<String, Pose2>,
    index: HashMap<String, BodyId>,
    movables: Vec<BodyId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneFile {
    arm: ArmModel,
    bodies: Vec<Body>,
    static_poses: BTreeMap<String, Pose2>,
}

impl TryFrom<SceneFile> for Scene {
    type Error = GeomError;

    fn try_from(f: SceneFile) -> Result<Self, GeomError> {
        Scene::new(f.bodies, f.arm, f.static_poses)
    }
}

impl From<Scene> for SceneFile {
    fn from(s: Scene) -> Self {
        SceneFile {
            arm: s.arm,
            bodies: s.bodies,
            static_poses: s.static_poses,
        }
    }
}

impl Scene {
    pub fn new(
        bodies: Vec<Body>,
        arm: ArmModel,
        static_poses: BTreeMap<String, Pose2>,
    ) -> Result<Scene, GeomError> {
        arm.validate()?;
        let mut index = HashMap::new();
        for (i, b) in bodies.iter().enumerate() {
            if b.id == ROBOT {
                return Err(GeomError::ReservedName(b.id.clone()));
            }
            if index.insert(b.id.clone(), BodyId(i)).is_some() {
                return Err(GeomError::DuplicateBody(b.id.clone()));
            }
            b.shape.validate()?;
            if let Some(r) = b.region {
                let [x0, y0, x1, y1] = b.shape.local_bounds();
                if !(r.x_min < r.x_max) || r.x_min < x0 - 1e-9 || r.x_max > x1 + 1e-9 || r.y < y0 - 1e-9 || r.y > y1 + 1e-9 {
                    return Err(GeomError::RegionOutsideBody(b.id.clone()));
                }
            }
            match (b.movable, static_poses.contains_key(&b.id)) {
                (false, false) => return Err(GeomError::MissingStaticPose(b.id.clone())),
                (true, true) => return Err(GeomError::MovableWithStaticPose(b.id.clone())),
                _ => {}
            }
        }
        if let Some(k) = static_poses.keys().find(|k| !index.contains_key(*k)) {
            return Err(GeomError::UnknownBody(k.clone()));
        }
        let movables = (0..bodies.len())
            .filter(|&i| bodies[i].movable)
            .map(BodyId)
            .collect();
        Ok(Scene {
            bodies,
            arm,
            static_poses,
            index,
            movables,
        })
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn body(&self, id: BodyId) -> &Body {
        &self.bodies[id.0]
    }

    pub fn body_id(&self, name: &str) -> Option<BodyId> {
        self.index.get(name).copied()
    }

    pub fn movables(&self) -> &[BodyId] {
        &self.movables
    }

    pub fn movable_index(&self, id: BodyId) -> Option<usize> {
        self.movables.iter().position(|&m| m == id)
    }

    pub fn static_pose(&self, id: BodyId) -> Option<Pose2> {
        self.static_poses.get(&self.bodies[id.0].id).copied()
    }

    pub fn parent_name(&self, p: Parent) -> &str {
        match p {
            Parent::Robot => ROBOT,
            Parent::Body(b) => &self.bodies[b.0].id,
        }
    }

    pub fn parent_by_name(&self, name: &str) -> Option<Parent> {
        if name == ROBOT {
            Some(Parent::Robot)
        } else {
            self.body_id(name).map(Parent::Body)
        }
    }

    /// Placement slots along `parent`'s region for `child`: the region is
    /// cut into `floor(width / child width)` equal cells, one centered
    /// placement per cell.
    pub fn placement_slots(&self, child: BodyId, parent: BodyId) -> Vec<Pose2> {
        let Some(r) = self.bodies[parent.0].region else {
            return Vec::new();
        };
        let c = &self.bodies[child.0];
        let [x0, _, x1, _] = c.shape.local_bounds();
        let w = x1 - x0;
        // Neighbouring bodies stay at least half a rest gap apart.
        let n = ((r.width() + REST_GAP) / (w + REST_GAP)).floor() as usize;
        let cell = r.width() / n.max(1) as f64;
        (0..n)
            .map(|k| {
                // Shift so the child's bounding box is centered in the cell.
                let center = r.x_min + (k as f64 + 0.5) * cell;
                Pose2::new(center - (x0 + x1) / 2.0, r.y + c.rest_offset(), 0.0)
            })
            .collect()
    }

    /// True if `transform` rests `child` upright on `parent`'s region with
    /// its footprint inside the region.
    pub fn placement_supported(&self, child: BodyId, parent: BodyId, transform: &Pose2, tol: f64) -> bool {
        let Some(r) = self.bodies[parent.0].region else {
            return false;
        };
        let c = &self.bodies[child.0];
        let [x0, _, x1, _] = c.shape.local_bounds();
        transform.theta.abs() <= tol
            && (transform.y - (r.y + c.rest_offset())).abs() <= tol
            && transform.x + x0 >= r.x_min - tol
            && transform.x + x1 <= r.x_max + tol
    }

    /// Grasp attachment transform for port `k` of `movable`.
    pub fn grasp_transform(&self, movable: BodyId, port: usize) -> Option<Pose2> {
        self.bodies[movable.0].grasp_ports.get(port).map(Pose2::inverse)
    }

    /// Index of the port realizing grasp `transform`, if any.
    pub fn grasp_port_of(&self, movable: BodyId, transform: &Pose2, tol: f64) -> Option<usize> {
        let ee_in_obj = transform.inverse();
        self.bodies[movable.0]
            .grasp_ports
            .iter()
            .position(|p| p.approx_eq(&ee_in_obj, tol))
    }
}

/// Resolves the world pose of body `id` under `mode` and configuration `q`.
pub fn world_pose(mode: &Mode, scene: &Scene, q: &Config, id: BodyId) -> Result<Pose2, GeomError> {
    let mut chain = Vec::new();
    let mut cur = id;
    loop {
        if cur.0 >= scene.bodies.len() {
            return Err(GeomError::UnknownBody(format!("#{}", cur.0)));
        }
        if let Some(p) = scene.static_pose(cur) {
            let mut pose = p;
            for t in chain.iter().rev() {
                pose = pose.compose(t);
            }
            return Ok(pose);
        }
        let a = mode
            .get(cur)
            .ok_or_else(|| GeomError::MissingAttachment(scene.body(cur).id.clone()))?;
        chain.push(a.transform);
        if chain.len() > mode.attachments.len() {
            return Err(GeomError::AttachmentCycle(scene.body(id).id.clone()));
        }
        match a.parent {
            Parent::Robot => {
                let mut pose = scene.arm.fk(q)?.ee;
                for t in chain.iter().rev() {
                    pose = pose.compose(t);
                }
                return Ok(pose);
            }
            Parent::Body(p) => cur = p,
        }
    }
}

/// Pairs never tested: a body and its direct parent, and two fixtures
/// (their relation is fixed by the scene, not by the state).
fn excluded(scene: &Scene, mode: &Mode, a: BodyId, b: BodyId) -> bool {
    if !scene.bodies[a.0].movable && !scene.bodies[b.0].movable {
        return true;
    }
    let direct = |c: BodyId, p: BodyId| mode.get(c).is_some_and(|att| att.parent == Parent::Body(p));
    direct(a, b) || direct(b, a)
}

fn grasped_directly(mode: &Mode, b: BodyId) -> bool {
    mode.get(b).is_some_and(Attachment::is_grasp)
}

/// All-pairs collision test of the full system state.
///
/// A body is exempt against its direct parent, fixtures against each
/// other, and a grasped body against the last link only.
pub fn state_collision_free(scene: &Scene, mode: &Mode, q: &Config) -> bool {
    let Ok(fk) = scene.arm.fk(q) else {
        return false;
    };
    let links: Vec<WorldShape> = (0..DOF)
        .map(|i| scene.arm.link_shape(i).at(&fk.links[i]))
        .collect();
    let mut bodies = Vec::with_capacity(scene.bodies.len());
    for i in 0..scene.bodies.len() {
        match world_pose(mode, scene, q, BodyId(i)) {
            Ok(p) => bodies.push(scene.bodies[i].shape.at(&p)),
            Err(_) => return false,
        }
    }
    for i in 0..DOF {
        for j in (i + 2)..DOF {
            if links[i].intersects(&links[j]) {
                return false;
            }
        }
    }
    for (bi, bs) in bodies.iter().enumerate() {
        for (li, ls) in links.iter().enumerate() {
            if li == DOF - 1 && grasped_directly(mode, BodyId(bi)) {
                continue;
            }
            if ls.intersects(bs) {
                return false;
            }
        }
        for bj in (bi + 1)..bodies.len() {
            if excluded(scene, mode, BodyId(bi), BodyId(bj)) {
                continue;
            }
            if bs.intersects(&bodies[bj]) {
                return false;
            }
        }
    }
    true
}

/// Per-mode collision context. Poses of bodies that do not hang off the
/// robot are resolved once; `check` then only moves the arm and whatever
/// it carries.
pub struct ModeGeometry<'a> {
    scene: &'a Scene,
    static_shapes: Vec<(BodyId, WorldShape)>,
    /// Carried bodies with their pose in the end-effector frame.
    carried: Vec<(BodyId, Pose2, bool)>,
    link_shapes: [Shape; DOF],
    static_clear: bool,
    mode: Mode,
    checks: Cell<u64>,
}

impl<'a> ModeGeometry<'a> {
    pub fn new(scene: &'a Scene, mode: &Mode) -> Result<Self, GeomError> {
        let mut static_shapes = Vec::new();
        let mut carried = Vec::new();
        for i in 0..scene.bodies.len() {
            let id = BodyId(i);
            let on_robot = scene.bodies[i].movable && mode.chain_root(scene, id)?;
            if on_robot {
                // Pose relative to the end effector: compose transforms up the chain.
                let mut chain = Vec::new();
                let mut cur = id;
                loop {
                    let a = mode.get(cur).expect("chain checked");
                    chain.push(a.transform);
                    match a.parent {
                        Parent::Robot => break,
                        Parent::Body(p) => cur = p,
                    }
                }
                let mut rel = Pose2::IDENTITY;
                for t in chain.iter().rev() {
                    rel = rel.compose(t);
                }
                carried.push((id, rel, grasped_directly(mode, id)));
            } else {
                let p = world_pose(mode, scene, &[0.0; DOF], id)?;
                static_shapes.push((id, scene.bodies[i].shape.at(&p)));
            }
        }
        let mut static_clear = true;
        'outer: for (i, (a, sa)) in static_shapes.iter().enumerate() {
            for (b, sb) in &static_shapes[i + 1..] {
                if !excluded(scene, mode, *a, *b) && sa.intersects(sb) {
                    static_clear = false;
                    break 'outer;
                }
            }
        }
        Ok(ModeGeometry {
            scene,
            static_shapes,
            carried,
            link_shapes: std::array::from_fn(|i| scene.arm.link_shape(i)),
            static_clear,
            mode: mode.clone(),
            checks: Cell::new(0),
        })
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    /// False if bodies collide among themselves regardless of `q`.
    pub fn static_clear(&self) -> bool {
        self.static_clear
    }

    pub fn checks(&self) -> u64 {
        self.checks.get()
    }

    /// Same verdict as [`state_collision_free`] for this mode.
    pub fn check(&self, q: &Config) -> bool {
        self.checks.set(self.checks.get() + 1);
        if !self.static_clear || !self.scene.arm.within_limits(q) {
            return false;
        }
        let fk = self.scene.arm.fk_unchecked(q);
        let links: [WorldShape; DOF] = std::array::from_fn(|i| self.link_shapes[i].at(&fk.links[i]));
        for i in 0..DOF {
            for j in (i + 2)..DOF {
                if links[i].intersects(&links[j]) {
                    return false;
                }
            }
        }
        for (_, s) in &self.static_shapes {
            if links.iter().any(|l| l.intersects(s)) {
                return false;
            }
        }
        let carried: Vec<(BodyId, WorldShape, bool)> = self
            .carried
            .iter()
            .map(|(id, rel, direct)| (*id, self.scene.bodies[id.0].shape.at(&fk.ee.compose(rel)), *direct))
            .collect();
        for (k, (id, shape, direct)) in carried.iter().enumerate() {
            for (li, l) in links.iter().enumerate() {
                if *direct && li == DOF - 1 {
                    continue;
                }
                if l.intersects(shape) {
                    return false;
                }
            }
            for (sid, s) in &self.static_shapes {
                if !excluded(self.scene, &self.mode, *id, *sid) && shape.intersects(s) {
                    return false;
                }
            }
            for (oid, other, _) in &carried[k + 1..] {
                if !excluded(self.scene, &self.mode, *id, *oid) && shape.intersects(other) {
                    return false;
                }
            }
        }
        true
    }
}
