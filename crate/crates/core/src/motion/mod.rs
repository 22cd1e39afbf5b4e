//! Single-mode motion planning: RRT-Connect in the free configuration
//! space of one mode.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff, normalize_angle, ArmModel, Config, ModeGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpConfig {
    /// Maximum joint-space distance between consecutive waypoints.
    pub step: f64,
    /// Target spacing of collision checks along an edge.
    pub check_step: f64,
    pub max_iterations: usize,
}

impl Default for MpConfig {
    fn default() -> Self {
        MpConfig {
            step: 0.15,
            check_step: 0.02,
            max_iterations: 3000,
        }
    }
}

impl MpConfig {
    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.step > 0.0 && self.check_step > 0.0 && self.check_step <= self.step && self.max_iterations > 0) {
            return Err(MotionError::InvalidConfig(*self));
        }
        Ok(())
    }

    /// Spacing actually used for edge checks. Half of `check_step`, the
    /// same grid the solution validator replays on.
    pub fn edge_resolution(&self) -> f64 {
        self.check_step / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MotionError {
    #[error("start configuration is in collision")]
    StartInCollision,
    #[error("goal configuration is in collision")]
    GoalInCollision,
    #[error("no path found within {0} iterations")]
    IterationsExhausted(usize),
    #[error("invalid motion config {0:?}")]
    InvalidConfig(MpConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Config>,
}

impl Trajectory {
    pub fn start(&self) -> Config {
        self.waypoints[0]
    }

    pub fn end(&self) -> Config {
        *self.waypoints.last().expect("trajectory is never empty")
    }

    /// Largest joint-space distance between consecutive waypoints.
    pub fn max_step(&self, arm: &ArmModel) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| distance(arm, &w[0], &w[1]))
            .fold(0.0, f64::max)
    }
}

/// Per-joint displacement from `a` to `b`, the short way round on
/// wrapping joints.
pub fn delta(arm: &ArmModel, a: &Config, b: &Config) -> Config {
    std::array::from_fn(|i| if arm.joint_wraps(i) { angle_diff(a[i], b[i]) } else { b[i] - a[i] })
}

pub fn distance(arm: &ArmModel, a: &Config, b: &Config) -> f64 {
    delta(arm, a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Point at fraction `t` along the edge `a → b`; `t = 1` returns `b`.
pub fn interpolate(arm: &ArmModel, a: &Config, b: &Config, t: f64) -> Config {
    if t >= 1.0 {
        return *b;
    }
    let d = delta(arm, a, b);
    std::array::from_fn(|i| {
        let v = a[i] + t * d[i];
        if arm.joint_wraps(i) {
            normalize_angle(v)
        } else {
            v
        }
    })
}

/// Interior and end points of `a → b` at spacing at most `resolution`.
/// The points are computed from the lexicographically smaller endpoint, so
/// `b → a` visits bitwise the same configurations in reverse.
pub fn edge_points(arm: &ArmModel, a: &Config, b: &Config, resolution: f64) -> Vec<Config> {
    let forward = a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()) != Some(std::cmp::Ordering::Greater);
    let (lo, hi) = if forward { (a, b) } else { (b, a) };
    let n = (distance(arm, lo, hi) / resolution).ceil().max(1.0) as usize;
    if forward {
        (1..=n).map(|k| interpolate(arm, lo, hi, k as f64 / n as f64)).collect()
    } else {
        (0..n).rev().map(|k| interpolate(arm, lo, hi, k as f64 / n as f64)).collect()
    }
}

/// True iff every point of `a → b` at spacing `resolution` is collision-free.
/// `a` itself is not checked.
pub fn edge_valid(geom: &ModeGeometry, a: &Config, b: &Config, resolution: f64) -> bool {
    edge_points(&geom.scene().arm, a, b, resolution).iter().all(|q| geom.check(q))
}

fn steer(arm: &ArmModel, from: &Config, to: &Config, step: f64) -> Config {
    let d = distance(arm, from, to);
    if d <= step {
        *to
    } else {
        interpolate(arm, from, to, step / d)
    }
}

struct Tree {
    nodes: Vec<Config>,
    parents: Vec<usize>,
}

#[derive(PartialEq)]
enum Extend {
    Reached,
    Advanced,
    Trapped,
}

impl Tree {
    fn new(root: Config) -> Self {
        Tree {
            nodes: vec![root],
            parents: vec![usize::MAX],
        }
    }

    fn nearest(&self, arm: &ArmModel, q: &Config) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = delta(arm, n, q).iter().map(|d| d * d).sum::<f64>();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn extend(&mut self, geom: &ModeGeometry, target: &Config, cfg: &MpConfig) -> Extend {
        let arm = &geom.scene().arm;
        let near = self.nearest(arm, target);
        let from = self.nodes[near];
        let new = steer(arm, &from, target, cfg.step);
        if !edge_valid(geom, &from, &new, cfg.edge_resolution()) {
            return Extend::Trapped;
        }
        self.nodes.push(new);
        self.parents.push(near);
        if new == *target {
            Extend::Reached
        } else {
            Extend::Advanced
        }
    }

    fn connect(&mut self, geom: &ModeGeometry, target: &Config, cfg: &MpConfig) -> Extend {
        loop {
            match self.extend(geom, target, cfg) {
                Extend::Advanced => continue,
                other => return other,
            }
        }
    }

    fn path_to_root(&self, mut i: usize) -> Vec<Config> {
        let mut out = Vec::new();
        while i != usize::MAX {
            out.push(self.nodes[i]);
            i = self.parents[i];
        }
        out
    }
}

/// Straight-line path subdivided to the step size, if collision-free.
/// Each waypoint segment is checked on its own, like a tree edge.
fn direct_path(geom: &ModeGeometry, start: &Config, goal: &Config, cfg: &MpConfig) -> Option<Trajectory> {
    let arm = &geom.scene().arm;
    let mut waypoints = vec![*start];
    waypoints.extend(edge_points(arm, start, goal, cfg.step));
    waypoints
        .windows(2)
        .all(|w| edge_valid(geom, &w[0], &w[1], cfg.edge_resolution()))
        .then_some(Trajectory { waypoints })
}

/// Plans a path from `start` to `goal` in the mode of `geom`.
///
/// A straight joint-space segment is tried first; otherwise
/// bidirectional RRT-Connect, swapping the trees every iteration.
pub fn plan_motion<R: Rng + ?Sized>(
    geom: &ModeGeometry,
    start: &Config,
    goal: &Config,
    cfg: &MpConfig,
    rng: &mut R,
) -> Result<Trajectory, MotionError> {
    cfg.validate()?;
    if !geom.check(start) {
        return Err(MotionError::StartInCollision);
    }
    if start == goal {
        return Ok(Trajectory { waypoints: vec![*start] });
    }
    if !geom.check(goal) {
        return Err(MotionError::GoalInCollision);
    }
    if let Some(t) = direct_path(geom, start, goal, cfg) {
        return Ok(t);
    }
    let arm = &geom.scene().arm;
    let mut a = Tree::new(*start);
    let mut b = Tree::new(*goal);
    let mut a_is_start = true;
    for _ in 0..cfg.max_iterations {
        let sample = arm.random_config(rng);
        if a.extend(geom, &sample, cfg) != Extend::Trapped {
            let new = *a.nodes.last().unwrap();
            if b.connect(geom, &new, cfg) == Extend::Reached {
                let mut from_a = a.path_to_root(a.nodes.len() - 1);
                let from_b = b.path_to_root(b.nodes.len() - 1);
                from_a.reverse();
                // `from_b` begins with the node equal to `new`.
                from_a.extend_from_slice(&from_b[1..]);
                if !a_is_start {
                    from_a.reverse();
                }
                return Ok(Trajectory { waypoints: from_a });
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    Err(MotionError::IterationsExhausted(cfg.max_iterations))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::geometry::{state_collision_free, Body, Mode, Pose2, Scene, Shape};

    fn empty_scene() -> Scene {
        Scene::new(Vec::new(), ArmModel::default(), BTreeMap::new()).unwrap()
    }

    /// A wall to the right of the arm, so reaching from one side of it to
    /// the other needs a swing over the top.
    fn wall_scene() -> Scene {
        let wall = Body::new("wall", Shape::rect_from(-0.05, -1.5, 0.05, 1.2), false);
        let mut poses = BTreeMap::new();
        poses.insert("wall".into(), Pose2::translation(1.3, 0.0));
        Scene::new(vec![wall], ArmModel::default(), poses).unwrap()
    }

    fn mode(scene: &Scene) -> Mode {
        Mode::new(scene, Vec::new()).unwrap()
    }

    fn dense_ok(scene: &Scene, m: &Mode, t: &Trajectory) -> bool {
        t.waypoints.windows(2).all(|w| {
            let n = (distance(&scene.arm, &w[0], &w[1]) / 1e-3).ceil() as usize;
            (0..=n).all(|k| state_collision_free(scene, m, &interpolate(&scene.arm, &w[0], &w[1], k as f64 / n.max(1) as f64)))
        })
    }

    #[test]
    fn identical_endpoints_give_single_waypoint() {
        let s = empty_scene();
        let m = mode(&s);
        let g = ModeGeometry::new(&s, &m).unwrap();
        let q = [0.1, 0.2, 0.3];
        let t = plan_motion(&g, &q, &q, &MpConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(t.waypoints, vec![q]);
    }

    #[test]
    fn empty_scene_paths_pass_dense_oracle() {
        let s = empty_scene();
        let m = mode(&s);
        let g = ModeGeometry::new(&s, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = MpConfig::default();
        let mut done = 0;
        while done < 20 {
            let a = s.arm.random_config(&mut rng);
            let b = s.arm.random_config(&mut rng);
            if !g.check(&a) || !g.check(&b) {
                continue;
            }
            let t = plan_motion(&g, &a, &b, &cfg, &mut rng).unwrap();
            assert_eq!(t.start(), a);
            assert_eq!(t.end(), b);
            assert!(t.max_step(&s.arm) <= cfg.step + 1e-12);
            assert!(dense_ok(&s, &m, &t));
            done += 1;
        }
    }

    #[test]
    fn swings_around_wall() {
        let s = wall_scene();
        let m = mode(&s);
        let g = ModeGeometry::new(&s, &m).unwrap();
        let cfg = MpConfig::default();
        let start = [0.9, 0.2, 0.0];
        let goal = [-0.9, -0.2, 0.0];
        assert!(g.check(&start) && g.check(&goal));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = plan_motion(&g, &start, &goal, &cfg, &mut rng).unwrap();
        assert_eq!(t.start(), start);
        assert_eq!(t.end(), goal);
        assert!(t.max_step(&s.arm) <= cfg.step + 1e-12);
        assert!(dense_ok(&s, &m, &t));
    }

    #[test]
    fn goal_inside_obstacle_fails_immediately() {
        let s = wall_scene();
        let m = mode(&s);
        let g = ModeGeometry::new(&s, &m).unwrap();
        let before = g.checks();
        let r = plan_motion(&g, &[PI / 2.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &MpConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(MotionError::GoalInCollision));
        assert_eq!(g.checks() - before, 2);
    }

    #[test]
    fn edge_through_wall_is_rejected() {
        let s = wall_scene();
        let m = mode(&s);
        let g = ModeGeometry::new(&s, &m).unwrap();
        let (a, b) = ([0.9, 0.0, 0.0], [-0.9, 0.0, 0.0]);
        assert!(g.check(&a) && g.check(&b));
        assert!(!edge_valid(&g, &a, &b, 0.02));
        let free = ([PI / 2.0, 0.0, 0.0], [PI / 2.0 + 0.5, 0.3, -0.2]);
        assert!(edge_valid(&g, &free.0, &free.1, 0.02));
        assert!(edge_valid(&g, &free.0, &free.0, 0.02));
    }

    #[test]
    fn wrapped_edges_take_the_short_way() {
        let arm = ArmModel::default();
        let a = [PI - 0.05, 0.0, 0.0];
        let b = [-PI + 0.05, 0.0, 0.0];
        assert!((distance(&arm, &a, &b) - 0.1).abs() < 1e-12);
        let mid = interpolate(&arm, &a, &b, 0.5);
        assert!((mid[0].abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn edge_points_are_direction_independent() {
        let arm = ArmModel::default();
        let a = [0.3, -1.0, 3.0];
        let b = [-0.2, 0.4, -3.0];
        let fwd = edge_points(&arm, &a, &b, 0.01);
        let mut back = edge_points(&arm, &b, &a, 0.01);
        assert_eq!(*fwd.last().unwrap(), b);
        assert_eq!(*back.last().unwrap(), a);
        back.pop();
        back.reverse();
        assert_eq!(&fwd[..fwd.len() - 1], &back[..]);
    }

    #[test]
    fn planning_is_deterministic_per_seed() {
        let s = wall_scene();
        let m = mode(&s);
        let g = ModeGeometry::new(&s, &m).unwrap();
        let run = || {
            plan_motion(&g, &[0.9, 0.2, 0.0], &[-0.9, -0.2, 0.0], &MpConfig::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_validation() {
        let bad = MpConfig {
            check_step: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(MpConfig::default().validate().is_ok());
    }
}
