use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{angle_diff, normalize_angle, GeomError, Pose2, Shape};

pub const DOF: usize = 3;

/// Joint angles of the three-link arm, radians.
pub type Config = [f64; DOF];

/// Fixed-base planar arm with three revolute joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub base: Pose2,
    pub link_lengths: [f64; DOF],
    /// Half thickness of each link's collision polygon.
    pub link_half_width: f64,
    /// The last link's collision polygon stops this far short of the
    /// end-effector point, leaving room for a contact at the tip.
    pub tip_clearance: f64,
    pub joint_limits: [(f64, f64); DOF],
}

impl Default for ArmModel {
    fn default() -> Self {
        ArmModel {
            base: Pose2::IDENTITY,
            link_lengths: [1.0, 0.8, 0.6],
            link_half_width: 0.025,
            tip_clearance: 0.02,
            joint_limits: [(-PI, PI); DOF],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkResult {
    /// Frame of each link, located at its proximal joint.
    pub links: [Pose2; DOF],
    pub ee: Pose2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkConfig {
    pub max_iterations: usize,
    pub restarts: usize,
    pub damping: f64,
    pub position_tolerance: f64,
    pub angle_tolerance: f64,
}

impl Default for IkConfig {
    fn default() -> Self {
        IkConfig {
            max_iterations: 200,
            restarts: 20,
            damping: 0.1,
            position_tolerance: 1e-4,
            angle_tolerance: 1e-3,
        }
    }
}

impl ArmModel {
    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// True when joint `i` covers the full circle and so wraps freely.
    pub fn joint_wraps(&self, i: usize) -> bool {
        let (lo, hi) = self.joint_limits[i];
        hi - lo >= 2.0 * PI - 1e-9
    }

    pub fn within_limits(&self, q: &Config) -> bool {
        q.iter().enumerate().all(|(i, &v)| {
            if !v.is_finite() {
                return false;
            }
            if self.joint_wraps(i) {
                return v > -PI - 1e-12 && v <= PI + 1e-12;
            }
            let (lo, hi) = self.joint_limits[i];
            v >= lo && v <= hi
        })
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if self.link_lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(GeomError::InvalidArm("link lengths must be positive".into()));
        }
        if !(self.link_half_width > 0.0) || self.tip_clearance < 0.0 {
            return Err(GeomError::InvalidArm("bad link thickness or clearance".into()));
        }
        if self.tip_clearance >= self.link_lengths[DOF - 1] {
            return Err(GeomError::InvalidArm("tip clearance exceeds last link".into()));
        }
        for &(lo, hi) in &self.joint_limits {
            if !(lo < hi) || lo < -PI - 1e-12 || hi > PI + 1e-12 {
                return Err(GeomError::InvalidArm(format!("joint limits ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    /// Collision polygon of link `i` in its own frame. Links are
    /// rectangles with chamfered ends, approximating capsules.
    pub fn link_shape(&self, i: usize) -> Shape {
        let w = self.link_half_width;
        let len = if i == DOF - 1 {
            self.link_lengths[i] - self.tip_clearance
        } else {
            self.link_lengths[i]
        };
        let c = (w / 2.0).min(len / 4.0);
        Shape::Polygon {
            vertices: vec![
                [0.0, -w + c],
                [c, -w],
                [len - c, -w],
                [len, -w + c],
                [len, w - c],
                [len - c, w],
                [c, w],
                [0.0, w - c],
            ],
        }
    }

    /// Forward kinematics without the limit check.
    pub fn fk_unchecked(&self, q: &Config) -> FkResult {
        let mut frame = self.base;
        let mut links = [Pose2::IDENTITY; DOF];
        for i in 0..DOF {
            frame = frame.compose(&Pose2::rotation(q[i]));
            links[i] = frame;
            frame = frame.compose(&Pose2::translation(self.link_lengths[i], 0.0));
        }
        FkResult { links, ee: frame }
    }

    pub fn fk(&self, q: &Config) -> Result<FkResult, GeomError> {
        if !self.within_limits(q) {
            return Err(GeomError::JointLimit(*q));
        }
        Ok(self.fk_unchecked(q))
    }

    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> Config {
        let mut q = [0.0; DOF];
        for (i, v) in q.iter_mut().enumerate() {
            let (lo, hi) = self.joint_limits[i];
            *v = rng.gen_range(lo..hi);
        }
        q
    }

    fn project_limits(&self, q: &mut Config) {
        for (i, v) in q.iter_mut().enumerate() {
            if self.joint_wraps(i) {
                *v = normalize_angle(*v);
            } else {
                let (lo, hi) = self.joint_limits[i];
                *v = v.clamp(lo, hi);
            }
        }
    }

    fn pose_error(&self, q: &Config, target: &Pose2) -> (Vector3<f64>, FkResult) {
        let fk = self.fk_unchecked(q);
        let e = Vector3::new(
            target.x - fk.ee.x,
            target.y - fk.ee.y,
            angle_diff(fk.ee.theta, target.theta),
        );
        (e, fk)
    }

    fn jacobian(&self, fk: &FkResult) -> Matrix3<f64> {
        let mut j = Matrix3::zeros();
        for i in 0..DOF {
            let p = fk.links[i];
            j[(0, i)] = -(fk.ee.y - p.y);
            j[(1, i)] = fk.ee.x - p.x;
            j[(2, i)] = 1.0;
        }
        j
    }

    fn accepts(&self, e: &Vector3<f64>, cfg: &IkConfig) -> bool {
        e[0].hypot(e[1]) < cfg.position_tolerance && e[2].abs() < cfg.angle_tolerance
    }

    /// Damped least-squares descent from `seed`, no restarts.
    pub fn ik_from_seed(&self, target: &Pose2, seed: &Config, cfg: &IkConfig) -> Option<Config> {
        let mut q = *seed;
        self.project_limits(&mut q);
        let lambda2 = cfg.damping * cfg.damping;
        for _ in 0..cfg.max_iterations {
            let (e, fk) = self.pose_error(&q, target);
            if e[0].hypot(e[1]) < 1e-9 && e[2].abs() < 1e-9 {
                break;
            }
            let j = self.jacobian(&fk);
            let jjt = j * j.transpose() + Matrix3::identity() * lambda2;
            let y = jjt.lu().solve(&e)?;
            let dq = j.transpose() * y;
            for i in 0..DOF {
                q[i] += dq[i];
            }
            self.project_limits(&mut q);
        }
        let (e, _) = self.pose_error(&q, target);
        self.accepts(&e, cfg).then_some(q)
    }

    /// Inverse kinematics from `seed`, retried from random configurations
    /// inside the joint limits.
    pub fn ik<R: Rng + ?Sized>(
        &self,
        target: &Pose2,
        seed: &Config,
        cfg: &IkConfig,
        rng: &mut R,
    ) -> Option<Config> {
        let (bx, by) = (target.x - self.base.x, target.y - self.base.y);
        if bx.hypot(by) > self.reach() + cfg.position_tolerance {
            return None;
        }
        if let Some(q) = self.ik_from_seed(target, seed, cfg) {
            return Some(q);
        }
        for _ in 0..cfg.restarts {
            let s = self.random_config(rng);
            if let Some(q) = self.ik_from_seed(target, &s, cfg) {
                return Some(q);
            }
        }
        None
    }
}
