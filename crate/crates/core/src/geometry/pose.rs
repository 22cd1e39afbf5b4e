use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// Wraps an angle into (-π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Shortest signed angular difference `b - a`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(b - a)
}

/// Rigid transform in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn translation(x: f64, y: f64) -> Self {
        Pose2::new(x, y, 0.0)
    }

    pub fn rotation(theta: f64) -> Self {
        Pose2::new(0.0, 0.0, theta)
    }

    /// `self ∘ other`: `other` expressed in `self`'s frame, mapped out.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)
    }

    pub fn transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    pub fn inverse_transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        let dx = p[0] - self.x;
        let dy = p[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy]
    }

    pub fn position_distance(&self, other: &Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn angle_distance(&self, other: &Pose2) -> f64 {
        angle_diff(self.theta, other.theta).abs()
    }

    /// Equal in position and heading within `tol`.
    pub fn approx_eq(&self, other: &Pose2, tol: f64) -> bool {
        (self.x - other.x).abs() <= tol
            && (self.y - other.y).abs() <= tol
            && self.angle_distance(other) <= tol
    }
}

impl Mul for Pose2 {
    type Output = Pose2;

    fn mul(self, rhs: Pose2) -> Pose2 {
        self.compose(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pose() -> impl Strategy<Value = Pose2> {
        (-5.0..5.0f64, -5.0..5.0f64, -4.0..4.0f64).prop_map(|(x, y, t)| Pose2::new(x, y, t))
    }

    #[test]
    fn normalize_keeps_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.5 + 4.0 * PI) - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn inverse_cancels(p in pose()) {
            let id = p * p.inverse();
            prop_assert!(id.approx_eq(&Pose2::IDENTITY, 1e-9));
            let id = p.inverse() * p;
            prop_assert!(id.approx_eq(&Pose2::IDENTITY, 1e-9));
        }

        #[test]
        fn composition_is_associative(a in pose(), b in pose(), c in pose()) {
            prop_assert!(((a * b) * c).approx_eq(&(a * (b * c)), 1e-9));
        }

        #[test]
        fn theta_is_normalized(a in pose(), b in pose()) {
            let t = (a * b).theta;
            prop_assert!(t > -PI && t <= PI);
        }

        #[test]
        fn point_transform_round_trips(p in pose(), x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let q = p.inverse_transform_point(p.transform_point([x, y]));
            prop_assert!((q[0] - x).abs() < 1e-9 && (q[1] - y).abs() < 1e-9);
        }
    }
}
