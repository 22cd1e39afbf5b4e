use serde::{Deserialize, Serialize};

use super::{GeomError, Pose2};

/// Separation at or below this distance counts as contact.
pub const CONTACT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Circle { radius: f64 },
    /// Convex, counter-clockwise vertex list in the body frame.
    Polygon { vertices: Vec<[f64; 2]> },
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Shape {
    /// Axis-aligned rectangle centered on the origin.
    pub fn rect(width: f64, height: f64) -> Shape {
        let (w, h) = (width / 2.0, height / 2.0);
        Shape::Polygon {
            vertices: vec![[-w, -h], [w, -h], [w, h], [-w, h]],
        }
    }

    /// Rectangle spanning `[x0, x1] × [y0, y1]`.
    pub fn rect_from(x0: f64, y0: f64, x1: f64, y1: f64) -> Shape {
        Shape::Polygon {
            vertices: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
        }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        match self {
            Shape::Circle { radius } if *radius > 0.0 && radius.is_finite() => Ok(()),
            Shape::Circle { radius } => Err(GeomError::InvalidShape(format!("radius {radius}"))),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return Err(GeomError::InvalidShape(format!("{n} vertices")));
                }
                if vertices.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(GeomError::InvalidShape("non-finite vertex".into()));
                }
                for i in 0..n {
                    let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                    if c <= 0.0 {
                        return Err(GeomError::InvalidShape(
                            "polygon is not strictly convex and counter-clockwise".into(),
                        ));
                    }
                }
                if self.area() <= 1e-12 {
                    return Err(GeomError::InvalidShape("degenerate area".into()));
                }
                Ok(())
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Circle { radius } => std::f64::consts::PI * radius * radius,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        a[0] * b[1] - b[0] * a[1]
                    })
                    .sum::<f64>()
                    / 2.0
            }
        }
    }

    /// Body-frame bounds `(min_x, min_y, max_x, max_y)`.
    pub fn local_bounds(&self) -> [f64; 4] {
        match self {
            Shape::Circle { radius } => [-radius, -radius, *radius, *radius],
            Shape::Polygon { vertices } => vertices.iter().fold(
                [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                |b, v| [b[0].min(v[0]), b[1].min(v[1]), b[2].max(v[0]), b[3].max(v[1])],
            ),
        }
    }

    /// Point-in-shape test in the body frame (boundary inclusive).
    pub fn contains_local(&self, p: [f64; 2]) -> bool {
        match self {
            Shape::Circle { radius } => p[0].hypot(p[1]) <= *radius,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| cross(vertices[i], vertices[(i + 1) % n], p) >= 0.0)
            }
        }
    }

    /// Places the shape at `pose`.
    pub fn at(&self, pose: &Pose2) -> WorldShape {
        match self {
            Shape::Circle { radius } => {
                let c = [pose.x, pose.y];
                WorldShape {
                    kind: WorldKind::Circle { center: c, radius: *radius },
                    aabb: [c[0] - radius, c[1] - radius, c[0] + radius, c[1] + radius],
                }
            }
            Shape::Polygon { vertices } => {
                let pts: Vec<[f64; 2]> = vertices.iter().map(|&v| pose.transform_point(v)).collect();
                let n = pts.len();
                let mut normals = Vec::with_capacity(n);
                let mut aabb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
                for i in 0..n {
                    let a = pts[i];
                    let b = pts[(i + 1) % n];
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let len = dx.hypot(dy);
                    normals.push([dy / len, -dx / len]);
                    aabb = [aabb[0].min(a[0]), aabb[1].min(a[1]), aabb[2].max(a[0]), aabb[3].max(a[1])];
                }
                WorldShape {
                    kind: WorldKind::Polygon { points: pts, normals },
                    aabb,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum WorldKind {
    Circle { center: [f64; 2], radius: f64 },
    Polygon { points: Vec<[f64; 2]>, normals: Vec<[f64; 2]> },
}

/// A shape resolved into world coordinates, with outward edge normals and
/// a bounding box cached for repeated tests.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldShape {
    kind: WorldKind,
    aabb: [f64; 4],
}

fn project(points: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p[0] * axis[0] + p[1] * axis[1];
        (lo.min(d), hi.max(d))
    })
}

fn polygon_polygon(pa: &[[f64; 2]], na: &[[f64; 2]], pb: &[[f64; 2]], nb: &[[f64; 2]]) -> bool {
    for &axis in na.iter().chain(nb) {
        let (amin, amax) = project(pa, axis);
        let (bmin, bmax) = project(pb, axis);
        if amax + CONTACT_MARGIN < bmin || bmax + CONTACT_MARGIN < amin {
            return false;
        }
    }
    true
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (abx, aby) = (b[0] - a[0], b[1] - a[1]);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * abx).hypot(p[1] - a[1] - t * aby)
}

fn circle_polygon(c: [f64; 2], r: f64, points: &[[f64; 2]], normals: &[[f64; 2]]) -> bool {
    let n = points.len();
    let inside = (0..n).all(|i| {
        let a = points[i];
        (c[0] - a[0]) * normals[i][0] + (c[1] - a[1]) * normals[i][1] <= 0.0
    });
    if inside {
        return true;
    }
    (0..n).any(|i| point_segment_distance(c, points[i], points[(i + 1) % n]) <= r + CONTACT_MARGIN)
}

impl WorldShape {
    pub fn aabb(&self) -> [f64; 4] {
        self.aabb
    }

    pub fn intersects(&self, other: &WorldShape) -> bool {
        let (a, b) = (self.aabb, other.aabb);
        if a[2] + CONTACT_MARGIN < b[0]
            || b[2] + CONTACT_MARGIN < a[0]
            || a[3] + CONTACT_MARGIN < b[1]
            || b[3] + CONTACT_MARGIN < a[1]
        {
            return false;
        }
        match (&self.kind, &other.kind) {
            (
                WorldKind::Circle { center: ca, radius: ra },
                WorldKind::Circle { center: cb, radius: rb },
            ) => (ca[0] - cb[0]).hypot(ca[1] - cb[1]) <= ra + rb + CONTACT_MARGIN,
            (WorldKind::Circle { center, radius }, WorldKind::Polygon { points, normals })
            | (WorldKind::Polygon { points, normals }, WorldKind::Circle { center, radius }) => {
                circle_polygon(*center, *radius, points, normals)
            }
            (
                WorldKind::Polygon { points: pa, normals: na },
                WorldKind::Polygon { points: pb, normals: nb },
            ) => polygon_polygon(pa, na, pb, nb),
        }
    }
}

/// True iff the shapes overlap or come within [`CONTACT_MARGIN`].
pub fn collide(a: &Shape, pa: &Pose2, b: &Shape, pb: &Pose2) -> bool {
    a.at(pa).intersects(&b.at(pb))
}
