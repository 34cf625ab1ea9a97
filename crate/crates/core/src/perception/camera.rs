use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::math;
use crate::sim::{Actor, ActorClass, ActorId, VehicleState};

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

/// Pinhole camera fixed to the ego body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub image_width: u32,
    pub image_height: u32,
    /// Focal length in pixels; square pixels, principal point at the centre.
    pub focal_length: f64,
    /// Mount offset ahead of the ego body centre.
    pub mount_forward: f64,
    pub mount_height: f64,
    /// Downward pitch in radians.
    pub pitch: f64,
    pub max_range: f64,
    pub near_plane: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            image_width: 1280,
            image_height: 1024,
            focal_length: 1000.0,
            mount_forward: 2.25,
            mount_height: 1.2,
            pitch: 0.0,
            max_range: 120.0,
            near_plane: 0.1,
        }
    }
}

/// An actor as seen by the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedActor {
    pub id: ActorId,
    pub class: ActorClass,
    /// Hull of the projected body clipped to the image.
    pub bbox: BoundingBox,
    /// Convex outline of the projected body (unclipped to the image).
    pub outline: Vec<[f64; 2]>,
    /// Forward distance from the camera to the actor centre.
    pub depth: f64,
}

/// Box edges as corner index pairs; corners 0..4 on the ground, 4..8 on top.
const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

impl CameraModel {
    pub fn principal_point(&self) -> (f64, f64) {
        (
            0.5 * f64::from(self.image_width),
            0.5 * f64::from(self.image_height),
        )
    }

    /// Horizontal field of view in radians.
    pub fn horizontal_fov(&self) -> f64 {
        2.0 * math::atan(0.5 * f64::from(self.image_width) / self.focal_length)
    }

    pub fn position(&self, ego: &VehicleState) -> Vec2 {
        ego.position + Vec2::from_heading(ego.heading) * self.mount_forward
    }

    /// Planar distance from the camera to an actor's centre.
    pub fn range_to(&self, target: &VehicleState, ego: &VehicleState) -> f64 {
        (target.position - self.position(ego)).length()
    }

    /// Camera coordinates (right, down, forward) of a world point at height `z`.
    pub fn to_camera(&self, ego: &VehicleState, p: Vec2, z: f64) -> [f64; 3] {
        let rel = p - self.position(ego);
        let f = Vec2::from_heading(ego.heading);
        let left = Vec2::new(-f.d, f.s);
        let fwd = rel.dot(f);
        let x_left = rel.dot(left);
        let up = z - self.mount_height;
        let (sp, cp) = (math::sin(self.pitch), math::cos(self.pitch));
        let depth = fwd * cp - up * sp;
        let down = fwd * sp + (-up) * cp;
        [-x_left, down, depth]
    }

    fn pixel(&self, c: [f64; 3]) -> [f64; 2] {
        let (cx, cy) = self.principal_point();
        [
            cx + self.focal_length * c[0] / c[2],
            cy + self.focal_length * c[1] / c[2],
        ]
    }

    /// Projects a ground point, `None` if it lies behind the near plane.
    pub fn project_ground(&self, ego: &VehicleState, s: f64, d: f64) -> Option<[f64; 2]> {
        let c = self.to_camera(ego, Vec2::new(s, d), 0.0);
        (c[2] > self.near_plane).then(|| self.pixel(c))
    }

    /// Projects the actor's box, clipping edges at the near plane.
    pub fn project_actor(&self, actor: &Actor, ego: &VehicleState) -> Option<ProjectedActor> {
        let footprint = actor.footprint().corners();
        let mut corners = [[0.0; 3]; 8];
        for (i, c) in footprint.iter().enumerate() {
            corners[i] = self.to_camera(ego, *c, 0.0);
            corners[i + 4] = self.to_camera(ego, *c, actor.extent.height);
        }
        let near = self.near_plane;
        let mut points: Vec<[f64; 2]> = Vec::with_capacity(16);
        for c in corners.iter().filter(|c| c[2] >= near) {
            points.push(self.pixel(*c));
        }
        if points.len() == 8 {
            // Fully in front; no clipping needed.
        } else {
            if points.is_empty() && corners.iter().all(|c| c[2] < near) {
                return None;
            }
            for (a, b) in BOX_EDGES {
                let (ca, cb) = (corners[a], corners[b]);
                if (ca[2] < near) != (cb[2] < near) {
                    let t = (near - ca[2]) / (cb[2] - ca[2]);
                    let p = [
                        ca[0] + t * (cb[0] - ca[0]),
                        ca[1] + t * (cb[1] - ca[1]),
                        near,
                    ];
                    points.push(self.pixel(p));
                }
            }
        }
        if points.is_empty() {
            return None;
        }
        let (w, h) = (f64::from(self.image_width), f64::from(self.image_height));
        let mut bbox = BoundingBox {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for p in &points {
            bbox.x_min = bbox.x_min.min(p[0]);
            bbox.x_max = bbox.x_max.max(p[0]);
            bbox.y_min = bbox.y_min.min(p[1]);
            bbox.y_max = bbox.y_max.max(p[1]);
        }
        bbox.x_min = bbox.x_min.clamp(0.0, w);
        bbox.x_max = bbox.x_max.clamp(0.0, w);
        bbox.y_min = bbox.y_min.clamp(0.0, h);
        bbox.y_max = bbox.y_max.clamp(0.0, h);
        if bbox.x_min >= bbox.x_max || bbox.y_min >= bbox.y_max {
            return None;
        }
        let depth = self.to_camera(ego, actor.state.position, 0.5 * actor.extent.height)[2];
        Some(ProjectedActor {
            id: actor.id,
            class: actor.class,
            bbox,
            outline: convex_hull(points),
            depth,
        })
    }
}

/// Andrew's monotone chain, counter-clockwise, no repeated endpoint.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
