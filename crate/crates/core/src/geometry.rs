//! Ground-plane geometry in the road frame.
//!
//! Points are `(s, d)`: `s` runs along the road centreline, `d` is the lateral
//! offset, positive towards the left road edge. Headings are measured from the
//! `+s` axis, counter-clockwise (towards `+d`).

use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub s: f64,
    pub d: f64,
}

impl Vec2 {
    pub const fn new(s: f64, d: f64) -> Self {
        Self { s, d }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.s * other.s + self.d * other.d
    }

    pub fn length(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn from_heading(heading: f64) -> Self {
        Self::new(math::cos(heading), math::sin(heading))
    }

    pub fn is_finite(self) -> bool {
        self.s.is_finite() && self.d.is_finite()
    }
}

impl core::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.s + rhs.s, self.d + rhs.d)
    }
}

impl core::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.s - rhs.s, self.d - rhs.d)
    }
}

impl core::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.s * rhs, self.d * rhs)
    }
}

/// A rectangle in the ground plane, centred at `center` and rotated by `heading`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center,
            heading,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
        }
    }

    /// Unit axes: forward, then left.
    pub fn axes(&self) -> [Vec2; 2] {
        let f = Vec2::from_heading(self.heading);
        [f, Vec2::new(-f.d, f.s)]
    }

    /// Corners in counter-clockwise order starting at front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let [f, l] = self.axes();
        let fl = f * self.half_length;
        let lw = l * self.half_width;
        let c = self.center;
        [c + fl + lw, c - fl + lw, c - fl - lw, c + fl - lw]
    }

    /// Half-extent of the rectangle projected on a unit axis.
    fn projected_radius(&self, axis: Vec2) -> f64 {
        let [f, l] = self.axes();
        self.half_length * f.dot(axis).abs() + self.half_width * l.dot(axis).abs()
    }

    /// Half-extent along the road (`s`) direction.
    pub fn half_extent_s(&self) -> f64 {
        self.projected_radius(Vec2::new(1.0, 0.0))
    }

    /// Half-extent across the road (`d`) direction.
    pub fn half_extent_d(&self) -> f64 {
        self.projected_radius(Vec2::new(0.0, 1.0))
    }

    /// Separating-axis overlap test. Touching edges count as overlap.
    pub fn overlaps(&self, other: &OrientedRect) -> bool {
        let delta = other.center - self.center;
        let [a0, a1] = self.axes();
        let [b0, b1] = other.axes();
        for axis in [a0, a1, b0, b1] {
            let dist = delta.dot(axis).abs();
            if dist > self.projected_radius(axis) + other.projected_radius(axis) {
                return false;
            }
        }
        true
    }
}
