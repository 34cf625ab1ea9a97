use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

/// Result of locating a lateral offset on the carriageway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanePosition {
    /// 1 is the leftmost lane (the one bordering the side roads).
    Lane(u8),
    OffRoad,
}

impl LanePosition {
    pub fn index(self) -> Option<u8> {
        match self {
            LanePosition::Lane(i) => Some(i),
            LanePosition::OffRoad => None,
        }
    }
}

/// A junction with a non-priority side road joining from the left edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub s: f64,
    pub side_road_width: f64,
}

/// Straight carriageway in the `(s, d)` frame.
///
/// `d = 0` is the right edge (median side). Lanes are numbered from the left
/// edge, so with `n` lanes lane `k` spans `d in [(n-k) w, (n-k+1) w]`. When the
/// road narrows the leftmost lane ends, which keeps the ego's lateral position
/// unchanged while its lane number drops from 2 to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub total_length: f64,
    pub lane_width: f64,
    pub lanes_before_drop: u8,
    pub lanes_after_drop: u8,
    pub lane_drop_s: f64,
    pub intersections: Vec<Intersection>,
    pub ego_lane_before_drop: u8,
    pub ego_lane_after_drop: u8,
}

impl RoadNetwork {
    pub fn lane_count(&self, s: f64) -> u8 {
        if s < self.lane_drop_s {
            self.lanes_before_drop
        } else {
            self.lanes_after_drop
        }
    }

    /// Lane the ego is meant to occupy at `s`.
    pub fn ego_lane(&self, s: f64) -> u8 {
        if s < self.lane_drop_s {
            self.ego_lane_before_drop
        } else {
            self.ego_lane_after_drop
        }
    }

    /// Lateral offset of the left road edge at `s`.
    pub fn left_edge(&self, s: f64) -> f64 {
        f64::from(self.lane_count(s)) * self.lane_width
    }

    /// Centre of `lane` at `s`, or `None` when that lane does not exist there.
    pub fn lane_center(&self, lane: u8, s: f64) -> Option<f64> {
        let n = self.lane_count(s);
        if lane == 0 || lane > n {
            return None;
        }
        Some((f64::from(n - lane) + 0.5) * self.lane_width)
    }

    /// Lateral span `(right, left)` of `lane` at `s`.
    pub fn lane_bounds(&self, lane: u8, s: f64) -> Option<(f64, f64)> {
        let n = self.lane_count(s);
        if lane == 0 || lane > n {
            return None;
        }
        let right = f64::from(n - lane) * self.lane_width;
        Some((right, right + self.lane_width))
    }

    pub fn lane_at(&self, s: f64, d: f64) -> LanePosition {
        let n = self.lane_count(s);
        let edge = f64::from(n) * self.lane_width;
        if !(0.0..=edge).contains(&d) || !d.is_finite() {
            return LanePosition::OffRoad;
        }
        // d == edge belongs to lane 1.
        let from_right = math::floor(d / self.lane_width).min(f64::from(n) - 1.0);
        LanePosition::Lane(n - from_right as u8)
    }

    /// Index of the nearest intersection whose mouth spans `s`, if any.
    pub fn intersection_near(&self, s: f64) -> Option<&Intersection> {
        self.intersections
            .iter()
            .find(|i| (s - i.s).abs() <= 0.5 * i.side_road_width)
    }
}
