//! Road construction, risk-scene scripts and their runtime triggering.
//!
//! A scenario is compiled once from `(variant, seed)` into a fixed list of
//! [`RiskEvent`]s. During a drive, [`ScenarioRuntime::trigger_events`] is
//! called once per tick before perception; it arms events as the ego passes
//! their trigger position, spawns the scripted actors and records onsets.
//!
//! Potential risks (a, b, c) all sit in the three-lane section and stay out
//! of the ego lane. Exactly one apparent risk (A in variant i, B in variant
//! ii) sits in the two-lane section and blocks the ego lane.

mod build;
mod runtime;

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use build::{build_road, compile_scenario, initial_world, practice_script};
pub use runtime::{EndReason, FiredRecord, OnsetRecord, ScenarioRuntime, TriggerOutput};

use crate::geometry::Vec2;
use crate::sim::EventId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    Ii,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::I => "i",
            Variant::Ii => "ii",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "i" | "I" => Some(Variant::I),
            "ii" | "II" => Some(Variant::Ii),
            _ => None,
        }
    }

    pub fn apparent_kind(self) -> RiskKind {
        match self {
            Variant::I => RiskKind::ApparentEntry,
            Variant::Ii => RiskKind::ApparentPylons,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The five risk scenes, serialised with their conventional labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskKind {
    /// (a) a car enters lane 1 from a side road right after the leader passes.
    #[serde(rename = "a")]
    PotentialEntry,
    /// (b) unrecognised pylons close lane 1.
    #[serde(rename = "b")]
    PotentialPylons,
    /// (c) an unrecognised motorcycle passes in the adjacent lane.
    #[serde(rename = "c")]
    PotentialMotorcycle,
    /// (A) a car enters the ego lane and stops there.
    #[serde(rename = "A")]
    ApparentEntry,
    /// (B) the leader changes lane, revealing pylons on the ego lane.
    #[serde(rename = "B")]
    ApparentPylons,
}

impl RiskKind {
    pub const POTENTIAL: [RiskKind; 3] = [
        RiskKind::PotentialEntry,
        RiskKind::PotentialPylons,
        RiskKind::PotentialMotorcycle,
    ];

    pub fn is_apparent(self) -> bool {
        matches!(self, RiskKind::ApparentEntry | RiskKind::ApparentPylons)
    }

    pub fn label(self) -> &'static str {
        match self {
            RiskKind::PotentialEntry => "a",
            RiskKind::PotentialPylons => "b",
            RiskKind::PotentialMotorcycle => "c",
            RiskKind::ApparentEntry => "A",
            RiskKind::ApparentPylons => "B",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a" => Some(RiskKind::PotentialEntry),
            "b" => Some(RiskKind::PotentialPylons),
            "c" => Some(RiskKind::PotentialMotorcycle),
            "A" => Some(RiskKind::ApparentEntry),
            "B" => Some(RiskKind::ApparentPylons),
            _ => None,
        }
    }
}

impl fmt::Display for RiskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// What an event puts into the world when it fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpawnSpec {
    /// A car starting at rest on a side road and following `path`.
    EnteringCar {
        path: Vec<Vec2>,
        accel: f64,
        cruise_speed: f64,
        stop_decel: Option<f64>,
    },
    /// Static pylons. With `after_leader_s` set they appear only once the
    /// leader's centre has passed that position.
    Pylons {
        positions: Vec<Vec2>,
        after_leader_s: Option<f64>,
    },
    /// A motorcycle placed `behind` metres behind the ego centre.
    Motorcycle { behind: f64, lane_d: f64, speed: f64 },
}

/// How the onset of an event is defined for metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnsetRule {
    /// The tick the scripted actor starts moving.
    MotionStart,
    /// The first tick any of the event's actors is in view and not hidden
    /// behind a nearer actor.
    FirstVisible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEvent {
    pub id: EventId,
    pub kind: RiskKind,
    /// Ego centre position that arms the event.
    pub trigger_s: f64,
    /// Road position of the hazard itself (intersection or pylon row).
    pub anchor_s: f64,
    pub spawn: SpawnSpec,
    pub onset_rule: OnsetRule,
    /// Stretch of road (ego positions) the event occupies; windows never overlap.
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChange {
    /// Leader centre position where the manoeuvre starts.
    pub start_s: f64,
    pub duration: f64,
    pub target_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderSpec {
    pub start: Vec2,
    pub speed: f64,
    pub lane_change: Option<LaneChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    /// `None` for the risk-free practice drive.
    pub variant: Option<Variant>,
    pub seed: u64,
    pub road: crate::sim::RoadNetwork,
    pub ego_start: Vec2,
    pub ego_speed: f64,
    pub leader: LeaderSpec,
    pub events: Vec<RiskEvent>,
    /// Hard stop for the practice drive, seconds.
    pub duration_limit: Option<f64>,
}

impl ScenarioScript {
    pub fn apparent_event(&self) -> Option<&RiskEvent> {
        self.events.iter().find(|e| e.kind.is_apparent())
    }

    pub fn count(&self, kind: RiskKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn event(&self, id: EventId) -> Option<&RiskEvent> {
        self.events.iter().find(|e| e.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialCounts {
    pub entry: u32,
    pub pylons: u32,
    pub motorcycle: u32,
}

impl Default for PotentialCounts {
    fn default() -> Self {
        Self {
            entry: 3,
            pylons: 3,
            motorcycle: 3,
        }
    }
}

impl PotentialCounts {
    pub fn of(&self, kind: RiskKind) -> u32 {
        match kind {
            RiskKind::PotentialEntry => self.entry,
            RiskKind::PotentialPylons => self.pylons,
            RiskKind::PotentialMotorcycle => self.motorcycle,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeaderConfig {
    /// Bumper-to-bumper gap at the start of a drive.
    pub initial_gap: f64,
    pub speed: f64,
    pub lane_change_duration: f64,
    /// Distance from the lane-change start (leader centre) to the pylon row.
    pub lane_change_lead: f64,
}

impl Default for LeaderConfig {
    fn default() -> Self {
        Self {
            initial_gap: 20.0,
            speed: 60.0 / 3.6,
            lane_change_duration: 3.0,
            lane_change_lead: 85.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntryConfig {
    pub accel: f64,
    pub cruise_speed: f64,
    /// Braking used by the apparent-risk car to stop in the ego lane.
    pub stop_decel: f64,
    /// Ego centre to intersection centre when (a) fires.
    pub potential_trigger_distance: f64,
    /// Ego centre to intersection centre when (A) fires.
    pub apparent_trigger_distance: f64,
    /// Distance of the waiting car's front from the road edge.
    pub potential_setback: f64,
    pub apparent_setback: f64,
    /// Longitudinal length of the (a) car's merge into its lane.
    pub merge_length: f64,
}

impl Default for EntryConfig {
    fn default() -> Self {
        Self {
            accel: 4.0,
            cruise_speed: 10.0,
            stop_decel: 8.0,
            potential_trigger_distance: 33.0,
            apparent_trigger_distance: 53.0,
            potential_setback: 1.25,
            apparent_setback: 9.7,
            merge_length: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PylonConfig {
    /// Pylons in the lane-1 taper of risk (b).
    pub lane_closure_count: u32,
    pub spacing: f64,
    /// Minimum lateral distance kept from the ego lane boundary.
    pub clearance: f64,
    /// Ego centre distance before the first pylon when pylons are placed.
    pub placement_distance: f64,
    /// Pylons across the ego lane in risk (B).
    pub row_count: u32,
    /// Extra pylons continuing along the closed ego lane behind the row.
    pub tail_count: u32,
}

impl Default for PylonConfig {
    fn default() -> Self {
        Self {
            lane_closure_count: 10,
            spacing: 6.0,
            clearance: 0.35,
            placement_distance: 130.0,
            row_count: 5,
            tail_count: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotorcycleConfig {
    pub speed: f64,
    pub spawn_behind: f64,
    /// Ego centre distance before the slot position when the bike is placed.
    pub trigger_distance: f64,
}

impl Default for MotorcycleConfig {
    fn default() -> Self {
        Self {
            speed: 27.8,
            spawn_behind: 30.0,
            trigger_distance: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub total_length: f64,
    pub lane_width: f64,
    pub lanes_before_drop: u8,
    pub lanes_after_drop: u8,
    /// Lane drop position as a fraction of the road length.
    pub lane_drop_fraction: f64,
    pub intersection_count: u32,
    pub side_road_width: f64,
    pub ego_start_s: f64,
    pub potential_counts: PotentialCounts,
    pub leader: LeaderConfig,
    pub entry: EntryConfig,
    pub pylons: PylonConfig,
    pub motorcycle: MotorcycleConfig,
    /// No apparent risk within this distance of the road end.
    pub end_exclusion: f64,
    /// Drive continues this long after the apparent risk resolves.
    pub run_tail: f64,
    /// Scripted actors further than this from the ego are removed.
    pub despawn_distance: f64,
    pub max_placement_retries: u32,
    pub practice_duration: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            total_length: 8400.0,
            lane_width: 3.5,
            lanes_before_drop: 3,
            lanes_after_drop: 2,
            lane_drop_fraction: 0.75,
            intersection_count: 28,
            side_road_width: 8.0,
            ego_start_s: 10.0,
            potential_counts: PotentialCounts::default(),
            leader: LeaderConfig::default(),
            entry: EntryConfig::default(),
            pylons: PylonConfig::default(),
            motorcycle: MotorcycleConfig::default(),
            end_exclusion: 200.0,
            run_tail: 15.0,
            despawn_distance: 300.0,
            max_placement_retries: 1000,
            practice_duration: 120.0,
        }
    }
}

/// Number of intersections the road must have.
pub const REQUIRED_INTERSECTIONS: u32 = 28;

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    InvalidConfig(&'static str),
    TooFewIntersections { configured: u32 },
    PlacementFailed { attempts: u32 },
    DoubleFire(EventId),
    NonMonotoneTick { last: u64, got: u64 },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::InvalidConfig(what) => write!(f, "invalid scenario config: {what}"),
            ScenarioError::TooFewIntersections { configured } => write!(
                f,
                "road needs {REQUIRED_INTERSECTIONS} intersections, config provides {configured}"
            ),
            ScenarioError::PlacementFailed { attempts } => write!(
                f,
                "could not place non-overlapping risk events after {attempts} attempts"
            ),
            ScenarioError::DoubleFire(id) => write!(f, "event {} fired twice", id.0),
            ScenarioError::NonMonotoneTick { last, got } => {
                write!(f, "trigger_events called for tick {got} after tick {last}")
            }
        }
    }
}
