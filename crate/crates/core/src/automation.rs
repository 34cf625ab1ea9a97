//! Simulated Level-2 functions: ACC, LKAS and driver-intervention handling.
//!
//! ACC is a PID pair on the gap error and the relative-velocity error when a
//! vehicle is being followed, and a speed-hold PID otherwise. LKAS steers in
//! proportion to the bearing of the followed vehicle relative to the ego
//! heading; with nothing to follow it aims at a point on its own lane centre.
//! Both functions share one engagement flag, so any intervention hands the
//! whole driving task back to the driver.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::sim::{longitudinal_gap, Actor, Extent, RoadNetwork, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSource {
    Automation,
    Driver,
}

/// Normalised actuation. `longitudinal < 0` brakes, `steering > 0` turns left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub longitudinal: f64,
    pub steering: f64,
    pub source: CommandSource,
}

impl ControlCommand {
    /// Builds a command with both channels clamped to `[-1, 1]`.
    pub fn new(longitudinal: f64, steering: f64, source: CommandSource) -> Self {
        Self {
            longitudinal: clamp_unit(longitudinal),
            steering: clamp_unit(steering),
            source,
        }
    }

    pub fn idle(source: CommandSource) -> Self {
        Self::new(0.0, 0.0, source)
    }

    pub fn brake(&self) -> f64 {
        (-self.longitudinal).max(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.longitudinal.is_finite() && self.steering.is_finite()
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    fn is_finite(&self) -> bool {
        self.kp.is_finite() && self.ki.is_finite() && self.kd.is_finite()
    }
}

/// ACC targets and gains. Gains map metres (or m/s) of error to normalised
/// command; at the default ±4 m/s² actuation limit a command of 1 is 4 m/s².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccSetpoints {
    pub target_gap: f64,
    pub target_speed: f64,
    pub gap_gains: PidGains,
    pub relative_velocity_gains: PidGains,
    pub speed_gains: PidGains,
}

impl Default for AccSetpoints {
    fn default() -> Self {
        Self {
            target_gap: 20.0,
            target_speed: 60.0 / 3.6,
            gap_gains: PidGains::new(0.06, 0.0, 0.0),
            relative_velocity_gains: PidGains::new(0.3, 0.0, 0.0),
            speed_gains: PidGains::new(0.3, 0.0, 0.0),
        }
    }
}

impl AccSetpoints {
    pub fn validate(&self) -> Result<(), AutomationError> {
        let ok = self.target_gap.is_finite()
            && self.target_gap > 0.0
            && self.target_speed.is_finite()
            && self.target_speed > 0.0
            && self.gap_gains.is_finite()
            && self.relative_velocity_gains.is_finite()
            && self.speed_gains.is_finite();
        if ok {
            Ok(())
        } else {
            Err(AutomationError::InvalidSetpoints)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LkasParams {
    /// Steering command per radian of bearing error.
    pub gain: f64,
    /// Distance ahead of the ego to the lane-centre aim point used when no
    /// vehicle is being followed.
    pub lane_lookahead: f64,
}

impl Default for LkasParams {
    fn default() -> Self {
        Self {
            gain: 0.5,
            lane_lookahead: 25.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterventionThresholds {
    pub brake: f64,
    pub steer: f64,
}

impl Default for InterventionThresholds {
    fn default() -> Self {
        Self {
            brake: 0.1,
            steer: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AutomationConfig {
    pub acc: AccSetpoints,
    pub lkas: LkasParams,
    pub thresholds: InterventionThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisengageCause {
    Brake,
    Steer,
    ManualToggle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisengageRecord {
    pub time: f64,
    pub cause: DisengageCause,
}

/// Per-channel values for the three ACC error channels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Channels<T> {
    pub gap: T,
    pub relative_velocity: T,
    pub speed: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomationState {
    pub engaged: bool,
    pub integrals: Channels<f64>,
    pub last_error: Channels<Option<f64>>,
    pub disengage: Option<DisengageRecord>,
}

impl Default for AutomationState {
    fn default() -> Self {
        Self::engaged()
    }
}

impl AutomationState {
    pub fn engaged() -> Self {
        Self {
            engaged: true,
            integrals: Channels::default(),
            last_error: Channels::default(),
            disengage: None,
        }
    }

    /// Explicit re-engagement clears the disengage record and controller memory.
    pub fn reengage(&self) -> Self {
        Self::engaged()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutomationError {
    NonFinite(&'static str),
    NotEngaged,
    /// The followed vehicle sits on the ego reference point.
    CoincidentLeader,
    InvalidSetpoints,
}

impl fmt::Display for AutomationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutomationError::NonFinite(what) => write!(f, "non-finite {what}"),
            AutomationError::NotEngaged => f.write_str("automation is not engaged"),
            AutomationError::CoincidentLeader => {
                f.write_str("leader coincides with the ego position; bearing undefined")
            }
            AutomationError::InvalidSetpoints => f.write_str("invalid ACC setpoints"),
        }
    }
}

/// What ACC measures about the vehicle it follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadMeasurement {
    /// Bumper-to-bumper distance along the road.
    pub gap: f64,
    /// Leader speed minus ego speed, both along the road.
    pub relative_velocity: f64,
}

impl LeadMeasurement {
    pub fn between(ego: &VehicleState, ego_extent: &Extent, leader: &Actor) -> Self {
        Self {
            gap: longitudinal_gap(ego, ego_extent, leader),
            relative_velocity: leader.state.speed_along_road() - ego.speed_along_road(),
        }
    }
}

struct PidTerm {
    output: f64,
    integral: f64,
    error: f64,
}

/// One PID channel. The integral is clamped so that its contribution never
/// exceeds the output saturation range.
fn pid(gains: &PidGains, error: f64, integral: f64, last: Option<f64>, dt: f64) -> PidTerm {
    let mut i = integral + error * dt;
    if gains.ki != 0.0 {
        let bound = 1.0 / gains.ki.abs();
        i = i.clamp(-bound, bound);
    } else {
        i = 0.0;
    }
    let derivative = match last {
        Some(prev) if dt > 0.0 => (error - prev) / dt,
        _ => 0.0,
    };
    PidTerm {
        output: gains.kp * error + gains.ki * i + gains.kd * derivative,
        integral: i,
        error,
    }
}

/// Longitudinal ACC command.
pub fn acc_command(
    ego: &VehicleState,
    lead: Option<&LeadMeasurement>,
    state: &AutomationState,
    setpoints: &AccSetpoints,
    dt: f64,
) -> Result<(f64, AutomationState), AutomationError> {
    if !state.engaged {
        return Err(AutomationError::NotEngaged);
    }
    if !ego.is_finite() || !dt.is_finite() {
        return Err(AutomationError::NonFinite("ego state"));
    }
    let mut next = state.clone();
    let command = match lead {
        Some(m) => {
            if !m.gap.is_finite() || !m.relative_velocity.is_finite() {
                return Err(AutomationError::NonFinite("lead measurement"));
            }
            let gap = pid(
                &setpoints.gap_gains,
                m.gap - setpoints.target_gap,
                state.integrals.gap,
                state.last_error.gap,
                dt,
            );
            let rel = pid(
                &setpoints.relative_velocity_gains,
                m.relative_velocity,
                state.integrals.relative_velocity,
                state.last_error.relative_velocity,
                dt,
            );
            next.integrals.gap = gap.integral;
            next.integrals.relative_velocity = rel.integral;
            next.last_error.gap = Some(gap.error);
            next.last_error.relative_velocity = Some(rel.error);
            next.integrals.speed = 0.0;
            next.last_error.speed = None;
            gap.output + rel.output
        }
        None => {
            let speed = pid(
                &setpoints.speed_gains,
                setpoints.target_speed - ego.speed_along_road(),
                state.integrals.speed,
                state.last_error.speed,
                dt,
            );
            next.integrals.speed = speed.integral;
            next.last_error.speed = Some(speed.error);
            next.integrals.gap = 0.0;
            next.integrals.relative_velocity = 0.0;
            next.last_error.gap = None;
            next.last_error.relative_velocity = None;
            speed.output
        }
    };
    Ok((clamp_unit(command), next))
}

/// Signed angle from the ego heading to the ego→target bearing, in `(-pi, pi]`.
pub fn bearing_error(ego: &VehicleState, target_s: f64, target_d: f64) -> Option<f64> {
    let ds = target_s - ego.position.s;
    let dd = target_d - ego.position.d;
    if ds == 0.0 && dd == 0.0 {
        return None;
    }
    Some(math::wrap_angle(math::atan2(dd, ds) - ego.heading))
}

/// Lateral LKAS command.
pub fn lkas_command(
    ego: &VehicleState,
    leader: Option<&Actor>,
    params: &LkasParams,
    road: &RoadNetwork,
) -> Result<f64, AutomationError> {
    if !ego.is_finite() {
        return Err(AutomationError::NonFinite("ego state"));
    }
    let psi = match leader {
        Some(l) => {
            if !l.state.position.is_finite() {
                return Err(AutomationError::NonFinite("leader position"));
            }
            bearing_error(ego, l.state.position.s, l.state.position.d)
                .ok_or(AutomationError::CoincidentLeader)?
        }
        None => {
            let s = ego.position.s;
            let lane = road.ego_lane(s);
            let center = road.lane_center(lane, s).unwrap_or(ego.position.d);
            bearing_error(ego, s + params.lane_lookahead, center)
                .ok_or(AutomationError::NonFinite("lane aim point"))?
        }
    };
    Ok(clamp_unit(params.gain * psi))
}

/// Applies the intervention rule for one tick of driver input. Once a
/// disengage record exists the state is returned unchanged.
pub fn detect_intervention(
    driver: &ControlCommand,
    thresholds: &InterventionThresholds,
    state: &AutomationState,
    time: f64,
) -> AutomationState {
    if !state.engaged || state.disengage.is_some() {
        return state.clone();
    }
    // Brake is checked first, so a same-tick brake+steer reads as a brake.
    let cause = if driver.brake() >= thresholds.brake {
        Some(DisengageCause::Brake)
    } else if driver.steering.abs() >= thresholds.steer {
        Some(DisengageCause::Steer)
    } else {
        None
    };
    match cause {
        Some(cause) => AutomationState {
            engaged: false,
            disengage: Some(DisengageRecord { time, cause }),
            ..state.clone()
        },
        None => state.clone(),
    }
}

/// Manual toggle off (e.g. a disengage button).
pub fn manual_disengage(state: &AutomationState, time: f64) -> AutomationState {
    if state.disengage.is_some() {
        return state.clone();
    }
    AutomationState {
        engaged: false,
        disengage: Some(DisengageRecord {
            time,
            cause: DisengageCause::ManualToggle,
        }),
        ..state.clone()
    }
}

/// Chooses the actuated command: automation while engaged, driver otherwise.
pub fn arbitrate(
    automation: Option<ControlCommand>,
    driver: &ControlCommand,
    state: &AutomationState,
) -> ControlCommand {
    match (state.engaged, automation) {
        (true, Some(cmd)) => cmd,
        _ => ControlCommand::new(driver.longitudinal, driver.steering, CommandSource::Driver),
    }
}
