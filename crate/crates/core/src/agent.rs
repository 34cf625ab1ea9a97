//! Scripted stand-in drivers for headless batch runs.
//!
//! An agent reacts only to apparent-risk onsets: after `reaction_delay` it
//! brakes with `brake_magnitude` and holds the brake for the rest of the
//! drive. With probability `miss_probability` it never reacts to a given
//! onset. Questionnaire answers are drawn uniformly from the seeded RNG.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automation::{CommandSource, ControlCommand};
use crate::experiment::{Answer, AnswerValue, ItemKind, QuestionnaireDef, Submission};
use crate::math;
use crate::scenario::OnsetRecord;
use crate::sim::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentSpec {
    pub reaction_delay: f64,
    pub brake_magnitude: f64,
    pub miss_probability: f64,
    pub seed: u64,
}

impl Default for AgentSpec {
    fn default() -> Self {
        Self {
            reaction_delay: 0.8,
            brake_magnitude: 1.0,
            miss_probability: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentError {
    NegativeDelay,
    BrakeOutOfRange,
    ProbabilityOutOfRange,
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::NegativeDelay => f.write_str("reaction_delay must be a finite value >= 0"),
            AgentError::BrakeOutOfRange => f.write_str("brake_magnitude must be in (0, 1]"),
            AgentError::ProbabilityOutOfRange => f.write_str("miss_probability must be in [0, 1]"),
        }
    }
}

impl AgentSpec {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.reaction_delay.is_finite() && self.reaction_delay >= 0.0) {
            return Err(AgentError::NegativeDelay);
        }
        if !(self.brake_magnitude > 0.0 && self.brake_magnitude <= 1.0) {
            return Err(AgentError::BrakeOutOfRange);
        }
        if !(0.0..=1.0).contains(&self.miss_probability) {
            return Err(AgentError::ProbabilityOutOfRange);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    spec: AgentSpec,
    rng: ChaCha8Rng,
    brake_from: Option<u64>,
}

impl ScriptedAgent {
    pub fn new(spec: AgentSpec) -> Result<Self, AgentError> {
        spec.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            spec,
            brake_from: None,
        })
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    /// Forgets any pending reaction; call at the start of each drive.
    pub fn reset_drive(&mut self) {
        self.brake_from = None;
    }

    /// Schedules a reaction to an apparent-risk onset.
    pub fn observe_onset(&mut self, onset: &OnsetRecord, sim: &SimConfig) {
        if !onset.kind.is_apparent() {
            return;
        }
        let roll: f64 = self.rng.random();
        if roll < self.spec.miss_probability {
            return;
        }
        let delay = math::round(self.spec.reaction_delay * f64::from(sim.tick_rate_hz)) as u64;
        let at = onset.tick + delay;
        self.brake_from = Some(self.brake_from.map_or(at, |t| t.min(at)));
    }

    /// Driver command for `tick`.
    pub fn input(&self, tick: u64) -> ControlCommand {
        match self.brake_from {
            Some(t) if tick >= t => {
                ControlCommand::new(-self.spec.brake_magnitude, 0.0, CommandSource::Driver)
            }
            _ => ControlCommand::idle(CommandSource::Driver),
        }
    }

    /// Fills in every item of `def`.
    pub fn answer(&mut self, def: &QuestionnaireDef, administration: u8) -> Submission {
        let answers: Vec<Answer> = def
            .items
            .iter()
            .map(|item| {
                let value = match item.kind {
                    ItemKind::Likert5 => AnswerValue::Integer(self.rng.random_range(1..=5)),
                    ItemKind::Number { min, max } => {
                        let lo = math::ceil(min.max(0.0)) as i64;
                        let hi = (math::floor(max) as i64).clamp(lo, lo + 120);
                        AnswerValue::Integer(self.rng.random_range(lo..=hi))
                    }
                    ItemKind::Text => AnswerValue::Text(String::new()),
                };
                Answer {
                    item: item.id.clone(),
                    value,
                }
            })
            .collect();
        Submission {
            questionnaire: def.id,
            administration,
            answers,
        }
    }
}
