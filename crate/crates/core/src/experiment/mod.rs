//! Study protocol: group assignment, stage sequencing, questionnaires, the
//! session log model and metric extraction.

mod log;
mod metrics;
mod questionnaire;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use log::{split_drives, DriveSlice, LogEvent, LogRecord, Snapshot, ActorSnapshot};
pub use metrics::{
    export_analysis_dataset, summarize_session, time_to_intervene, AnalysisDataset,
    InterventionRecord, MissingResponse, ResponseRow, SessionSummary, TtiRow,
};
pub use questionnaire::{
    questionnaire_a_default, questionnaire_b, questionnaire_c_default, validate_submission, Answer,
    AnswerValue, ItemCategory, ItemKind, LikertResponse, QuestionItem, QuestionnaireDef,
    QuestionnaireId, Submission, QUESTIONNAIRE_B_ITEMS,
};

use crate::scenario::Variant;

/// Number of Questionnaire B administrations per participant.
pub const B_ADMINISTRATIONS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Group {
    /// Uses the recognition overlay.
    One,
    /// Drives without it.
    Two,
}

impl Group {
    pub fn number(self) -> u8 {
        match self {
            Group::One => 1,
            Group::Two => 2,
        }
    }

    pub fn hmi(self) -> bool {
        self == Group::One
    }
}

impl From<Group> for u8 {
    fn from(g: Group) -> u8 {
        g.number()
    }
}

impl TryFrom<u8> for Group {
    type Error = ExperimentError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Group::One),
            2 => Ok(Group::Two),
            other => Err(ExperimentError::InvalidGroup(other)),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub group: Group,
    pub driving_experience_months: Option<f64>,
    pub scenario_order: (Variant, Variant),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    TooFewParticipants(usize),
    DuplicateParticipant(String),
    InvalidGroup(u8),
    OutOfOrder { expected: Stage, got: Stage },
    SessionFinished,
    UnknownItem(String),
    DuplicateAnswer(String),
    MissingAnswer(String),
    InvalidValue { item: String },
    WrongQuestionnaire,
    InvalidDefinition(&'static str),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::TooFewParticipants(n) => {
                write!(f, "group assignment needs at least 2 participants, got {n}")
            }
            ExperimentError::DuplicateParticipant(id) => write!(f, "duplicate participant id {id:?}"),
            ExperimentError::InvalidGroup(g) => write!(f, "group must be 1 or 2, got {g}"),
            ExperimentError::OutOfOrder { expected, got } => {
                write!(f, "stage {got} completed while {expected} is current")
            }
            ExperimentError::SessionFinished => f.write_str("session already ended"),
            ExperimentError::UnknownItem(id) => write!(f, "unknown questionnaire item {id:?}"),
            ExperimentError::DuplicateAnswer(id) => write!(f, "item {id:?} answered twice"),
            ExperimentError::MissingAnswer(id) => write!(f, "item {id:?} not answered"),
            ExperimentError::InvalidValue { item } => write!(f, "invalid value for item {item:?}"),
            ExperimentError::WrongQuestionnaire => {
                f.write_str("submission does not match the current questionnaire")
            }
            ExperimentError::InvalidDefinition(what) => write!(f, "invalid questionnaire: {what}"),
        }
    }
}

/// Seeded balanced split into two groups with scenario order alternating
/// within each group. Output follows the input order.
pub fn assign_groups(ids: &[String], seed: u64) -> Result<Vec<Participant>, ExperimentError> {
    if ids.len() < 2 {
        return Err(ExperimentError::TooFewParticipants(ids.len()));
    }
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(ExperimentError::DuplicateParticipant(id.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..ids.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let group1_size = ids.len().div_ceil(2);
    let mut out: Vec<Option<Participant>> = ids.iter().map(|_| None).collect();
    let (mut k1, mut k2) = (0usize, 0usize);
    for (pos, &idx) in order.iter().enumerate() {
        let (group, k) = if pos < group1_size {
            k1 += 1;
            (Group::One, k1 - 1)
        } else {
            k2 += 1;
            (Group::Two, k2 - 1)
        };
        let scenario_order = if k % 2 == 0 {
            (Variant::I, Variant::Ii)
        } else {
            (Variant::Ii, Variant::I)
        };
        out[idx] = Some(Participant {
            id: ids[idx].clone(),
            group,
            driving_experience_months: None,
            scenario_order,
        });
    }
    Ok(out.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    QuestionnaireA,
    Briefing,
    QuestionnaireB { administration: u8 },
    HmiExplanation,
    Practice,
    /// `index` is 1 for the first scenario drive and 2 for the second.
    Scenario { index: u8, variant: Variant },
    QuestionnaireC,
    End,
}

impl Stage {
    pub fn is_drive(self) -> bool {
        matches!(self, Stage::Practice | Stage::Scenario { .. })
    }

    pub fn questionnaire(self) -> Option<(QuestionnaireId, u8)> {
        match self {
            Stage::QuestionnaireA => Some((QuestionnaireId::A, 1)),
            Stage::QuestionnaireB { administration } => Some((QuestionnaireId::B, administration)),
            Stage::QuestionnaireC => Some((QuestionnaireId::C, 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::QuestionnaireA => f.write_str("questionnaire A"),
            Stage::Briefing => f.write_str("briefing"),
            Stage::QuestionnaireB { administration } => {
                write!(f, "questionnaire B #{administration}")
            }
            Stage::HmiExplanation => f.write_str("HMI explanation"),
            Stage::Practice => f.write_str("practice drive"),
            Stage::Scenario { index, variant } => write!(f, "scenario {index} ({variant})"),
            Stage::QuestionnaireC => f.write_str("questionnaire C"),
            Stage::End => f.write_str("end"),
        }
    }
}

/// Successor of `current` for `participant`; `None` after [`Stage::End`].
pub fn next_stage(current: Stage, participant: &Participant) -> Option<Stage> {
    let group1 = participant.group == Group::One;
    let (first, second) = participant.scenario_order;
    Some(match current {
        Stage::QuestionnaireA => Stage::Briefing,
        Stage::Briefing => Stage::QuestionnaireB { administration: 1 },
        Stage::QuestionnaireB { administration: 1 } if group1 => Stage::HmiExplanation,
        Stage::QuestionnaireB { administration: 1 } => Stage::Practice,
        Stage::HmiExplanation => Stage::Practice,
        Stage::Practice => Stage::Scenario {
            index: 1,
            variant: first,
        },
        Stage::Scenario { index: 1, .. } => Stage::QuestionnaireB { administration: 2 },
        Stage::QuestionnaireB { administration: 2 } => Stage::Scenario {
            index: 2,
            variant: second,
        },
        Stage::Scenario { .. } => Stage::QuestionnaireB { administration: 3 },
        Stage::QuestionnaireB { .. } if group1 => Stage::QuestionnaireC,
        Stage::QuestionnaireB { .. } => Stage::End,
        Stage::QuestionnaireC => Stage::End,
        Stage::End => return None,
    })
}

/// Full stage sequence for `participant`, starting at Questionnaire A.
pub fn stage_sequence(participant: &Participant) -> Vec<Stage> {
    let mut out = alloc::vec![Stage::QuestionnaireA];
    let mut cur = Stage::QuestionnaireA;
    while let Some(next) = next_stage(cur, participant) {
        out.push(next);
        cur = next;
    }
    out
}

/// Where a participant is in the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    participant: Participant,
    current: Stage,
}

impl Protocol {
    pub fn new(participant: Participant) -> Self {
        Self {
            participant,
            current: Stage::QuestionnaireA,
        }
    }

    pub fn participant(&self) -> &Participant {
        &self.participant
    }

    pub fn current(&self) -> Stage {
        self.current
    }

    pub fn finished(&self) -> bool {
        self.current == Stage::End
    }

    /// Overlay is shown to group 1 during every drive.
    pub fn hmi_enabled(&self) -> bool {
        self.participant.group.hmi() && self.current.is_drive()
    }

    pub fn set_driving_experience(&mut self, months: f64) {
        self.participant.driving_experience_months = Some(months);
    }

    /// Marks `stage` complete and moves on.
    pub fn complete(&mut self, stage: Stage) -> Result<Stage, ExperimentError> {
        if self.current == Stage::End {
            return Err(ExperimentError::SessionFinished);
        }
        if stage != self.current {
            return Err(ExperimentError::OutOfOrder {
                expected: self.current,
                got: stage,
            });
        }
        let next = next_stage(self.current, &self.participant).unwrap_or(Stage::End);
        self.current = next;
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub questionnaire_a: QuestionnaireDef,
    pub questionnaire_b: QuestionnaireDef,
    pub questionnaire_c: QuestionnaireDef,
    pub group_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            questionnaire_a: questionnaire_a_default(),
            questionnaire_b: questionnaire_b(),
            questionnaire_c: questionnaire_c_default(),
            group_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn questionnaire(&self, id: QuestionnaireId) -> &QuestionnaireDef {
        match id {
            QuestionnaireId::A => &self.questionnaire_a,
            QuestionnaireId::B => &self.questionnaire_b,
            QuestionnaireId::C => &self.questionnaire_c,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.questionnaire_a.validate(QuestionnaireId::A)?;
        self.questionnaire_b.validate(QuestionnaireId::B)?;
        self.questionnaire_c.validate(QuestionnaireId::C)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
