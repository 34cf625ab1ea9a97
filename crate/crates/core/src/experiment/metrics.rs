use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::log::{split_drives, LogEvent, LogRecord};
use super::{Group, LikertResponse, Participant, QuestionnaireId, B_ADMINISTRATIONS};
use crate::automation::DisengageCause;
use crate::scenario::{RiskKind, Variant};
use crate::sim::{ActorId, EventId};
use crate::stats::CellSamples;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterventionRecord {
    pub event: EventId,
    pub kind: RiskKind,
    pub onset: f64,
    pub first_intervention: Option<f64>,
    pub time_to_intervene: Option<f64>,
    pub collided: bool,
}

/// Reaction to `event` within one drive's records; `None` if it never had
/// an onset.
pub fn time_to_intervene(records: &[LogRecord], event: EventId) -> Option<InterventionRecord> {
    let onset = records.iter().find_map(|r| match &r.event {
        LogEvent::Onset { record } if record.event == event => Some(*record),
        _ => None,
    })?;
    let actors: Vec<ActorId> = records
        .iter()
        .find_map(|r| match &r.event {
            LogEvent::EventFired { record } if record.event == event => Some(record.actors.clone()),
            _ => None,
        })
        .unwrap_or_default();
    let first_intervention = records.iter().find_map(|r| match &r.event {
        LogEvent::Disengaged { record, .. }
            if record.cause != DisengageCause::ManualToggle && record.time >= onset.time =>
        {
            Some(record.time)
        }
        _ => None,
    });
    let collided = records.iter().any(|r| match &r.event {
        LogEvent::Collision { record } => actors.contains(&record.other_actor),
        _ => false,
    });
    Some(InterventionRecord {
        event,
        kind: onset.kind,
        onset: onset.time,
        first_intervention,
        time_to_intervene: first_intervention.map(|t| t - onset.time),
        collided,
    })
}

fn apparent_intervention(records: &[LogRecord]) -> Option<InterventionRecord> {
    let event = records.iter().find_map(|r| match &r.event {
        LogEvent::Onset { record } if record.kind.is_apparent() => Some(record.event),
        _ => None,
    })?;
    time_to_intervene(records, event)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub participant: Participant,
    pub responses: Vec<LikertResponse>,
    pub interventions: Vec<(Variant, InterventionRecord)>,
}

pub fn summarize_session(participant: &Participant, records: &[LogRecord]) -> SessionSummary {
    let responses = records
        .iter()
        .filter_map(|r| match &r.event {
            LogEvent::Response { response } => Some(response.clone()),
            _ => None,
        })
        .collect();
    let interventions = split_drives(records)
        .into_iter()
        .filter_map(|d| Some((d.variant?, apparent_intervention(d.records)?)))
        .collect();
    SessionSummary {
        participant: participant.clone(),
        responses,
        interventions,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub participant: String,
    pub group: Group,
    pub item: u8,
    pub administration: u8,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtiRow {
    pub participant: String,
    pub group: Group,
    pub event_kind: RiskKind,
    pub onset: f64,
    pub tti: Option<f64>,
    pub collided: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingResponse {
    pub participant: String,
    pub item: u8,
    pub administration: u8,
}

/// Per-item, per-administration responses and per-risk reaction times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDataset {
    pub responses: Vec<ResponseRow>,
    pub tti: Vec<TtiRow>,
    pub missing: Vec<MissingResponse>,
}

fn b_item_number(id: &str) -> Option<u8> {
    id.strip_prefix('Q')?.parse().ok()
}

pub fn export_analysis_dataset(sessions: &[SessionSummary], items: u8) -> AnalysisDataset {
    let mut out = AnalysisDataset::default();
    for s in sessions {
        let p = &s.participant;
        for r in s.responses.iter().filter(|r| r.questionnaire == QuestionnaireId::B) {
            if let Some(item) = b_item_number(&r.item) {
                out.responses.push(ResponseRow {
                    participant: p.id.clone(),
                    group: p.group,
                    item,
                    administration: r.administration,
                    value: r.value,
                });
            }
        }
        for item in 1..=items {
            for administration in 1..=B_ADMINISTRATIONS {
                let present = out.responses.iter().any(|r| {
                    r.participant == p.id && r.item == item && r.administration == administration
                });
                if !present {
                    out.missing.push(MissingResponse {
                        participant: p.id.clone(),
                        item,
                        administration,
                    });
                }
            }
        }
        for (_, rec) in &s.interventions {
            out.tti.push(TtiRow {
                participant: p.id.clone(),
                group: p.group,
                event_kind: rec.kind,
                onset: rec.onset,
                tti: rec.time_to_intervene,
                collided: rec.collided,
            });
        }
    }
    out
}

impl AnalysisDataset {
    /// Row-major `items x administrations` group samples for the p-value table.
    pub fn cell_samples(&self, items: u8, administrations: u8) -> Vec<CellSamples> {
        let mut cells = Vec::with_capacity(usize::from(items) * usize::from(administrations));
        for item in 1..=items {
            for administration in 1..=administrations {
                let mut cell = CellSamples::default();
                for r in self
                    .responses
                    .iter()
                    .filter(|r| r.item == item && r.administration == administration)
                {
                    match r.group {
                        Group::One => cell.group1.push(f64::from(r.value)),
                        Group::Two => cell.group2.push(f64::from(r.value)),
                    }
                }
                cells.push(cell);
            }
        }
        cells
    }

    /// Time-to-intervene values for `kind`, split by group. Rows without an
    /// intervention are left out.
    pub fn tti_samples(&self, kind: RiskKind) -> CellSamples {
        let mut cell = CellSamples::default();
        for r in self.tti.iter().filter(|r| r.event_kind == kind) {
            if let Some(t) = r.tti {
                match r.group {
                    Group::One => cell.group1.push(t),
                    Group::Two => cell.group2.push(t),
                }
            }
        }
        cell
    }
}
