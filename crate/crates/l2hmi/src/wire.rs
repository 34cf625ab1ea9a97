//! WebSocket message schema. Every message is one JSON text frame:
//!
//! ```json
//! {"seq": 12, "sim_time": 3.25, "kind": "input", "longitudinal": -1.0, "steering": 0.0}
//! ```
//!
//! `seq` increases strictly per direction. `sim_time` is the drive time the
//! message refers to, absent outside drives.
//!
//! | kind            | direction | payload                                           |
//! |-----------------|-----------|---------------------------------------------------|
//! | `hello`         | both      | `version`; server adds `participant`, `group`     |
//! | `stage`         | both      | `stage`; server adds `hmi`. From the client it marks the stage completed |
//! | `frame`         | server    | `tick`, `geometry`, `ego_speed`, `engaged`        |
//! | `detections`    | server    | `frame` (group 1 only)                            |
//! | `input`         | client    | `longitudinal`, `steering`, `toggle`, `client_ms` |
//! | `questionnaire` | server    | `definition`, `administration`, `error`           |
//! | `response`      | client    | `submission`                                      |
//! | `end`           | both      | `reason`                                          |

use l2hmi_core::experiment::{Group, QuestionnaireDef, Stage, Submission};
use l2hmi_core::perception::{DetectionFrame, FrameGeometry};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    Hello {
        version: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        participant: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<Group>,
    },
    Stage {
        stage: Stage,
        #[serde(default)]
        hmi: bool,
    },
    Frame {
        tick: u64,
        geometry: FrameGeometry,
        ego_speed: f64,
        engaged: bool,
    },
    Detections {
        frame: DetectionFrame,
    },
    Input {
        longitudinal: f64,
        steering: f64,
        /// Driver pressed the automation on/off switch.
        #[serde(default)]
        toggle: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ms: Option<u64>,
    },
    Questionnaire {
        definition: QuestionnaireDef,
        administration: u8,
        /// Why the previous submission was refused.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Response {
        submission: Submission,
    },
    End {
        reason: String,
    },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::Stage { .. } => "stage",
            Message::Frame { .. } => "frame",
            Message::Detections { .. } => "detections",
            Message::Input { .. } => "input",
            Message::Questionnaire { .. } => "questionnaire",
            Message::Response { .. } => "response",
            Message::End { .. } => "end",
        }
    }

    /// Frames and detections may be dropped when the client lags.
    pub fn droppable(&self) -> bool {
        matches!(self, Message::Frame { .. } | Message::Detections { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_time: Option<f64>,
    #[serde(flatten)]
    pub message: Message,
}

impl Envelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire messages serialise")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if let Message::Input {
            longitudinal,
            steering,
            ..
        } = env.message
        {
            if !(longitudinal.is_finite() && steering.is_finite()) {
                return Err("input values must be finite".into());
            }
        }
        Ok(env)
    }
}

/// Stamps outgoing messages with increasing sequence numbers.
#[derive(Debug, Default)]
pub struct Sequencer {
    next: u64,
}

impl Sequencer {
    pub fn wrap(&mut self, sim_time: Option<f64>, message: Message) -> Envelope {
        let seq = self.next;
        self.next += 1;
        Envelope {
            seq,
            sim_time,
            message,
        }
    }
}
