use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionnaireId {
    A,
    B,
    C,
}

impl QuestionnaireId {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionnaireId::A => "A",
            QuestionnaireId::B => "B",
            QuestionnaireId::C => "C",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemCategory {
    Recognition,
    Reaction,
    Trust,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ItemKind {
    /// 1 = strongly disagree, 5 = strongly agree.
    Likert5,
    Number { min: f64, max: f64 },
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionItem {
    pub id: String,
    pub text: String,
    pub kind: ItemKind,
    #[serde(default)]
    pub category: Option<ItemCategory>,
    #[serde(default = "required_default")]
    pub required: bool,
}

fn required_default() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireDef {
    pub id: QuestionnaireId,
    pub title: String,
    pub items: Vec<QuestionItem>,
    /// False for forms whose content is a stand-in.
    #[serde(default)]
    pub canonical: bool,
}

impl QuestionnaireDef {
    pub fn item(&self, id: &str) -> Option<&QuestionItem> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn validate(&self, expected: QuestionnaireId) -> Result<(), ExperimentError> {
        if self.id != expected {
            return Err(ExperimentError::InvalidDefinition("questionnaire id mismatch"));
        }
        if self.items.is_empty() {
            return Err(ExperimentError::InvalidDefinition("questionnaire has no items"));
        }
        for (i, item) in self.items.iter().enumerate() {
            if self.items[..i].iter().any(|o| o.id == item.id) {
                return Err(ExperimentError::InvalidDefinition("duplicate item id"));
            }
            if let ItemKind::Number { min, max } = item.kind {
                if !(min.is_finite() && max.is_finite() && min <= max) {
                    return Err(ExperimentError::InvalidDefinition("bad numeric range"));
                }
            }
        }
        match expected {
            QuestionnaireId::A => {
                let ok = self
                    .item("driving_experience_months")
                    .is_some_and(|i| i.required && matches!(i.kind, ItemKind::Number { .. }));
                if !ok {
                    return Err(ExperimentError::InvalidDefinition(
                        "questionnaire A needs a required numeric driving_experience_months item",
                    ));
                }
            }
            QuestionnaireId::B => {
                if self.items.len() != QUESTIONNAIRE_B_ITEMS.len() {
                    return Err(ExperimentError::InvalidDefinition(
                        "questionnaire B must have 18 items",
                    ));
                }
                for (k, item) in self.items.iter().enumerate() {
                    let want = match k / 6 {
                        0 => ItemCategory::Recognition,
                        1 => ItemCategory::Reaction,
                        _ => ItemCategory::Trust,
                    };
                    if item.kind != ItemKind::Likert5 || item.category != Some(want) {
                        return Err(ExperimentError::InvalidDefinition(
                            "questionnaire B items must be 5-point, in three blocks of six",
                        ));
                    }
                }
            }
            QuestionnaireId::C => {
                if self.items.iter().any(|i| i.kind != ItemKind::Likert5) {
                    return Err(ExperimentError::InvalidDefinition(
                        "questionnaire C items must be 5-point",
                    ));
                }
            }
        }
        Ok(())
    }
}

pub const QUESTIONNAIRE_B_ITEMS: [&str; 18] = [
    "The system can recognize all vehicles",
    "The system can recognize motorcycle",
    "The system can recognize objects other than vehicles",
    "The system can recognize vehicles from non-priority road",
    "The system can recognize pedestrians",
    "The system can recognize bicycles",
    "The system can work safely without driver intervention",
    "The system can work safely for vehicles suddenly entering from the non-priority road side",
    "The system can work safely for pylons",
    "The system can work safely for pedestrians",
    "The system can work safely for bicycles",
    "The system can work safely for motorcycles",
    "There is no problem to look away from the surrounding traffic environment while the system is operating",
    "There is no problem to be more relaxed than manual operation while the system is operating",
    "There is no problem to use the smartphone while the system is operating",
    "There is no problem to get sleepy while the system is operating",
    "The system is reliable",
    "I would like to use the system on a daily basis",
];

fn likert(id: String, text: &str, category: Option<ItemCategory>) -> QuestionItem {
    QuestionItem {
        id,
        text: text.to_string(),
        kind: ItemKind::Likert5,
        category,
        required: true,
    }
}

/// The 18-item system-understanding questionnaire, Q1 to Q18.
pub fn questionnaire_b() -> QuestionnaireDef {
    let items = QUESTIONNAIRE_B_ITEMS
        .iter()
        .enumerate()
        .map(|(k, text)| {
            let category = match k / 6 {
                0 => ItemCategory::Recognition,
                1 => ItemCategory::Reaction,
                _ => ItemCategory::Trust,
            };
            likert(alloc::format!("Q{}", k + 1), text, Some(category))
        })
        .collect();
    QuestionnaireDef {
        id: QuestionnaireId::B,
        title: "Understanding of the system".to_string(),
        items,
        canonical: true,
    }
}

pub fn questionnaire_a_default() -> QuestionnaireDef {
    QuestionnaireDef {
        id: QuestionnaireId::A,
        title: "Basic information".to_string(),
        items: alloc::vec![
            QuestionItem {
                id: "driving_experience_months".to_string(),
                text: "How many months of driving experience do you have?".to_string(),
                kind: ItemKind::Number {
                    min: 0.0,
                    max: 1200.0,
                },
                category: None,
                required: true,
            },
            QuestionItem {
                id: "age_years".to_string(),
                text: "Age in years".to_string(),
                kind: ItemKind::Number {
                    min: 16.0,
                    max: 120.0,
                },
                category: None,
                required: false,
            },
        ],
        canonical: false,
    }
}

/// Placeholder items; replace through the config for a real study.
pub fn questionnaire_c_default() -> QuestionnaireDef {
    let texts = [
        "[placeholder] The bounding boxes were easy to understand",
        "[placeholder] It was clear which objects the system recognized",
        "[placeholder] The display did not distract me from driving",
        "[placeholder] I would like to keep using the display",
    ];
    QuestionnaireDef {
        id: QuestionnaireId::C,
        title: "Ease of understanding the HMI (placeholder)".to_string(),
        items: texts
            .iter()
            .enumerate()
            .map(|(k, t)| likert(alloc::format!("C{}", k + 1), t, None))
            .collect(),
        canonical: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerValue {
    Integer(i64),
    Number(f64),
    Text(String),
}

impl AnswerValue {
    fn as_f64(&self) -> Option<f64> {
        match self {
            AnswerValue::Integer(i) => Some(*i as f64),
            AnswerValue::Number(x) => Some(*x),
            AnswerValue::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub item: String,
    pub value: AnswerValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub questionnaire: QuestionnaireId,
    pub administration: u8,
    pub answers: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertResponse {
    pub participant: String,
    pub questionnaire: QuestionnaireId,
    pub administration: u8,
    pub item: String,
    pub value: u8,
}

/// Checks a submission against its definition and returns its 5-point
/// answers as responses.
pub fn validate_submission(
    def: &QuestionnaireDef,
    participant: &str,
    submission: &Submission,
) -> Result<Vec<LikertResponse>, ExperimentError> {
    if submission.questionnaire != def.id {
        return Err(ExperimentError::WrongQuestionnaire);
    }
    let mut out = Vec::new();
    for (i, answer) in submission.answers.iter().enumerate() {
        if submission.answers[..i].iter().any(|a| a.item == answer.item) {
            return Err(ExperimentError::DuplicateAnswer(answer.item.clone()));
        }
        let item = def
            .item(&answer.item)
            .ok_or_else(|| ExperimentError::UnknownItem(answer.item.clone()))?;
        let invalid = || ExperimentError::InvalidValue {
            item: answer.item.clone(),
        };
        match item.kind {
            ItemKind::Likert5 => match answer.value {
                AnswerValue::Integer(v @ 1..=5) => out.push(LikertResponse {
                    participant: participant.to_string(),
                    questionnaire: def.id,
                    administration: submission.administration,
                    item: item.id.clone(),
                    value: v as u8,
                }),
                _ => return Err(invalid()),
            },
            ItemKind::Number { min, max } => {
                let v = answer.value.as_f64().ok_or_else(invalid)?;
                if !(v.is_finite() && v >= min && v <= max) {
                    return Err(invalid());
                }
            }
            ItemKind::Text => {
                if !matches!(answer.value, AnswerValue::Text(_)) {
                    return Err(invalid());
                }
            }
        }
    }
    for item in def.items.iter().filter(|i| i.required) {
        if !submission.answers.iter().any(|a| a.item == item.id) {
            return Err(ExperimentError::MissingAnswer(item.id.clone()));
        }
    }
    Ok(out)
}
