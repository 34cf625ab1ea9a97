use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::automation::{DisengageCause, DisengageRecord};
use crate::geometry::Vec2;
use crate::scenario::{FiredRecord, OnsetRecord, RiskKind};
use crate::sim::{ActorId, CollisionRecord, EventId};

fn participant(group: Group) -> Participant {
    Participant {
        id: "p01".to_string(),
        group,
        driving_experience_months: None,
        scenario_order: (Variant::I, Variant::Ii),
    }
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| alloc::format!("p{i:02}")).collect()
}

#[test]
fn group_one_sequence() {
    let seq = stage_sequence(&participant(Group::One));
    assert_eq!(
        seq,
        vec![
            Stage::QuestionnaireA,
            Stage::Briefing,
            Stage::QuestionnaireB { administration: 1 },
            Stage::HmiExplanation,
            Stage::Practice,
            Stage::Scenario {
                index: 1,
                variant: Variant::I
            },
            Stage::QuestionnaireB { administration: 2 },
            Stage::Scenario {
                index: 2,
                variant: Variant::Ii
            },
            Stage::QuestionnaireB { administration: 3 },
            Stage::QuestionnaireC,
            Stage::End,
        ]
    );
}

#[test]
fn group_two_skips_hmi_stages() {
    let seq = stage_sequence(&participant(Group::Two));
    assert!(!seq.contains(&Stage::HmiExplanation));
    assert!(!seq.contains(&Stage::QuestionnaireC));
    assert_eq!(seq.len(), 9);
    let b_count = seq
        .iter()
        .filter(|s| matches!(s, Stage::QuestionnaireB { .. }))
        .count();
    assert_eq!(b_count, usize::from(B_ADMINISTRATIONS));
}

#[test]
fn protocol_rejects_out_of_order() {
    let mut p = Protocol::new(participant(Group::Two));
    assert_eq!(
        p.complete(Stage::Briefing),
        Err(ExperimentError::OutOfOrder {
            expected: Stage::QuestionnaireA,
            got: Stage::Briefing
        })
    );
    assert_eq!(p.complete(Stage::QuestionnaireA), Ok(Stage::Briefing));
    assert_eq!(p.current(), Stage::Briefing);
}

#[test]
fn protocol_runs_to_end() {
    let part = participant(Group::One);
    let mut p = Protocol::new(part.clone());
    for stage in stage_sequence(&part).into_iter().take_while(|s| *s != Stage::End) {
        p.complete(stage).unwrap();
    }
    assert!(p.finished());
    assert_eq!(p.complete(Stage::End), Err(ExperimentError::SessionFinished));
}

#[test]
fn hmi_only_for_group_one_drives() {
    let mut g1 = Protocol::new(participant(Group::One));
    let mut g2 = Protocol::new(participant(Group::Two));
    assert!(!g1.hmi_enabled());
    for p in [&mut g1, &mut g2] {
        while !p.current().is_drive() {
            let cur = p.current();
            p.complete(cur).unwrap();
        }
    }
    assert!(g1.hmi_enabled());
    assert!(!g2.hmi_enabled());
}

#[test]
fn assignment_is_balanced_and_deterministic() {
    let a = assign_groups(&ids(9), 3).unwrap();
    assert_eq!(a, assign_groups(&ids(9), 3).unwrap());
    let g1 = a.iter().filter(|p| p.group == Group::One).count();
    assert_eq!(g1, 5);
    for group in [Group::One, Group::Two] {
        let firsts: Vec<Variant> = a
            .iter()
            .filter(|p| p.group == group)
            .map(|p| p.scenario_order.0)
            .collect();
        let i_first = firsts.iter().filter(|v| **v == Variant::I).count();
        assert!(i_first.abs_diff(firsts.len() - i_first) <= 1);
    }
    let order: Vec<&str> = a.iter().map(|p| p.id.as_str()).collect();
    let expected = ids(9);
    assert_eq!(order, expected.iter().map(String::as_str).collect::<Vec<_>>());
}

#[test]
fn assignment_errors() {
    assert_eq!(
        assign_groups(&ids(1), 0),
        Err(ExperimentError::TooFewParticipants(1))
    );
    let dup = vec!["a".to_string(), "a".to_string()];
    assert_eq!(
        assign_groups(&dup, 0),
        Err(ExperimentError::DuplicateParticipant("a".to_string()))
    );
}

#[test]
fn questionnaire_b_has_eighteen_likert_items() {
    let b = questionnaire_b();
    assert_eq!(b.items.len(), 18);
    assert_eq!(b.items[0].id, "Q1");
    assert_eq!(b.items[17].id, "Q18");
    assert!(b.items.iter().all(|i| i.kind == ItemKind::Likert5));
    assert!(b.validate(QuestionnaireId::B).is_ok());
    assert!(ExperimentConfig::default().validate().is_ok());
}

fn b_submission(values: &[i64]) -> Submission {
    Submission {
        questionnaire: QuestionnaireId::B,
        administration: 2,
        answers: values
            .iter()
            .enumerate()
            .map(|(k, v)| Answer {
                item: alloc::format!("Q{}", k + 1),
                value: AnswerValue::Integer(*v),
            })
            .collect(),
    }
}

#[test]
fn valid_submission_yields_responses() {
    let r = validate_submission(&questionnaire_b(), "p01", &b_submission(&[3; 18])).unwrap();
    assert_eq!(r.len(), 18);
    assert_eq!(r[4].item, "Q5");
    assert_eq!(r[4].administration, 2);
}

#[test]
fn submission_errors() {
    let def = questionnaire_b();
    let mut bad = [3; 18];
    bad[2] = 6;
    assert_eq!(
        validate_submission(&def, "p", &b_submission(&bad)),
        Err(ExperimentError::InvalidValue {
            item: "Q3".to_string()
        })
    );
    assert_eq!(
        validate_submission(&def, "p", &b_submission(&[3; 17])),
        Err(ExperimentError::MissingAnswer("Q18".to_string()))
    );
    let mut dup = b_submission(&[3; 18]);
    dup.answers.push(dup.answers[0].clone());
    assert_eq!(
        validate_submission(&def, "p", &dup),
        Err(ExperimentError::DuplicateAnswer("Q1".to_string()))
    );
    let mut wrong = b_submission(&[3; 18]);
    wrong.questionnaire = QuestionnaireId::A;
    assert_eq!(
        validate_submission(&def, "p", &wrong),
        Err(ExperimentError::WrongQuestionnaire)
    );
}

#[test]
fn questionnaire_a_requires_experience() {
    let def = questionnaire_a_default();
    let ok = Submission {
        questionnaire: QuestionnaireId::A,
        administration: 1,
        answers: vec![Answer {
            item: "driving_experience_months".to_string(),
            value: AnswerValue::Number(36.5),
        }],
    };
    assert!(validate_submission(&def, "p", &ok).unwrap().is_empty());
    let missing = Submission {
        answers: vec![],
        ..ok
    };
    assert!(matches!(
        validate_submission(&def, "p", &missing),
        Err(ExperimentError::MissingAnswer(_))
    ));
}

fn rec(seq: u64, event: LogEvent) -> LogRecord {
    LogRecord {
        seq,
        sim_time: None,
        wall_ms: None,
        event,
    }
}

fn drive_log(cause: DisengageCause, disengage_time: f64, collide: bool) -> Vec<LogRecord> {
    let e = EventId(10);
    let mut out = vec![
        rec(
            0,
            LogEvent::DriveStarted {
                stage: Stage::Scenario {
                    index: 1,
                    variant: Variant::I,
                },
                variant: Some(Variant::I),
                seed: 1,
                hmi: true,
            },
        ),
        rec(
            1,
            LogEvent::EventFired {
                record: FiredRecord {
                    event: e,
                    kind: RiskKind::ApparentEntry,
                    tick: 100,
                    time: 100.0 / 60.0,
                    actors: vec![ActorId(7)],
                },
            },
        ),
        rec(
            2,
            LogEvent::Onset {
                record: OnsetRecord {
                    event: e,
                    kind: RiskKind::ApparentEntry,
                    tick: 120,
                    time: 2.0,
                },
            },
        ),
        rec(
            3,
            LogEvent::Disengaged {
                tick: 0,
                record: DisengageRecord {
                    time: disengage_time,
                    cause,
                },
            },
        ),
    ];
    if collide {
        out.push(rec(
            4,
            LogEvent::Collision {
                record: CollisionRecord {
                    tick: 200,
                    time: 200.0 / 60.0,
                    ego_position: Vec2::new(0.0, 0.0),
                    other_actor: ActorId(7),
                },
            },
        ));
    }
    out.push(rec(
        5,
        LogEvent::DriveEnded {
            tick: 900,
            time: 15.0,
            reason: crate::scenario::EndReason::Resolved,
        },
    ));
    out
}

#[test]
fn tti_from_brake_after_onset() {
    let log = drive_log(DisengageCause::Brake, 2.75, false);
    let r = time_to_intervene(&log, EventId(10)).unwrap();
    assert_eq!(r.time_to_intervene, Some(0.75));
    assert!(!r.collided);
}

#[test]
fn tti_ignores_manual_toggle_and_early_disengage() {
    for (cause, t) in [(DisengageCause::ManualToggle, 2.5), (DisengageCause::Brake, 1.0)] {
        let log = drive_log(cause, t, true);
        let r = time_to_intervene(&log, EventId(10)).unwrap();
        assert_eq!(r.time_to_intervene, None);
        assert!(r.collided);
    }
    assert!(time_to_intervene(&drive_log(DisengageCause::Brake, 3.0, false), EventId(99)).is_none());
}

#[test]
fn summary_and_export() {
    let mut log = drive_log(DisengageCause::Steer, 2.5, false);
    let responses = validate_submission(&questionnaire_b(), "p01", &b_submission(&[4; 18])).unwrap();
    for (k, r) in responses.into_iter().enumerate() {
        log.push(rec(100 + k as u64, LogEvent::Response { response: r }));
    }
    let s = summarize_session(&participant(Group::One), &log);
    assert_eq!(s.interventions.len(), 1);
    assert_eq!(s.interventions[0].0, Variant::I);
    let d = export_analysis_dataset(&[s], 18);
    assert_eq!(d.responses.len(), 18);
    // Administrations 1 and 3 are absent for every item.
    assert_eq!(d.missing.len(), 36);
    let cells = d.cell_samples(18, 3);
    assert_eq!(cells[1].group1, vec![4.0]);
    assert!(cells[0].group1.is_empty());
    let tti = d.tti_samples(RiskKind::ApparentEntry);
    assert_eq!(tti.group1, vec![0.5]);
    assert!(tti.group2.is_empty());
}

#[test]
fn split_drives_finds_each_drive() {
    let mut log = drive_log(DisengageCause::Brake, 2.5, false);
    log.extend(drive_log(DisengageCause::Brake, 2.5, false));
    log.insert(0, rec(0, LogEvent::StageStarted { stage: Stage::Practice }));
    let drives = split_drives(&log);
    assert_eq!(drives.len(), 2);
    assert!(drives.iter().all(|d| d.records.len() == 5));
}

#[test]
fn log_event_tags() {
    let json = serde_json::to_string(&LogEvent::StageStarted {
        stage: Stage::QuestionnaireB { administration: 2 },
    })
    .unwrap();
    assert_eq!(
        json,
        r#"{"type":"stage_started","stage":{"stage":"questionnaire_b","administration":2}}"#
    );
}
