use l2hmi::config::{config_hash, parse, to_toml};
use l2hmi::logfile::{read_log, Integrity, LogHeader, LogWriter, RunMode};
use l2hmi::wire::{Envelope, Message, Sequencer, PROTOCOL_VERSION};
use l2hmi::{Error, EXIT_CONFIG};
use l2hmi_core::automation::{CommandSource, ControlCommand};
use l2hmi_core::experiment::{
    assign_groups, questionnaire_b, Group, LogEvent, LogRecord, Participant, Stage,
};
use l2hmi_core::perception::{frame_geometry, DetectionFrame};
use l2hmi_core::scenario::Variant;
use l2hmi_core::Config;

fn participant() -> Participant {
    assign_groups(&["a".to_string(), "b".to_string()], 0).unwrap().remove(0)
}

#[test]
fn default_config_round_trips_through_toml() {
    let cfg = Config::default();
    let text = to_toml(&cfg).unwrap();
    for section in ["[sim]", "[automation.acc]", "[perception.camera]", "[scenario]", "[experiment]", "[stats]", "[session]"] {
        assert!(text.contains(section), "{section} missing");
    }
    let back = parse(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(config_hash(&back), config_hash(&cfg));
}

#[test]
fn partial_config_takes_defaults() {
    let cfg = parse("[automation.acc]\ntarget_gap = 25.0\n").unwrap();
    assert_eq!(cfg.automation.acc.target_gap, 25.0);
    assert_eq!(cfg.sim, Config::default().sim);
    assert_ne!(config_hash(&cfg), config_hash(&Config::default()));
}

#[test]
fn invalid_config_is_a_config_error() {
    for text in [
        "[sim]\ntick_rate_hz = 0\n",
        "[stats]\nalpha = 1.5\n",
        "[perception.camera]\nfocal_length = -1.0\n",
        "[scenario]\nintersection_count = 3\n",
        "[session]\ncheckpoint_interval = 0\n",
        "[sim\n",
        "[sim]\ntick_rate_hz = \"fast\"\n",
    ] {
        let err = parse(text).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{text}: {err}");
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }
}

fn sample_records() -> Vec<LogRecord> {
    let events = [
        LogEvent::StageStarted { stage: Stage::Practice },
        LogEvent::Input {
            tick: 3,
            command: ControlCommand::new(-0.1 / 3.0, 0.2, CommandSource::Driver),
            received_ms: Some(40),
        },
        LogEvent::Detections {
            frame: DetectionFrame {
                tick: 4,
                time: 4.0 / 60.0,
                detections: vec![],
            },
        },
        LogEvent::Aborted { reason: "test".into() },
    ];
    events
        .into_iter()
        .enumerate()
        .map(|(i, event)| LogRecord {
            seq: i as u64,
            sim_time: Some(i as f64 / 7.0),
            wall_ms: Some(1000 + i as u64),
            event,
        })
        .collect()
}

#[test]
fn log_round_trips_and_seals() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("nested/dir/p.jsonl");
    let cfg = Config::default();
    let header = LogHeader::new(RunMode::Live, participant(), 5, &cfg);
    let mut w = LogWriter::create(&path, &header).unwrap();
    let records = sample_records();
    for r in &records {
        w.record(r).unwrap();
    }
    assert_eq!(w.records(), 4);
    w.finish().unwrap();

    let log = read_log(&path).unwrap();
    assert_eq!(log.header, header);
    assert_eq!(log.records, records);
    assert_eq!(log.integrity, Integrity::Sealed);
    assert_eq!(log.trailer.unwrap().records, 4);
}

#[test]
fn log_integrity_failures_are_distinguished() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("p.jsonl");
    let header = LogHeader::new(RunMode::Headless, participant(), 5, &Config::default());
    let mut w = LogWriter::create(&path, &header).unwrap();
    for r in sample_records() {
        w.record(&r).unwrap();
    }
    w.finish().unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();

    let unsealed = tmp.path().join("unsealed.jsonl");
    std::fs::write(&unsealed, lines[..lines.len() - 1].join("\n")).unwrap();
    assert_eq!(read_log(&unsealed).unwrap().integrity, Integrity::Unsealed);

    let dropped = tmp.path().join("dropped.jsonl");
    let mut l = lines.clone();
    l.remove(2);
    std::fs::write(&dropped, l.join("\n")).unwrap();
    assert!(matches!(
        read_log(&dropped).unwrap().integrity,
        Integrity::CountMismatch { expected: 4, found: 3 }
    ));

    let edited = tmp.path().join("edited.jsonl");
    std::fs::write(&edited, text.replace("\"reason\":\"test\"", "\"reason\":\"tset\"")).unwrap();
    assert_eq!(read_log(&edited).unwrap().integrity, Integrity::HashMismatch);
}

#[test]
fn log_rejects_unknown_schema_version() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("p.jsonl");
    let header = LogHeader::new(RunMode::Headless, participant(), 5, &Config::default());
    LogWriter::create(&path, &header).unwrap().finish().unwrap();
    let text = std::fs::read_to_string(&path).unwrap().replacen("\"version\":1", "\"version\":99", 1);
    std::fs::write(&path, text).unwrap();
    let err = read_log(&path).unwrap_err();
    assert!(err.to_string().contains("version 99"), "{err}");
}

fn all_kinds() -> Vec<Message> {
    let cfg = Config::default();
    let drive = l2hmi_core::drive::Drive::for_stage(&cfg, Stage::Practice, 0, true).unwrap();
    vec![
        Message::Hello {
            version: PROTOCOL_VERSION,
            participant: Some("p01".into()),
            group: Some(Group::Two),
        },
        Message::Stage {
            stage: Stage::Scenario {
                index: 2,
                variant: Variant::Ii,
            },
            hmi: true,
        },
        Message::Frame {
            tick: 9,
            geometry: frame_geometry(drive.world(), &cfg.perception.camera),
            ego_speed: 16.5,
            engaged: true,
        },
        Message::Detections {
            frame: DetectionFrame {
                tick: 8,
                time: 8.0 / 60.0,
                detections: vec![],
            },
        },
        Message::Input {
            longitudinal: -1.0,
            steering: 0.25,
            toggle: false,
            client_ms: Some(1234),
        },
        Message::Questionnaire {
            definition: questionnaire_b(),
            administration: 2,
            error: None,
        },
        Message::Response {
            submission: l2hmi_core::experiment::Submission {
                questionnaire: l2hmi_core::experiment::QuestionnaireId::B,
                administration: 2,
                answers: vec![],
            },
        },
        Message::End { reason: "complete".into() },
    ]
}

#[test]
fn every_message_kind_round_trips() {
    let mut seq = Sequencer::default();
    for (i, m) in all_kinds().into_iter().enumerate() {
        let env = seq.wrap(Some(0.5), m);
        assert_eq!(env.seq, i as u64);
        let json = env.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["kind"], env.message.kind());
        assert_eq!(value["seq"], i as u64);
        assert_eq!(Envelope::from_json(&json).unwrap(), env);
    }
}

#[test]
fn client_messages_parse_from_plain_json() {
    let env = Envelope::from_json(r#"{"seq":3,"kind":"input","longitudinal":-0.5,"steering":0}"#).unwrap();
    assert_eq!(
        env.message,
        Message::Input {
            longitudinal: -0.5,
            steering: 0.0,
            toggle: false,
            client_ms: None
        }
    );
    let env = Envelope::from_json(r#"{"seq":4,"kind":"stage","stage":{"stage":"briefing"}}"#).unwrap();
    assert_eq!(
        env.message,
        Message::Stage {
            stage: Stage::Briefing,
            hmi: false
        }
    );
    assert!(Envelope::from_json(r#"{"seq":5,"kind":"teleport"}"#).is_err());
    assert!(Envelope::from_json(r#"{"seq":5,"kind":"input","longitudinal":1e999,"steering":0}"#).is_err());
}

#[test]
fn only_frames_and_detections_are_droppable() {
    let kinds: Vec<(&str, bool)> = all_kinds().iter().map(|m| (m.kind(), m.droppable())).collect();
    for (kind, droppable) in kinds {
        assert_eq!(droppable, kind == "frame" || kind == "detections", "{kind}");
    }
}
