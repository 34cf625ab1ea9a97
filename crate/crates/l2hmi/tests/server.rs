mod common;

use std::collections::{BTreeMap, VecDeque};
use std::net::TcpStream;
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use l2hmi::logfile::{LogHeader, LogWriter, RunMode};
use l2hmi::replay::replay;
use l2hmi::server::{ServeOptions, Server};
use l2hmi::session::{run_session, SessionIo, SessionOutcome, TickInput};
use l2hmi::wire::{Envelope, Message, Sequencer, PROTOCOL_VERSION};
use l2hmi::Result;
use l2hmi_core::automation::{CommandSource, ControlCommand, DisengageCause};
use l2hmi_core::drive::{Drive, PreTick};
use l2hmi_core::experiment::{
    Answer, AnswerValue, Group, ItemKind, LogEvent, LogRecord, Participant, QuestionnaireDef,
    Stage, Submission,
};
use l2hmi_core::scenario::Variant;
use l2hmi_core::Config;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message as WsMessage, WebSocket};

fn participant(group: Group) -> Participant {
    Participant {
        id: "live".into(),
        group,
        driving_experience_months: None,
        scenario_order: (Variant::Ii, Variant::I),
    }
}

fn start(
    cfg: &Config,
    group: Group,
    pace: bool,
) -> (String, PathBuf, tempfile::TempDir, thread::JoinHandle<Result<SessionOutcome>>) {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("live.jsonl");
    let server = Server::bind("127.0.0.1:0").unwrap();
    let addr = format!("ws://{}", server.local_addr());
    let cfg = cfg.clone();
    let log = path.clone();
    let handle = thread::spawn(move || {
        let opts = ServeOptions {
            participant: participant(group),
            scenario_seed: 5,
            pace,
        };
        server.run(&cfg, opts, &log)
    });
    (addr, path, tmp, handle)
}

fn answer(def: &QuestionnaireDef, administration: u8) -> Submission {
    Submission {
        questionnaire: def.id,
        administration,
        answers: def
            .items
            .iter()
            .map(|i| Answer {
                item: i.id.clone(),
                value: match i.kind {
                    ItemKind::Likert5 => AnswerValue::Integer(3),
                    ItemKind::Number { min, .. } => AnswerValue::Integer(min as i64),
                    ItemKind::Text => AnswerValue::Text(String::new()),
                },
            })
            .collect(),
    }
}

#[derive(Default)]
struct Seen {
    frames: usize,
    detections: usize,
    stages: Vec<Stage>,
    rejected: usize,
    end: Option<String>,
}

/// What the scripted client does.
#[derive(Clone, Copy)]
struct Plan {
    /// Brake fully after this many practice frames.
    brake_after: Option<usize>,
    /// Press the automation toggle after this many practice frames.
    toggle_after: Option<usize>,
    /// Hang up once this stage starts.
    leave_at: Option<Stage>,
    /// Send one invalid questionnaire answer first.
    bad_answer: bool,
}

struct Client {
    ws: WebSocket<MaybeTlsStream<TcpStream>>,
    seq: Sequencer,
}

impl Client {
    fn connect(addr: &str) -> Self {
        let deadline = Instant::now() + Duration::from_secs(10);
        loop {
            match tungstenite::connect(addr) {
                Ok((ws, _)) => {
                    return Self {
                        ws,
                        seq: Sequencer::default(),
                    }
                }
                Err(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(20)),
                Err(e) => panic!("connect: {e}"),
            }
        }
    }

    fn send(&mut self, m: Message) {
        let env = self.seq.wrap(None, m);
        self.ws.send(WsMessage::text(env.to_json())).unwrap();
    }

    fn recv(&mut self) -> Option<Envelope> {
        loop {
            match self.ws.read() {
                Ok(WsMessage::Text(t)) => return Some(Envelope::from_json(t.as_str()).unwrap()),
                Ok(WsMessage::Close(_)) => return None,
                Ok(_) => {}
                Err(_) => return None,
            }
        }
    }

    fn hello(&mut self) -> Envelope {
        self.send(Message::Hello {
            version: PROTOCOL_VERSION,
            participant: None,
            group: None,
        });
        self.recv().unwrap()
    }

    fn run(&mut self, plan: Plan) -> Seen {
        let mut seen = Seen::default();
        let mut last_seq = None;
        let mut last_frame_tick = 0;
        let mut stage = Stage::QuestionnaireA;
        let mut drive_frames = 0usize;
        let mut bad_pending = plan.bad_answer;
        while let Some(env) = self.recv() {
            if let Some(s) = last_seq {
                assert!(env.seq > s, "server seq not increasing");
            }
            last_seq = Some(env.seq);
            match env.message {
                Message::Stage { stage: s, .. } => {
                    stage = s;
                    drive_frames = 0;
                    last_frame_tick = 0;
                    seen.stages.push(s);
                    if Some(s) == plan.leave_at {
                        let _ = self.ws.close(None);
                        let _ = self.ws.flush();
                        return seen;
                    }
                    if matches!(s, Stage::Briefing | Stage::HmiExplanation) {
                        self.send(Message::Stage { stage: s, hmi: false });
                    }
                }
                Message::Questionnaire {
                    definition,
                    administration,
                    error,
                } => {
                    if error.is_some() {
                        seen.rejected += 1;
                    }
                    let mut sub = answer(&definition, administration);
                    if bad_pending {
                        bad_pending = false;
                        sub.answers[0].item = "no_such_item".into();
                    }
                    self.send(Message::Response { submission: sub });
                }
                Message::Frame { tick, .. } => {
                    seen.frames += 1;
                    drive_frames += 1;
                    last_frame_tick = tick;
                    if stage == Stage::Practice && Some(drive_frames) == plan.toggle_after {
                        self.send(Message::Input {
                            longitudinal: 0.0,
                            steering: 0.0,
                            toggle: true,
                            client_ms: None,
                        });
                    }
                    if stage == Stage::Practice && Some(drive_frames) == plan.brake_after {
                        self.send(Message::Input {
                            longitudinal: -1.0,
                            steering: 0.0,
                            toggle: false,
                            client_ms: Some(1),
                        });
                    }
                }
                Message::Detections { frame } => {
                    assert!(frame.tick >= last_frame_tick, "detections for tick {} after frame {last_frame_tick}", frame.tick);
                    assert!(frame.detections.iter().all(|d| d.class.is_vehicle()));
                    seen.detections += 1;
                }
                Message::End { reason } => {
                    seen.end = Some(reason);
                    let _ = self.ws.close(None);
                    let _ = self.ws.flush();
                    let _ = self.recv();
                    return seen;
                }
                other => panic!("unexpected {}", other.kind()),
            }
        }
        seen
    }
}

fn read_records(path: &std::path::Path) -> Vec<LogRecord> {
    common::read(path).records
}

/// Replays a live log's inputs and answers through the headless path.
struct Scripted {
    submissions: VecDeque<Submission>,
    drives: VecDeque<(BTreeMap<u64, ControlCommand>, Vec<u64>)>,
    inputs: BTreeMap<u64, ControlCommand>,
    toggles: Vec<u64>,
    current: ControlCommand,
    tick: u64,
}

impl SessionIo for Scripted {
    fn stage_started(&mut self, _stage: Stage, _hmi: bool) -> Result<()> {
        Ok(())
    }

    fn await_completion(&mut self, _stage: Stage) -> Result<()> {
        Ok(())
    }

    fn questionnaire(&mut self, _def: &QuestionnaireDef, _a: u8, _r: Option<&str>) -> Result<Submission> {
        Ok(self.submissions.pop_front().unwrap())
    }

    fn drive_started(&mut self, _drive: &Drive) -> Result<()> {
        let (inputs, toggles) = self.drives.pop_front().unwrap();
        self.inputs = inputs;
        self.toggles = toggles;
        self.current = ControlCommand::idle(CommandSource::Driver);
        self.tick = 0;
        Ok(())
    }

    fn poll_toggle(&mut self) -> Result<bool> {
        Ok(self.toggles.contains(&self.tick))
    }

    fn input(&mut self, pre: &PreTick<'_>) -> TickInput {
        if let Some(c) = self.inputs.get(&pre.tick) {
            self.current = *c;
        }
        self.tick = pre.tick + 1;
        TickInput {
            command: self.current,
            received_ms: None,
        }
    }
}

fn strip(records: &[LogRecord]) -> Vec<LogRecord> {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.wall_ms = None;
            if let LogEvent::Input { received_ms, .. } = &mut r.event {
                *received_ms = None;
            }
            r
        })
        .collect()
}

#[test]
fn group_one_live_session_end_to_end() {
    let mut cfg = Config::default();
    cfg.scenario.practice_duration = 20.0;
    let (addr, path, _tmp, server) = start(&cfg, Group::One, false);
    let mut client = Client::connect(&addr);
    let hello = client.hello();
    assert_eq!(
        hello.message,
        Message::Hello {
            version: PROTOCOL_VERSION,
            participant: Some("live".into()),
            group: Some(Group::One)
        }
    );
    let seen = client.run(Plan {
        brake_after: None,
        toggle_after: None,
        leave_at: None,
        bad_answer: true,
    });
    let outcome = server.join().unwrap().unwrap();
    assert!(outcome.aborted.is_none());
    assert_eq!(seen.end.as_deref(), Some("complete"));
    assert_eq!(seen.rejected, 1);
    assert_eq!(seen.stages, l2hmi_core::experiment::stage_sequence(&participant(Group::One)));
    assert!(seen.frames > 0 && seen.detections > 0);

    let log = common::read(&path);
    assert!(log.integrity.is_sealed());
    assert_eq!(log.header.mode, RunMode::Live);
    assert!(log.records.iter().all(|r| r.wall_ms.is_some()));
    assert!(common::events(&log.records, |e| matches!(e, LogEvent::Input { .. })).next().is_none());

    // Detections at 15 Hz of simulated time for every drive.
    for d in l2hmi_core::experiment::split_drives(&log.records) {
        let frames: Vec<u64> = d
            .records
            .iter()
            .filter_map(|r| match &r.event {
                LogEvent::Detections { frame } => Some(frame.tick),
                _ => None,
            })
            .collect();
        assert!(frames.windows(2).all(|w| w[1] - w[0] == 4));
        assert_eq!(frames[0], 0);
    }

    // Replay reproduces the live drive from the logged inputs.
    let report = replay(&log, Some(&cfg)).unwrap();
    assert_eq!(report.drives, 3);
    assert_eq!(report.records, strip(&log.records));

    // The same input stream through the headless path gives the same log.
    let mut submissions = VecDeque::new();
    let mut drives = VecDeque::new();
    for r in &log.records {
        if let LogEvent::QuestionnaireSubmitted { submission } = &r.event {
            submissions.push_back(submission.clone());
        }
    }
    for d in l2hmi_core::experiment::split_drives(&log.records) {
        let mut inputs = BTreeMap::new();
        let mut toggles = Vec::new();
        for r in d.records {
            match &r.event {
                LogEvent::Input { tick, command, .. } => {
                    inputs.insert(*tick, *command);
                }
                LogEvent::Disengaged { tick, record } if record.cause == DisengageCause::ManualToggle => toggles.push(*tick),
                _ => {}
            }
        }
        drives.push_back((inputs, toggles));
    }
    let mut io = Scripted {
        submissions,
        drives,
        inputs: BTreeMap::new(),
        toggles: Vec::new(),
        current: ControlCommand::idle(CommandSource::Driver),
        tick: 0,
    };
    let header = LogHeader::new(RunMode::Headless, log.header.participant.clone(), 5, &cfg);
    let writer = LogWriter::new(Vec::new(), &header).unwrap();
    let (headless, _) = run_session(&cfg, log.header.participant.clone(), 5, &mut io, writer).unwrap();
    assert_eq!(headless.records, strip(&log.records));
}

#[test]
fn group_two_gets_no_detections() {
    let mut cfg = Config::default();
    cfg.scenario.practice_duration = 2.0;
    let (addr, path, _tmp, server) = start(&cfg, Group::Two, true);
    let mut client = Client::connect(&addr);
    client.hello();
    let seen = client.run(Plan {
        brake_after: None,
        toggle_after: None,
        leave_at: Some(Stage::Scenario {
            index: 1,
            variant: Variant::Ii,
        }),
        bad_answer: false,
    });
    let outcome = server.join().unwrap().unwrap();
    assert!(seen.frames > 0);
    assert_eq!(seen.detections, 0);
    assert!(!seen.stages.contains(&Stage::HmiExplanation));
    assert!(outcome.aborted.is_some());
    let records = read_records(&path);
    assert!(!records.iter().any(|r| matches!(r.event, LogEvent::Detections { .. })));
}

#[test]
fn disconnect_mid_drive_aborts_and_seals_the_log() {
    let mut cfg = Config::default();
    cfg.scenario.practice_duration = 2.0;
    let (addr, path, _tmp, server) = start(&cfg, Group::One, true);
    let mut client = Client::connect(&addr);
    client.hello();
    let seen = client.run(Plan {
        brake_after: Some(60),
        toggle_after: Some(30),
        leave_at: Some(Stage::Scenario {
            index: 1,
            variant: Variant::Ii,
        }),
        bad_answer: false,
    });
    assert!(seen.frames > 0);
    let outcome = server.join().unwrap().unwrap();
    assert!(outcome.aborted.is_some());
    let log = common::read(&path);
    assert!(log.integrity.is_sealed());
    let inputs: Vec<&LogRecord> = common::events(&log.records, |e| matches!(e, LogEvent::Input { .. })).collect();
    assert!(!inputs.is_empty());
    for r in &inputs {
        let LogEvent::Input { received_ms, .. } = r.event else { unreachable!() };
        assert!(received_ms.is_some());
    }
    let causes: Vec<DisengageCause> = log
        .records
        .iter()
        .filter_map(|r| match &r.event {
            LogEvent::Disengaged { record, .. } => Some(record.cause),
            _ => None,
        })
        .collect();
    assert_eq!(causes, vec![DisengageCause::ManualToggle]);

    let report = replay(&log, Some(&cfg)).unwrap();
    assert_eq!(report.records, strip(&log.records));
    assert!(matches!(log.records.last().unwrap().event, LogEvent::Aborted { .. }));
    assert!(log
        .records
        .iter()
        .any(|r| matches!(r.event, LogEvent::DriveStarted { stage: Stage::Scenario { .. }, .. })));
    assert_eq!(report.drives, 2);

    // Paced practice drive: wall clock tracks simulated time.
    let start = log
        .records
        .iter()
        .find(|r| matches!(r.event, LogEvent::DriveStarted { stage: Stage::Practice, .. }))
        .unwrap()
        .wall_ms
        .unwrap();
    let mut checked = 0;
    for r in log.records.iter().skip_while(|r| r.wall_ms.unwrap() < start) {
        match r.event {
            LogEvent::Checkpoint { ref snapshot } => {
                let sim_ms = snapshot.tick as f64 * 1000.0 / 60.0;
                let wall = (r.wall_ms.unwrap() - start) as f64;
                assert!((wall - sim_ms).abs() < 50.0, "tick {}: wall {wall} sim {sim_ms}", snapshot.tick);
                checked += 1;
            }
            LogEvent::DriveEnded { time, .. } => {
                let wall = (r.wall_ms.unwrap() - start) as f64;
                assert!((wall - time * 1000.0).abs() < 50.0, "end: wall {wall} sim {time}");
                break;
            }
            _ => {}
        }
    }
    assert_eq!(checked, 2);
}

#[test]
fn version_mismatch_is_refused() {
    let (addr, _path, _tmp, server) = start(&Config::default(), Group::One, false);
    let mut client = Client::connect(&addr);
    client.send(Message::Hello {
        version: PROTOCOL_VERSION + 1,
        participant: None,
        group: None,
    });
    let reply = client.recv().unwrap();
    assert!(matches!(reply.message, Message::End { .. }));
    assert!(server.join().unwrap().is_err());
}
