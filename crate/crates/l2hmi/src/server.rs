//! Live single-participant server.
//!
//! The simulation loop runs on the calling thread and owns all state. One
//! I/O thread owns the socket and talks to the loop through an inbox (the
//! latest driver input wins, control messages are queued) and a bounded
//! outbox that drops the oldest frame or detections message when full.

use std::collections::VecDeque;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use l2hmi_core::automation::{CommandSource, ControlCommand};
use l2hmi_core::drive::{Drive, PreTick, TickReport};
use l2hmi_core::experiment::{Participant, QuestionnaireDef, Stage, Submission};
use l2hmi_core::perception::frame_geometry;
use l2hmi_core::Config;
use tungstenite::{Message as WsMessage, WebSocket};

use crate::logfile::{LogHeader, LogWriter, RunMode};
use crate::session::{run_session, SessionIo, SessionOutcome, TickInput};
use crate::wire::{Envelope, Message, Sequencer, PROTOCOL_VERSION};
use crate::{Error, Result};

const POLL: Duration = Duration::from_millis(2);
const HELLO_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub participant: Participant,
    pub scenario_seed: u64,
    /// Pace drives to the wall clock; off runs as fast as possible.
    pub pace: bool,
}

#[derive(Debug)]
enum Control {
    StageDone(Stage),
    Response(Submission),
    Disconnected(String),
}

#[derive(Debug, Default)]
struct Inbox {
    latest: Option<(ControlCommand, u64)>,
    toggles: u32,
}

struct Outbox {
    queue: VecDeque<Envelope>,
    capacity: usize,
    dropped: u64,
}

impl Outbox {
    fn push(&mut self, env: Envelope) {
        if env.message.droppable() && self.queue.len() >= self.capacity {
            if let Some(i) = self.queue.iter().position(|e| e.message.droppable()) {
                self.queue.remove(i);
                self.dropped += 1;
            }
        }
        self.queue.push_back(env);
    }
}

struct Shared {
    start: Instant,
    inbox: Mutex<Inbox>,
    outbox: Mutex<Outbox>,
    closed: AtomicBool,
    shutdown: AtomicBool,
}

impl Shared {
    fn elapsed_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}

pub struct Server {
    listener: TcpListener,
}

impl Server {
    pub fn bind(addr: &str) -> Result<Self> {
        let listener = TcpListener::bind(addr)
            .map_err(|e| Error::Config(format!("cannot listen on {addr}: {e}")))?;
        Ok(Self { listener })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener")
    }

    /// Waits for one client, runs the session and writes the log to
    /// `log_path`.
    pub fn run(self, cfg: &Config, opts: ServeOptions, log_path: &Path) -> Result<SessionOutcome> {
        log::info!("waiting for a client on ws://{}", self.local_addr());
        let (stream, peer) = self
            .listener
            .accept()
            .map_err(|e| Error::Wire(format!("accept: {e}")))?;
        log::info!("client connected from {peer}");
        let _ = stream.set_nodelay(true);
        let mut ws = tungstenite::accept(stream).map_err(|e| Error::Wire(format!("handshake: {e}")))?;
        let mut seq = Sequencer::default();
        handshake(&mut ws, &mut seq, &opts.participant)?;

        let shared = Arc::new(Shared {
            start: Instant::now(),
            inbox: Mutex::new(Inbox::default()),
            outbox: Mutex::new(Outbox {
                queue: VecDeque::new(),
                capacity: cfg.session.outbox_capacity.max(1),
                dropped: 0,
            }),
            closed: AtomicBool::new(false),
            shutdown: AtomicBool::new(false),
        });
        let (tx, rx) = mpsc::channel();
        ws.get_mut()
            .set_read_timeout(Some(POLL))
            .map_err(|e| Error::Wire(e.to_string()))?;
        let io_shared = Arc::clone(&shared);
        let io_thread = thread::spawn(move || io_loop(ws, &io_shared, &tx));

        let header = LogHeader::new(RunMode::Live, opts.participant.clone(), opts.scenario_seed, cfg);
        let writer = LogWriter::create(log_path, &header)?;
        let mut io = LiveIo {
            shared: Arc::clone(&shared),
            control: rx,
            seq,
            camera: cfg.perception.camera.clone(),
            tick_rate: f64::from(cfg.sim.tick_rate_hz),
            pace: opts.pace,
            drive_start: Instant::now(),
        };
        let result = run_session(cfg, opts.participant, opts.scenario_seed, &mut io, writer);
        shared.shutdown.store(true, Ordering::SeqCst);
        let _ = io_thread.join();
        let dropped = shared.outbox.lock().expect("outbox").dropped;
        if dropped > 0 {
            log::info!("{dropped} frame messages dropped for a slow client");
        }
        let (outcome, _) = result?;
        if let Some(reason) = &outcome.aborted {
            log::warn!("session aborted: {reason}");
        }
        Ok(outcome)
    }
}

fn send(ws: &mut WebSocket<TcpStream>, env: &Envelope) -> Result<()> {
    ws.send(WsMessage::text(env.to_json()))
        .map_err(|e| Error::Disconnected(e.to_string()))
}

fn handshake(ws: &mut WebSocket<TcpStream>, seq: &mut Sequencer, participant: &Participant) -> Result<()> {
    ws.get_mut()
        .set_read_timeout(Some(HELLO_TIMEOUT))
        .map_err(|e| Error::Wire(e.to_string()))?;
    loop {
        let msg = ws.read().map_err(|e| Error::Wire(format!("waiting for hello: {e}")))?;
        let WsMessage::Text(text) = msg else { continue };
        let env = Envelope::from_json(text.as_str()).map_err(Error::Wire)?;
        match env.message {
            Message::Hello { version, .. } if version == PROTOCOL_VERSION => break,
            Message::Hello { version, .. } => {
                let reason = format!("protocol version {version} not supported, expected {PROTOCOL_VERSION}");
                let _ = send(ws, &seq.wrap(None, Message::End { reason: reason.clone() }));
                return Err(Error::Wire(reason));
            }
            other => return Err(Error::Wire(format!("expected hello, got {}", other.kind()))),
        }
    }
    let hello = Message::Hello {
        version: PROTOCOL_VERSION,
        participant: Some(participant.id.clone()),
        group: Some(participant.group),
    };
    send(ws, &seq.wrap(None, hello))
}

fn io_loop(mut ws: WebSocket<TcpStream>, shared: &Shared, control: &Sender<Control>) {
    let disconnect = |reason: String| {
        shared.closed.store(true, Ordering::SeqCst);
        let _ = control.send(Control::Disconnected(reason));
    };
    let mut last_seq: Option<u64> = None;
    loop {
        let pending: Vec<Envelope> = shared.outbox.lock().expect("outbox").queue.drain(..).collect();
        for env in &pending {
            if let Err(e) = send(&mut ws, env) {
                disconnect(e.to_string());
                return;
            }
        }
        if shared.shutdown.load(Ordering::SeqCst) && shared.outbox.lock().expect("outbox").queue.is_empty() {
            let _ = ws.close(None);
            let _ = ws.flush();
            return;
        }
        match ws.read() {
            Ok(WsMessage::Text(text)) => {
                let env = match Envelope::from_json(text.as_str()) {
                    Ok(env) => env,
                    Err(e) => {
                        log::warn!("dropping malformed message: {e}");
                        continue;
                    }
                };
                if last_seq.is_some_and(|s| env.seq <= s) {
                    log::warn!("dropping out-of-order message seq {}", env.seq);
                    continue;
                }
                last_seq = Some(env.seq);
                match env.message {
                    Message::Input {
                        longitudinal,
                        steering,
                        toggle,
                        ..
                    } => {
                        let mut inbox = shared.inbox.lock().expect("inbox");
                        let cmd = ControlCommand::new(longitudinal, steering, CommandSource::Driver);
                        inbox.latest = Some((cmd, shared.elapsed_ms()));
                        inbox.toggles += u32::from(toggle);
                    }
                    Message::Stage { stage, .. } => {
                        let _ = control.send(Control::StageDone(stage));
                    }
                    Message::Response { submission } => {
                        let _ = control.send(Control::Response(submission));
                    }
                    Message::End { reason } => {
                        disconnect(format!("client ended the session: {reason}"));
                        return;
                    }
                    other => log::debug!("ignoring client {} message", other.kind()),
                }
            }
            Ok(WsMessage::Close(_)) => {
                disconnect("connection closed by client".into());
                return;
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(e) => {
                disconnect(e.to_string());
                return;
            }
        }
    }
}

struct LiveIo {
    shared: Arc<Shared>,
    control: Receiver<Control>,
    seq: Sequencer,
    camera: l2hmi_core::perception::CameraModel,
    tick_rate: f64,
    pace: bool,
    drive_start: Instant,
}

impl LiveIo {
    fn check(&self) -> Result<()> {
        if self.shared.closed.load(Ordering::SeqCst) {
            return Err(Error::Disconnected("connection lost".into()));
        }
        Ok(())
    }

    fn post(&mut self, sim_time: Option<f64>, message: Message) -> Result<()> {
        self.check()?;
        let env = self.seq.wrap(sim_time, message);
        self.shared.outbox.lock().expect("outbox").push(env);
        Ok(())
    }

    fn next_control(&mut self) -> Result<Control> {
        loop {
            match self.control.recv_timeout(Duration::from_millis(100)) {
                Ok(Control::Disconnected(reason)) => return Err(Error::Disconnected(reason)),
                Ok(c) => return Ok(c),
                Err(RecvTimeoutError::Timeout) => self.check()?,
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Disconnected("connection lost".into()))
                }
            }
        }
    }
}

impl SessionIo for LiveIo {
    fn wall_ms(&self) -> Option<u64> {
        Some(self.shared.elapsed_ms())
    }

    fn stage_started(&mut self, stage: Stage, hmi: bool) -> Result<()> {
        self.post(None, Message::Stage { stage, hmi })
    }

    fn await_completion(&mut self, stage: Stage) -> Result<()> {
        loop {
            match self.next_control()? {
                Control::StageDone(s) if s == stage => return Ok(()),
                other => log::debug!("ignoring {other:?} during {stage}"),
            }
        }
    }

    fn questionnaire(
        &mut self,
        def: &QuestionnaireDef,
        administration: u8,
        rejected: Option<&str>,
    ) -> Result<Submission> {
        self.post(
            None,
            Message::Questionnaire {
                definition: def.clone(),
                administration,
                error: rejected.map(str::to_string),
            },
        )?;
        loop {
            match self.next_control()? {
                Control::Response(s) => return Ok(s),
                other => log::debug!("ignoring {other:?} while waiting for questionnaire {}", def.id.as_str()),
            }
        }
    }

    fn drive_started(&mut self, _drive: &Drive) -> Result<()> {
        let mut inbox = self.shared.inbox.lock().expect("inbox");
        inbox.latest = None;
        inbox.toggles = 0;
        drop(inbox);
        self.drive_start = Instant::now();
        Ok(())
    }

    fn poll_toggle(&mut self) -> Result<bool> {
        self.check()?;
        let mut inbox = self.shared.inbox.lock().expect("inbox");
        let toggled = inbox.toggles > 0;
        inbox.toggles = 0;
        Ok(toggled)
    }

    fn input(&mut self, _pre: &PreTick<'_>) -> TickInput {
        match self.shared.inbox.lock().expect("inbox").latest {
            Some((command, ms)) => TickInput {
                command,
                received_ms: Some(ms),
            },
            None => TickInput::idle(),
        }
    }

    fn tick_done(&mut self, drive: &Drive, report: &TickReport) -> Result<()> {
        let world = drive.world();
        if let Some(frame) = &report.detections {
            self.post(
                Some(frame.time),
                Message::Detections {
                    frame: frame.clone(),
                },
            )?;
        }
        let sim_time = world.tick as f64 / self.tick_rate;
        self.post(
            Some(sim_time),
            Message::Frame {
                tick: world.tick,
                geometry: frame_geometry(world, &self.camera),
                ego_speed: world.ego.speed,
                engaged: drive.automation().engaged,
            },
        )?;
        if self.pace {
            let target = self.drive_start + Duration::from_secs_f64(sim_time);
            let now = Instant::now();
            if target > now {
                thread::sleep(target - now);
            }
        }
        Ok(())
    }

    fn session_ended(&mut self, reason: &str) -> Result<()> {
        self.post(
            None,
            Message::End {
                reason: reason.to_string(),
            },
        )
    }
}
