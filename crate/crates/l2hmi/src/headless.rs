//! Batch sessions driven by scripted agents, run as fast as possible.
//!
//! The agents file is TOML:
//!
//! ```toml
//! group_seed = 7            # optional, defaults to [experiment] group_seed
//!
//! [[participants]]
//! id = "p01"
//! reaction_delay = 0.8
//! brake_magnitude = 1.0
//! miss_probability = 0.0
//! seed = 1
//! scenario_seed = 11        # optional, defaults to [session] scenario_seed
//! ```

use std::path::{Path, PathBuf};

use l2hmi_core::agent::{AgentSpec, ScriptedAgent};
use l2hmi_core::drive::{Drive, PreTick};
use l2hmi_core::experiment::{assign_groups, Participant, QuestionnaireDef, Stage, Submission};
use l2hmi_core::Config;
use serde::{Deserialize, Serialize};

use crate::logfile::{LogHeader, LogWriter, RunMode};
use crate::session::{run_session, SessionIo, SessionOutcome, TickInput};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEntry {
    pub id: String,
    #[serde(flatten)]
    pub spec: AgentSpec,
    #[serde(default)]
    pub scenario_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentsFile {
    #[serde(default)]
    pub group_seed: Option<u64>,
    #[serde(default)]
    pub participants: Vec<AgentEntry>,
}

impl AgentsFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: AgentsFile = toml::from_str(text).map_err(|e| Error::Config(format!("agents: {e}")))?;
        for p in &file.participants {
            let valid_id = !p.id.is_empty()
                && p.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !valid_id {
                return Err(Error::Config(format!(
                    "agents: participant id {:?} must be non-empty [A-Za-z0-9_-]",
                    p.id
                )));
            }
            p.spec
                .validate()
                .map_err(|e| Error::Config(format!("agents: participant {:?}: {e}", p.id)))?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Feeds a [`ScriptedAgent`] into the session runner.
pub struct AgentIo<'a> {
    agent: ScriptedAgent,
    cfg: &'a Config,
}

impl<'a> AgentIo<'a> {
    pub fn new(agent: ScriptedAgent, cfg: &'a Config) -> Self {
        Self { agent, cfg }
    }
}

impl SessionIo for AgentIo<'_> {
    fn stage_started(&mut self, _stage: Stage, _hmi: bool) -> Result<()> {
        Ok(())
    }

    fn await_completion(&mut self, _stage: Stage) -> Result<()> {
        Ok(())
    }

    fn questionnaire(
        &mut self,
        def: &QuestionnaireDef,
        administration: u8,
        rejected: Option<&str>,
    ) -> Result<Submission> {
        if let Some(reason) = rejected {
            return Err(Error::Config(format!("agent answer rejected: {reason}")));
        }
        Ok(self.agent.answer(def, administration))
    }

    fn drive_started(&mut self, _drive: &Drive) -> Result<()> {
        self.agent.reset_drive();
        Ok(())
    }

    fn input(&mut self, pre: &PreTick<'_>) -> TickInput {
        for onset in pre.onsets {
            self.agent.observe_onset(onset, &self.cfg.sim);
        }
        TickInput {
            command: self.agent.input(pre.tick),
            received_ms: None,
        }
    }
}

/// Runs one participant headless; the log goes to `out`.
pub fn run_participant<W: std::io::Write>(
    cfg: &Config,
    participant: Participant,
    spec: AgentSpec,
    scenario_seed: u64,
    out: W,
) -> Result<(SessionOutcome, W)> {
    let agent = ScriptedAgent::new(spec).map_err(|e| Error::Config(e.to_string()))?;
    let header = LogHeader::new(RunMode::Headless, participant.clone(), scenario_seed, cfg);
    let writer = LogWriter::new(out, &header).map_err(|e| Error::io("session log", e))?;
    let mut io = AgentIo::new(agent, cfg);
    run_session(cfg, participant, scenario_seed, &mut io, writer)
}

/// Group assignment for the agents file.
pub fn participants(cfg: &Config, agents: &AgentsFile) -> Result<Vec<Participant>> {
    let ids: Vec<String> = agents.participants.iter().map(|p| p.id.clone()).collect();
    let seed = agents.group_seed.unwrap_or(cfg.experiment.group_seed);
    assign_groups(&ids, seed).map_err(|e| Error::Config(format!("agents: {e}")))
}

/// Runs every participant and writes `<out_dir>/<id>.jsonl`.
pub fn run_headless(cfg: &Config, agents: &AgentsFile, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let participants = participants(cfg, agents)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::new();
    for (p, entry) in participants.into_iter().zip(&agents.participants) {
        let path = out_dir.join(format!("{}.jsonl", p.id));
        let seed = entry.scenario_seed.unwrap_or(cfg.session.scenario_seed);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        log::info!("{}: group {}, scenario seed {seed}", p.id, p.group);
        let (outcome, _) =
            run_participant(cfg, p, entry.spec.clone(), seed, std::io::BufWriter::new(file))?;
        if let Some(reason) = outcome.aborted {
            return Err(Error::Config(format!("{}: session aborted: {reason}", path.display())));
        }
        paths.push(path);
    }
    Ok(paths)
}
