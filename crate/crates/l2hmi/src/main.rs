use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use l2hmi::analyze::analyze_dir;
use l2hmi::config::{config_hash, load, load_or_default, log_dir, to_toml};
use l2hmi::headless::{run_headless, AgentsFile};
use l2hmi::logfile::read_log;
use l2hmi::replay::replay;
use l2hmi::server::{ServeOptions, Server};
use l2hmi::{Error, Result};
use l2hmi_core::experiment::{Group, Participant};
use l2hmi_core::scenario::{compile_scenario, RiskKind, Variant};

#[derive(Parser)]
#[command(name = "l2hmi", version, about = "Level-2 automation HMI driving-study simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    I,
    Ii,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::I => Variant::I,
            VariantArg::Ii => Variant::Ii,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one live session for a browser client.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        participant: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
        group: u8,
        /// Scenario order, e.g. `i,ii`.
        #[arg(long, default_value = "i,ii")]
        order: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `[session] listen`.
        #[arg(long)]
        listen: Option<String>,
        /// Run drives as fast as possible instead of in real time.
        #[arg(long)]
        no_pace: bool,
    },
    /// Run scripted agents through the whole protocol.
    Headless {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        agents: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-simulate a session log and check it against its checkpoints.
    Replay {
        log: PathBuf,
        /// Require the log to have been recorded with this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Export logs in a directory to CSV and compute the statistics.
    Analyze {
        dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Inspect compiled scenarios.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
    /// Print or validate configuration files.
    Config {
        #[command(subcommand)]
        command: ConfigCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Compile a scenario and print its layout.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ConfigCommand {
    /// Print a config (defaults without `--config`) as TOML.
    Show {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Validate a config file and print its hash.
    Check { config: PathBuf },
}

fn parse_order(s: &str) -> Result<(Variant, Variant)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (Variant::parse(a), Variant::parse(b)) {
            (Some(a), Some(b)) if a != b => Ok((a, b)),
            _ => Err(Error::Config(format!("--order must be i,ii or ii,i, got {s:?}"))),
        },
        _ => Err(Error::Config(format!("--order must be i,ii or ii,i, got {s:?}"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve {
            config,
            participant,
            group,
            order,
            seed,
            listen,
            no_pace,
        } => {
            let cfg = load_or_default(config.as_deref())?;
            let participant = Participant {
                id: participant,
                group: Group::try_from(group).map_err(|e| Error::Config(e.to_string()))?,
                driving_experience_months: None,
                scenario_order: parse_order(&order)?,
            };
            let path = log_dir(&cfg).join(format!("{}.jsonl", participant.id));
            let server = Server::bind(listen.as_deref().unwrap_or(&cfg.session.listen))?;
            println!("listening on ws://{}", server.local_addr());
            let opts = ServeOptions {
                participant,
                scenario_seed: seed.unwrap_or(cfg.session.scenario_seed),
                pace: !no_pace,
            };
            let outcome = server.run(&cfg, opts, &path)?;
            match outcome.aborted {
                Some(reason) => println!("session aborted ({reason}); log {}", path.display()),
                None => println!("session complete; log {}", path.display()),
            }
        }
        Command::Headless { config, agents, out } => {
            let cfg = load_or_default(config.as_deref())?;
            let agents = AgentsFile::load(&agents)?;
            for path in run_headless(&cfg, &agents, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Replay { log, config } => {
            let cfg = config.as_deref().map(load).transpose()?;
            let session = read_log(&log)?;
            let report = replay(&session, cfg.as_ref())?;
            println!(
                "replay ok: {} drives, {} ticks, {} checkpoints match",
                report.drives, report.ticks, report.checkpoints
            );
        }
        Command::Analyze { dir, config } => {
            let cfg = load_or_default(config.as_deref())?;
            let report = analyze_dir(&dir, &cfg)?;
            print!("{}", l2hmi::analyze::pvalue_text(&report.table, report.alpha));
            print!("{}", l2hmi::analyze::tti_text(&report));
        }
        Command::Scenario {
            command: ScenarioCommand::Validate { config, variant, seed },
        } => {
            let cfg = load_or_default(config.as_deref())?;
            let script = compile_scenario(variant.into(), seed, &cfg.scenario, &cfg.sim)
                .map_err(|e| Error::Config(e.to_string()))?;
            let road = &script.road;
            println!(
                "variant {} seed {seed}: road {} m, lane drop at {} m, {} intersections",
                variant_name(variant),
                road.total_length,
                road.lane_drop_s,
                road.intersections.len()
            );
            for kind in [
                RiskKind::PotentialEntry,
                RiskKind::PotentialPylons,
                RiskKind::PotentialMotorcycle,
                RiskKind::ApparentEntry,
                RiskKind::ApparentPylons,
            ] {
                println!("  {kind}: {}", script.count(kind));
            }
            for e in &script.events {
                println!(
                    "  event {} ({}) trigger at s = {:.1} m, window [{:.1}, {:.1}]",
                    e.id.0, e.kind, e.trigger_s, e.window.0, e.window.1
                );
            }
        }
        Command::Config {
            command: ConfigCommand::Show { config },
        } => {
            let cfg = load_or_default(config.as_deref())?;
            print!("{}", to_toml(&cfg)?);
        }
        Command::Config {
            command: ConfigCommand::Check { config },
        } => {
            let cfg = load(&config)?;
            println!("ok {}", config_hash(&cfg));
        }
    }
    Ok(())
}

fn variant_name(v: VariantArg) -> &'static str {
    Variant::from(v).as_str()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
