//! Deterministic simulator core for Level-2 automation HMI studies.
//!
//! Everything in this crate is a pure state transition over explicit values:
//! world kinematics ([`sim`]), simulated ACC/LKAS ([`automation`]), the
//! ground-truth recognition overlay ([`perception`]), the risk-scene scripts
//! ([`scenario`]), the study protocol and log model ([`experiment`]), scripted
//! stand-in drivers ([`agent`]) and the statistics used to analyse a study
//! ([`stats`]). [`drive`] wires the per-tick pipeline together so that live,
//! headless and replayed runs share one code path.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, networking and
//! the command line live in the `l2hmi` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agent;
pub mod automation;
pub mod config;
pub mod drive;
pub mod experiment;
pub mod geometry;
pub mod perception;
pub mod scenario;
pub mod sim;
pub mod stats;

mod math;

pub use config::Config;
