//! System-level simulator for dynamic-TDD pico-cell networks.
//!
//! Neighbouring pico cells pick their TDD UL/DL configuration independently,
//! which creates eNB→eNB and UE→UE interference in the flexible subframes.
//! The [`powerctl`] module implements an uplink power-control scheme that
//! boosts UE power per flexible subframe according to how many strong
//! neighbour eNBs are transmitting downlink there. [`engine`] runs the
//! subframe-stepped simulation and [`experiment`] sweeps it over loads,
//! seeds and schemes.

pub mod channel;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod mac;
pub mod phy;
pub mod powerctl;
pub mod rng;
pub mod topology;
pub mod trace;
pub mod traffic;
pub mod units;

pub use engine::{run, RunMetrics, Scheme, SimConfig, Simulation};
pub use error::{Error, Result};
