//! Software model of a single neuromorphic core.
//!
//! Networks of integer LIF and binary (ANN) neurons are defined with
//! [`network::NetworkBuilder`], compiled into an emulated HBM routing table
//! ([`hbm`]) and executed either by the event-driven [`engine`] or by the
//! dense reference in [`oracle`]. Both backends are bit-exact with each
//! other. [`convert`] turns layered conv/pool/FC models into networks and
//! [`cost`] turns the engine's HBM access counts into energy and latency
//! estimates.

pub mod backend;
pub mod convert;
pub mod cost;
pub mod diff;
pub mod engine;
pub mod error;
pub mod hbm;
pub mod netlist;
pub mod network;
pub mod neuron;
pub mod oracle;
pub mod random;
pub mod report;
pub mod scaling;
pub mod schedule;

pub use backend::{Backend, BackendRegistry, RunOutcome, Session, StepResult};
pub use cost::{CostConfig, CostReport, StepCounters};
pub use engine::EventEngine;
pub use error::{Error, Result};
pub use hbm::HbmImage;
pub use network::{example_network, EngineConfig, Network, NetworkBuilder, SimState, Source, EXAMPLE_SEED};
pub use neuron::{NeuronKind, NeuronModel, NoiseRng, Overflow};
pub use oracle::OracleBackend;
pub use schedule::Schedule;
