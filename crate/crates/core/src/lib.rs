//! Quantized average consensus over open dynamic directed networks.
//!
//! Nodes arrive, depart, and talk over time-varying directed links while
//! running an integer mass-splitting protocol. The crate provides the
//! per-node state machine ([`agent`]), the graph model and scenario checks
//! ([`network`]), a deterministic round-based simulator ([`engine`]), exact
//! trace analysis ([`analysis`]) and the command-line front end ([`cli`]).
//!
//! The protocol and analysis are generic over the integer mass type; the
//! aliases below fix it to `i64`, which is what the CLI uses.

pub mod agent;
pub mod analysis;
pub mod cli;
pub mod engine;
pub mod network;
pub mod scalar;

pub use scalar::Mass;

/// Agent state with 64-bit masses.
pub type Agent = agent::AgentState<i64>;
pub type Message = agent::MassMessage<i64>;
pub type Record = engine::RoundRecord<i64>;
pub type Report = analysis::ConvergenceReport<i64>;
/// Exact rational with 64-bit parts.
pub type Rational = num_rational::Ratio<i64>;
pub type Trace = Vec<Record>;

/// Wide-mass variant for fixtures whose sums approach the `i64` range.
pub type WideAgent = agent::AgentState<i128>;
pub type WideRecord = engine::RoundRecord<i128>;
