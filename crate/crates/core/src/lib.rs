//! Evolution of cooperation under inequity-averse partner selection.
//!
//! Agents are unconditional cooperators or defectors playing a one-shot,
//! normalized prisoner's dilemma. Each carries a sensitivity `λ ∈ [0, 5]`:
//! it prefers partners whose accumulated reward is close to its own, and a
//! game only happens with probability `exp(-(λ_i + λ_j)·|r_i - r_j|)`.
//! Rewards reset every generation and drive binary-tournament reproduction
//! with mutation of both type and `λ`.
//!
//! * [`mixed`] simulates a well-mixed population with a sampled search space.
//! * [`lattice`] simulates a square grid with a von Neumann neighbourhood.
//! * [`runner`] expands parameter sweeps and writes CSV artifacts.

pub mod config;
pub mod error;
pub mod evolution;
pub mod lattice;
pub mod metrics;
pub mod mixed;
pub mod model;
pub mod rng;
pub mod runner;

pub use config::{parse_config, ConfigDocument, Model, SimConfig, SweepSpec, Topology};
pub use error::{Error, Result};
pub use metrics::{GenerationRecord, InteractionTally};
pub use model::{AgentState, PayoffParams, Reward, Strategy};
pub use rng::{RandomSource, RngStream};
