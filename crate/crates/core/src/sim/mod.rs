//! Discrete-time simulation of chains pinning into registries on other
//! chains, with posters, watchers and scripted adversaries.

pub mod actor;
pub mod chain;
pub mod config;
pub mod cursor;
pub mod engine;
pub mod measure;

pub use chain::{BlockHeader, ChainError, ChainNode, FinalityMode};
pub use config::{ActorConfig, Adversary, Behavior, ChainConfig, ConfigError, RoleConfig, SimConfig};
pub use engine::{PinRecord, SimChain, Simulation};
