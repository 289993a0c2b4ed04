//! Scenario files: a simulation setup plus expectations, the run report,
//! and log verification.

pub mod report;
pub mod spec;
pub mod verify;

pub use report::{build_report, run_scenario, RunReport};
pub use spec::{Expectation, ScenarioError, ScenarioSpec};
pub use verify::{verify_log, VerifyReport};

/// Scenarios shipped with the crate, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("happy_path", include_str!("../../scenarios/happy_path.json")),
    ("collusion_revert", include_str!("../../scenarios/collusion_revert.json")),
    ("masked_watcher", include_str!("../../scenarios/masked_watcher.json")),
    ("shared_registry", include_str!("../../scenarios/shared_registry.json")),
    ("hierarchy", include_str!("../../scenarios/hierarchy.json")),
    ("key_squatting", include_str!("../../scenarios/key_squatting.json")),
    ("vote_suppression", include_str!("../../scenarios/vote_suppression.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
