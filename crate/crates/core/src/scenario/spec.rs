use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use super::verify::verify_log;
use crate::crypto::{MapKey, Pin};
use crate::registry::{EventKind, PinEntry, ProposalAction};
use crate::sim::cursor::{collect_all, WalkEntry};
use crate::sim::measure::{measured_finality, model_layers};
use crate::sim::{ConfigError, SimConfig, Simulation};
use crate::finality::hierarchy_finality;

#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(flatten)]
    pub sim: SimConfig,
    #[serde(default)]
    pub expectations: Vec<Expectation>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Schema(#[from] serde_json::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate()?;
        for exp in &self.expectations {
            if let Some(chain) = exp.chain() {
                let Some(idx) = self.sim.chain_index(chain) else {
                    return Err(ConfigError(format!("expectation references unknown chain `{chain}`")));
                };
                if self.sim.chains[idx].pins_to.is_none() {
                    return Err(ConfigError(format!("expectation targets `{chain}`, which pins nowhere")));
                }
            }
        }
        Ok(())
    }
}

/// A checkable claim about a finished run. `index` is a PRF counter value.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Expectation {
    /// Live (non-contested) pins of the chain.
    PinCount {
        chain: String,
        min: u64,
        #[serde(default)]
        max: Option<u64>,
    },
    /// The entry at `index` holds the contested sentinel.
    Contested { chain: String, index: u64 },
    /// The entry at `index` was contested and an honest pin sits at the
    /// rollover key derived from the previous pin and `index + 1`.
    Rollover { chain: String, index: u64 },
    /// The entry at `index` is not an honest block yet became final.
    InvalidPinFinal { chain: String, index: u64 },
    /// Every live pin of the chain is an honest block hash.
    AllPinsHonest { chain: String },
    EventCount {
        event_type: String,
        min: u64,
        #[serde(default)]
        max: Option<u64>,
    },
    /// Each contest opened by a previously masked account lands exactly one
    /// block after its unmask.
    UnmaskBeforePropose { chain: String },
    /// Scanning the log with each chain's secret finds exactly that chain's
    /// pins, with no gaps.
    PartitionExact,
    /// Observed worst-case finality of the leaf is within one management
    /// block per layer of the analytical figure.
    FinalityMatchesModel { chain: String },
}

impl Expectation {
    pub fn chain(&self) -> Option<&str> {
        match self {
            Expectation::PinCount { chain, .. }
            | Expectation::Contested { chain, .. }
            | Expectation::Rollover { chain, .. }
            | Expectation::InvalidPinFinal { chain, .. }
            | Expectation::AllPinsHonest { chain }
            | Expectation::UnmaskBeforePropose { chain }
            | Expectation::FinalityMatchesModel { chain } => Some(chain),
            Expectation::EventCount { .. } | Expectation::PartitionExact => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Expectation::PinCount { chain, min, max } => match max {
                Some(max) => format!("pin_count {chain} in [{min}, {max}]"),
                None => format!("pin_count {chain} >= {min}"),
            },
            Expectation::Contested { chain, index } => format!("contested {chain}[{index}]"),
            Expectation::Rollover { chain, index } => format!("rollover {chain}[{index}]"),
            Expectation::InvalidPinFinal { chain, index } => format!("invalid_pin_final {chain}[{index}]"),
            Expectation::AllPinsHonest { chain } => format!("all_pins_honest {chain}"),
            Expectation::EventCount { event_type, min, max } => match max {
                Some(max) => format!("event_count {event_type} in [{min}, {max}]"),
                None => format!("event_count {event_type} >= {min}"),
            },
            Expectation::UnmaskBeforePropose { chain } => format!("unmask_before_propose {chain}"),
            Expectation::PartitionExact => "partition_exact".into(),
            Expectation::FinalityMatchesModel { chain } => format!("finality_matches_model {chain}"),
        }
    }

    /// Evaluates against a finished run. Returns `(passed, detail)`.
    pub fn check(&self, sim: &Simulation) -> (bool, String) {
        match self {
            Expectation::PinCount { chain, min, max } => {
                let live = walk_chain(sim, chain).iter().filter(|e| !e.entry.contested).count() as u64;
                (live >= *min && max.is_none_or(|m| live <= m), format!("{live} live pins"))
            }
            Expectation::Contested { chain, index } => match entry_at(sim, chain, *index) {
                Some(e) => (e.entry.contested && e.entry.pin == Pin::CONTESTED, describe(&e.entry)),
                None => (false, "no entry".into()),
            },
            Expectation::Rollover { chain, index } => {
                let walked = walk_chain(sim, chain);
                let Some(pos) = walked.iter().position(|e| e.t == *index) else {
                    return (false, "no entry".into());
                };
                if !walked[pos].entry.contested {
                    return (false, format!("entry not contested: {}", describe(&walked[pos].entry)));
                }
                let c = sim.chain(chain).expect("validated");
                let keys = &c.pinning.as_ref().expect("validated").keys;
                let prev_pin = prev_live_pin(&walked[..pos]);
                let expected = keys.key(&prev_pin, index + 1);
                match walked.get(pos + 1) {
                    Some(next) if next.key == expected && !next.entry.contested => {
                        let honest = c.honest.contains_hash(next.entry.pin.digest());
                        (honest, format!("rollover pin {} (honest: {honest})", next.entry.pin))
                    }
                    Some(next) => (false, format!("next entry {} at unexpected position", next.key)),
                    None => (false, "nothing posted at the rollover key".into()),
                }
            }
            Expectation::InvalidPinFinal { chain, index } => {
                let c = sim.chain(chain).expect("validated");
                let Some(mgmt) = c.pinning.as_ref().map(|p| &sim.chains()[p.management]) else {
                    return (false, "not pinned".into());
                };
                let state = mgmt.registry.as_ref().expect("validated").state();
                match entry_at(sim, chain, *index) {
                    Some(e) => {
                        let invalid = !e.entry.contested && !c.honest.contains_hash(e.entry.pin.digest());
                        let fin = state.is_pin_final(&e.key).unwrap_or(false);
                        (invalid && fin, format!("invalid: {invalid}, final: {fin}"))
                    }
                    None => (false, "no entry".into()),
                }
            }
            Expectation::AllPinsHonest { chain } => {
                let c = sim.chain(chain).expect("validated");
                let bad = walk_chain(sim, chain)
                    .iter()
                    .filter(|e| !e.entry.contested && !c.honest.contains_hash(e.entry.pin.digest()))
                    .count();
                (bad == 0, format!("{bad} non-honest live pins"))
            }
            Expectation::EventCount { event_type, min, max } => {
                let n = sim.log().iter().filter(|r| r.event_type == *event_type).count() as u64;
                (n >= *min && max.is_none_or(|m| n <= m), format!("{n} events"))
            }
            Expectation::UnmaskBeforePropose { chain } => unmask_before_propose(sim, chain),
            Expectation::PartitionExact => partition_exact(sim),
            Expectation::FinalityMatchesModel { chain } => finality_matches_model(sim, chain),
        }
    }
}

fn describe(entry: &PinEntry) -> String {
    format!("pin {} posted at {}", entry.pin, entry.posted_at)
}

fn prev_live_pin(walked: &[WalkEntry]) -> Pin {
    walked
        .iter()
        .rev()
        .find(|e| !e.entry.contested)
        .map_or(Pin::ZERO, |e| e.entry.pin)
}

/// The chain's registry entries in sequence, following every entry.
pub fn walk_chain(sim: &Simulation, chain: &str) -> Vec<WalkEntry> {
    let Some(p) = sim.chain(chain).and_then(|c| c.pinning.as_ref()) else {
        return Vec::new();
    };
    let state = sim.chains()[p.management].registry.as_ref().expect("validated").state();
    collect_all(&p.keys, |k| state.pin_entry(k).copied()).0
}

fn entry_at(sim: &Simulation, chain: &str, index: u64) -> Option<WalkEntry> {
    walk_chain(sim, chain).into_iter().find(|e| e.t == index)
}

fn unmask_before_propose(sim: &Simulation, chain: &str) -> (bool, String) {
    let c = sim.chain(chain).expect("validated");
    let p = c.pinning.as_ref().expect("validated");
    let registry = sim.chains()[p.management].registry.as_ref().expect("validated");
    let pbi = p.keys.pbi;
    let mut unmasked_at = std::collections::BTreeMap::new();
    let mut checked = 0;
    for event in registry.events() {
        match &event.kind {
            EventKind::Unmasked { pbi: q, .. } if *q == pbi => {
                if let Some(caller) = event.caller {
                    unmasked_at.insert(caller, event.height);
                }
            }
            EventKind::ProposalOpened {
                pbi: q,
                action: ProposalAction::ContestPin { .. },
                ..
            } if *q == pbi => {
                let Some(at) = event.caller.and_then(|c| unmasked_at.get(&c)) else { continue };
                if event.height != at + 1 {
                    return (false, format!("unmask at {at}, proposal at {}", event.height));
                }
                checked += 1;
            }
            _ => {}
        }
    }
    (checked > 0, format!("{checked} contests opened by unmasked-on-demand members"))
}

fn partition_exact(sim: &Simulation) -> (bool, String) {
    let mut problems = Vec::new();
    let mut total = 0;
    for (idx, c) in sim.chains().iter().enumerate() {
        let Some(p) = &c.pinning else { continue };
        let truth: BTreeSet<MapKey> = sim.pin_records().iter().filter(|r| r.chain == idx).map(|r| r.key).collect();
        let report = verify_log(sim.log(), &p.keys);
        let found: BTreeSet<MapKey> = report.pins.iter().map(|v| v.key).collect();
        total += found.len();
        if found != truth {
            let missed = truth.difference(&found).count();
            let extra = found.difference(&truth).count();
            problems.push(format!("{}: {missed} missed, {extra} foreign", c.id));
        }
        if !report.is_consistent() {
            problems.push(format!("{}: gaps at {:?}", c.id, report.gaps));
        }
    }
    if problems.is_empty() {
        (true, format!("{total} pins attributed exactly"))
    } else {
        (false, problems.join("; "))
    }
}

fn finality_matches_model(sim: &Simulation, chain: &str) -> (bool, String) {
    let leaf = sim.config().chain_index(chain).expect("validated");
    let layers = model_layers(sim, leaf);
    let Ok(model) = hierarchy_finality(&layers) else {
        return (false, "no layers".into());
    };
    let Some(measured) = measured_finality(sim, leaf) else {
        return (false, "no leaf block reached finality".into());
    };
    let slack: u64 = layers.iter().map(|l| l.block_period).sum();
    let ok = measured.worst_case_seconds.abs_diff(model.worst_case_seconds) <= slack;
    (
        ok,
        format!(
            "measured {} s over {} blocks, model {} s, slack {} s",
            measured.worst_case_seconds, measured.samples, model.worst_case_seconds, slack
        ),
    )
}
