//! Finality as observed in a finished run, and the matching analytical
//! parameters derived from the topology.

use serde::Serialize;

use super::engine::{PinRecord, Simulation};
use crate::finality::LayerParams;

/// Chains from `leaf` up to (excluding) the root, each pinning into the next.
pub fn pinning_path(sim: &Simulation, leaf: usize) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = leaf;
    while let Some(p) = &sim.chains()[cur].pinning {
        path.push(cur);
        cur = p.management;
    }
    path
}

/// Analytical layer parameters for the path above `leaf`, leaf layer first.
pub fn model_layers(sim: &Simulation, leaf: usize) -> Vec<LayerParams> {
    pinning_path(sim, leaf)
        .into_iter()
        .map(|idx| {
            let chain = &sim.chains()[idx];
            let p = chain.pinning.as_ref().expect("on the path");
            let mgmt = &sim.chains()[p.management].honest;
            let span = p.pinning_period * chain.honest.block_period;
            LayerParams {
                observe_depth: mgmt.finality_mode.observe_depth(),
                unmask_blocks: 1,
                voting_period: p.voting.voting_period,
                action_blocks: 1,
                block_period: mgmt.block_period,
                pinning_period: span.div_ceil(mgmt.block_period),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeasuredFinality {
    pub worst_case_seconds: u64,
    pub best_case_seconds: u64,
    /// Leaf blocks that reached root finality within the run.
    pub samples: u64,
}

/// Seconds from minting leaf block `block` until the root registry holds a
/// final pin transitively covering it, or `None` if the run ended first.
pub fn time_to_final(sim: &Simulation, leaf: usize, block: u64) -> Option<u64> {
    let mut chain = leaf;
    let mut covered = block;
    loop {
        let p = sim.chains()[chain].pinning.as_ref()?;
        let registry = sim.chains()[p.management].registry.as_ref()?;
        let state = registry.state();
        let pin = first_live_cover(sim.pin_records(), chain, covered, |r| {
            state.pin_entry(&r.key).is_some_and(|e| !e.contested)
        })?;
        let final_at = pin.posted_at + state.config.pin_dispute_period;
        let mgmt = &sim.chains()[p.management];
        if mgmt.honest.height() < final_at {
            return None;
        }
        if mgmt.pinning.is_none() {
            return Some(mgmt.honest.block_time(final_at));
        }
        chain = p.management;
        covered = final_at;
    }
}

fn first_live_cover<'a>(
    records: &'a [PinRecord],
    chain: usize,
    block: u64,
    live: impl Fn(&PinRecord) -> bool,
) -> Option<&'a PinRecord> {
    records
        .iter()
        .filter(|r| r.chain == chain && r.block.is_some_and(|b| b >= block) && live(r))
        .min_by_key(|r| (r.block, r.posted_at))
}

/// Worst and best observed finality over every leaf block after genesis.
pub fn measured_finality(sim: &Simulation, leaf: usize) -> Option<MeasuredFinality> {
    let honest = &sim.chains()[leaf].honest;
    let mut out: Option<MeasuredFinality> = None;
    for block in 1..=honest.height() {
        let Some(done) = time_to_final(sim, leaf, block) else { continue };
        let age = done - honest.block_time(block);
        let m = out.get_or_insert(MeasuredFinality {
            worst_case_seconds: age,
            best_case_seconds: age,
            samples: 0,
        });
        m.worst_case_seconds = m.worst_case_seconds.max(age);
        m.best_case_seconds = m.best_case_seconds.min(age);
        m.samples += 1;
    }
    out
}
