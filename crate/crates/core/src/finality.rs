//! Worst-case finality arithmetic for single-layer and hierarchical pinning.
//!
//! A layer's contest period is the time an honest participant needs to see a
//! bad pin, unmask, let a vote run and action it. A block on the pinned chain
//! is final once it has waited for the next pin (up to one pinning period)
//! and that pin has outlived its contest period. Each extra layer of the
//! hierarchy adds its own pinning and contest periods.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerParams {
    /// Blocks before a posted pin can be trusted by an observer.
    pub observe_depth: u64,
    pub unmask_blocks: u64,
    pub voting_period: u64,
    pub action_blocks: u64,
    /// Seconds per block of this layer's management chain.
    pub block_period: u64,
    /// Management-chain blocks between successive pins.
    pub pinning_period: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FinalityError {
    #[error("at least one layer is required")]
    EmptyHierarchy,
    #[error("layer {layer}: voting period {voting_period} is below the minimum {minimum}")]
    VotingPeriodTooShort {
        layer: usize,
        voting_period: u64,
        minimum: u64,
    },
}

impl LayerParams {
    /// Ethereum MainNet: six-block confirmation depth, 15 s blocks.
    pub const fn mainnet(pinning_period: u64) -> Self {
        LayerParams {
            observe_depth: 6,
            unmask_blocks: 1,
            voting_period: 7,
            action_blocks: 1,
            block_period: 15,
            pinning_period,
        }
    }

    /// A private IBFT chain with instant finality and 2 s blocks.
    pub const fn ibft(pinning_period: u64) -> Self {
        LayerParams {
            observe_depth: 1,
            unmask_blocks: 1,
            voting_period: 2,
            action_blocks: 1,
            block_period: 2,
            pinning_period,
        }
    }

    /// Participants who only see a proposal `observe_depth` blocks after it
    /// opens still need one block to land their vote.
    pub fn min_voting_period(&self) -> u64 {
        if self.observe_depth == 0 {
            0
        } else {
            self.observe_depth + 1
        }
    }

    pub fn validate(&self, layer: usize) -> Result<(), FinalityError> {
        let minimum = self.min_voting_period();
        if self.voting_period < minimum {
            return Err(FinalityError::VotingPeriodTooShort {
                layer,
                voting_period: self.voting_period,
                minimum,
            });
        }
        Ok(())
    }
}

/// Blocks needed to contest a pin on this layer.
pub fn contest_period(layer: &LayerParams) -> u64 {
    layer.observe_depth + layer.unmask_blocks + layer.voting_period + layer.action_blocks
}

pub fn contest_period_seconds(layer: &LayerParams) -> u64 {
    contest_period(layer) * layer.block_period
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerFinality {
    pub contest_blocks: u64,
    pub contest_seconds: u64,
    pub pinning_seconds: u64,
    /// Contest plus pinning period: a block minted right after a pin.
    pub worst_case_seconds: u64,
    /// Contest period only: a block pinned the moment it is minted.
    pub best_case_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalityReport {
    pub layers: Vec<LayerFinality>,
    pub worst_case_seconds: u64,
    pub best_case_seconds: u64,
}

/// Per-layer and summed finality figures, leaf layer first.
pub fn hierarchy_finality(layers: &[LayerParams]) -> Result<FinalityReport, FinalityError> {
    if layers.is_empty() {
        return Err(FinalityError::EmptyHierarchy);
    }
    let layers: Vec<LayerFinality> = layers
        .iter()
        .map(|layer| {
            let contest_seconds = contest_period_seconds(layer);
            let pinning_seconds = layer.pinning_period * layer.block_period;
            LayerFinality {
                contest_blocks: contest_period(layer),
                contest_seconds,
                pinning_seconds,
                worst_case_seconds: contest_seconds + pinning_seconds,
                best_case_seconds: contest_seconds,
            }
        })
        .collect();
    Ok(FinalityReport {
        worst_case_seconds: layers.iter().map(|l| l.worst_case_seconds).sum(),
        best_case_seconds: layers.iter().map(|l| l.best_case_seconds).sum(),
        layers,
    })
}

impl FinalityReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (idx, layer) in self.layers.iter().enumerate() {
            out.push_str(&format!(
                "layer {idx}: contest {} blocks / {} s, pinning {} s, worst case {} s, best case {} s\n",
                layer.contest_blocks,
                layer.contest_seconds,
                layer.pinning_seconds,
                layer.worst_case_seconds,
                layer.best_case_seconds
            ));
        }
        out.push_str(&format!(
            "total: worst case {} s, best case {} s\n",
            self.worst_case_seconds, self.best_case_seconds
        ));
        out
    }
}
