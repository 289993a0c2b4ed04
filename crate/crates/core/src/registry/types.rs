use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::voting::VotingAlgorithm;
use crate::crypto::{AccountId, Digest256, MapKey, MaskedId, Pbi, Pin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingConfig {
    pub algorithm: VotingAlgorithm,
    /// Blocks during which votes are accepted after a proposal opens.
    pub voting_period: u64,
}

impl VotingConfig {
    pub fn new(algorithm: VotingAlgorithm, voting_period: u64) -> Self {
        VotingConfig {
            algorithm,
            voting_period,
        }
    }

    pub fn strict_majority(voting_period: u64) -> Self {
        Self::new(VotingAlgorithm::StrictMajority, voting_period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryConfig {
    pub mgmt_voting: VotingConfig,
    /// Blocks after posting during which a pin may be contested.
    pub pin_dispute_period: u64,
}

impl RegistryConfig {
    pub fn new(mgmt_voting: VotingConfig, pin_dispute_period: u64) -> Self {
        RegistryConfig {
            mgmt_voting,
            pin_dispute_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidechainRecord {
    pub pbi: Pbi,
    pub voting: VotingConfig,
    pub unmasked: BTreeSet<AccountId>,
    pub masked: BTreeSet<MaskedId>,
}

impl SidechainRecord {
    pub fn is_unmasked(&self, account: &AccountId) -> bool {
        self.unmasked.contains(account)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinEntry {
    pub pin: Pin,
    pub posted_at: u64,
    pub contested: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProposalAction {
    AddUnmasked { account: AccountId },
    AddMasked { masked: MaskedId },
    RemoveUnmasked { account: AccountId },
    RemoveMasked { masked: MaskedId },
    ContestPin { target: MapKey },
}

impl ProposalAction {
    pub fn label(&self) -> &'static str {
        match self {
            ProposalAction::AddUnmasked { .. } => "add_unmasked",
            ProposalAction::AddMasked { .. } => "add_masked",
            ProposalAction::RemoveUnmasked { .. } => "remove_unmasked",
            ProposalAction::RemoveMasked { .. } => "remove_masked",
            ProposalAction::ContestPin { .. } => "contest_pin",
        }
    }
}

/// `(MapKey_{t-1}, PRF(t))` presented when contesting the pin at `MapKey_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContestProof {
    pub prev_key: MapKey,
    pub prf: Digest256,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Passed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: u64,
    pub sidechain: Pbi,
    pub action: ProposalAction,
    pub proposer: AccountId,
    pub opened_at: u64,
    pub votes: BTreeMap<AccountId, bool>,
    pub actioned: bool,
    pub outcome: Option<Outcome>,
}
