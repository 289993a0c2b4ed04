//! The pin registry: sidechain records, the pin map, participant management
//! and the propose / vote / action lifecycle, clocked by an externally
//! supplied block height.
//!
//! Every mutating call validates against the current state, then commits a
//! [`RegistryEvent`] which is appended to the log and folded into the state.
//! Replaying the log from the `deployed` event reproduces the state exactly.
//!
//! Windows use strict inequality for "within" and `>=` for "expired":
//! a pin is contestable while `height - posted_at < pin_dispute_period`, and
//! a proposal accepts votes while `height - opened_at < voting_period`.

mod error;
mod events;
mod types;
mod voting;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use error::RegistryError;
pub use events::{EventKind, RegistryEvent};
pub use types::{
    ContestProof, Outcome, PinEntry, Proposal, ProposalAction, RegistryConfig, SidechainRecord,
    VotingConfig,
};
pub use voting::{StrictMajority, Tally, TwoThirds, Unanimous, VotingAlgorithm, VotingRule};

use crate::crypto::{derive_map_key, mask_participant, AccountId, MapKey, MaskedId, Pbi, Pin, Salt};

pub type Result<T> = std::result::Result<T, RegistryError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryState {
    pub config: RegistryConfig,
    pub sidechains: BTreeMap<Pbi, SidechainRecord>,
    pub pins: BTreeMap<MapKey, PinEntry>,
    pub proposals: BTreeMap<Pbi, BTreeMap<u64, Proposal>>,
    pub next_proposal_id: u64,
    pub height: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("event log is empty")]
    Empty,
    #[error("first event must be `deployed`, found `{0}`")]
    NotDeployed(&'static str),
    #[error("event {index} ({event_type}) does not apply: {reason}")]
    Inconsistent {
        index: usize,
        event_type: &'static str,
        reason: String,
    },
}

fn validate_voting(voting: &VotingConfig, dispute: u64) -> Result<()> {
    if voting.voting_period < 1 {
        return Err(RegistryError::InvalidConfig("voting_period must be at least 1".into()));
    }
    if dispute <= voting.voting_period {
        return Err(RegistryError::InvalidConfig(format!(
            "pin_dispute_period ({dispute}) must exceed voting_period ({})",
            voting.voting_period
        )));
    }
    Ok(())
}

impl RegistryState {
    /// Rebuilds a state from its event log.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a RegistryEvent>) -> std::result::Result<Self, ReplayError> {
        let mut iter = events.into_iter();
        let first = iter.next().ok_or(ReplayError::Empty)?;
        let EventKind::Deployed { config, admins } = &first.kind else {
            return Err(ReplayError::NotDeployed(first.event_type()));
        };
        let mut state = RegistryState::genesis(*config, admins.clone(), first.height);
        for (offset, event) in iter.enumerate() {
            state.apply(event).map_err(|reason| ReplayError::Inconsistent {
                index: offset + 1,
                event_type: event.event_type(),
                reason,
            })?;
        }
        Ok(state)
    }

    fn genesis(config: RegistryConfig, admins: BTreeSet<AccountId>, height: u64) -> Self {
        let mgmt = SidechainRecord {
            pbi: Pbi::MANAGEMENT,
            voting: config.mgmt_voting,
            unmasked: admins,
            masked: BTreeSet::new(),
        };
        RegistryState {
            config,
            sidechains: BTreeMap::from([(Pbi::MANAGEMENT, mgmt)]),
            pins: BTreeMap::new(),
            proposals: BTreeMap::new(),
            next_proposal_id: 0,
            height,
        }
    }

    /// Folds one event into the state. Events are produced only after
    /// validation, so failures here mean the log was not produced by a
    /// [`Registry`].
    pub fn apply(&mut self, event: &RegistryEvent) -> std::result::Result<(), String> {
        if event.height < self.height {
            return Err(format!("height {} precedes {}", event.height, self.height));
        }
        self.height = event.height;
        match &event.kind {
            EventKind::Deployed { .. } => return Err("registry already deployed".into()),
            EventKind::SidechainAdded {
                pbi,
                voting,
                unmasked,
                masked,
            } => {
                if self.sidechains.contains_key(pbi) {
                    return Err(format!("sidechain {pbi} already present"));
                }
                self.sidechains.insert(
                    *pbi,
                    SidechainRecord {
                        pbi: *pbi,
                        voting: *voting,
                        unmasked: unmasked.clone(),
                        masked: masked.clone(),
                    },
                );
            }
            EventKind::PinAdded { key, pin } => {
                if self.pins.contains_key(key) {
                    return Err(format!("key {key} already present"));
                }
                self.pins.insert(
                    *key,
                    PinEntry {
                        pin: *pin,
                        posted_at: event.height,
                        contested: false,
                    },
                );
            }
            EventKind::Unmasked { pbi, masked } => {
                let caller = event.caller.ok_or("unmask without caller")?;
                let record = self.sidechains.get_mut(pbi).ok_or("unknown sidechain")?;
                if !record.masked.remove(masked) {
                    return Err("masked id not present".into());
                }
                record.unmasked.insert(caller);
            }
            EventKind::ProposalOpened { pbi, id, action, .. } => {
                let caller = event.caller.ok_or("proposal without caller")?;
                if *id != self.next_proposal_id {
                    return Err(format!("proposal id {id}, expected {}", self.next_proposal_id));
                }
                self.next_proposal_id += 1;
                self.proposals.entry(*pbi).or_default().insert(
                    *id,
                    Proposal {
                        id: *id,
                        sidechain: *pbi,
                        action: *action,
                        proposer: caller,
                        opened_at: event.height,
                        votes: BTreeMap::from([(caller, true)]),
                        actioned: false,
                        outcome: None,
                    },
                );
            }
            EventKind::VoteCast { pbi, id, approve } => {
                let caller = event.caller.ok_or("vote without caller")?;
                let proposal = self
                    .proposals
                    .get_mut(pbi)
                    .and_then(|m| m.get_mut(id))
                    .ok_or("unknown proposal")?;
                if proposal.votes.insert(caller, *approve).is_some() {
                    return Err("duplicate vote".into());
                }
            }
            EventKind::ProposalActioned {
                pbi, id, action, passed, ..
            } => {
                let proposal = self
                    .proposals
                    .get_mut(pbi)
                    .and_then(|m| m.get_mut(id))
                    .ok_or("unknown proposal")?;
                if proposal.actioned {
                    return Err("proposal already actioned".into());
                }
                proposal.actioned = true;
                proposal.outcome = Some(if *passed { Outcome::Passed } else { Outcome::Failed });
                if *passed {
                    self.apply_action(pbi, action)?;
                }
            }
            EventKind::SidechainUngovernable { .. } | EventKind::HeightAdvanced {} => {}
        }
        Ok(())
    }

    fn apply_action(&mut self, pbi: &Pbi, action: &ProposalAction) -> std::result::Result<(), String> {
        if let ProposalAction::ContestPin { target } = action {
            let entry = self.pins.get_mut(target).ok_or("contest target missing")?;
            entry.pin = Pin::CONTESTED;
            entry.contested = true;
            return Ok(());
        }
        let record = self.sidechains.get_mut(pbi).ok_or("unknown sidechain")?;
        match action {
            ProposalAction::AddUnmasked { account } => {
                record.unmasked.insert(*account);
            }
            ProposalAction::AddMasked { masked } => {
                record.masked.insert(*masked);
            }
            ProposalAction::RemoveUnmasked { account } => {
                record.unmasked.remove(account);
            }
            ProposalAction::RemoveMasked { masked } => {
                record.masked.remove(masked);
            }
            ProposalAction::ContestPin { .. } => unreachable!(),
        }
        Ok(())
    }

    pub fn sidechain(&self, pbi: &Pbi) -> Result<&SidechainRecord> {
        self.sidechains.get(pbi).ok_or(RegistryError::NoSuchSidechain(*pbi))
    }

    fn participant(&self, caller: &AccountId, pbi: &Pbi) -> Result<&SidechainRecord> {
        let record = self.sidechain(pbi)?;
        if record.is_unmasked(caller) {
            Ok(record)
        } else {
            Err(RegistryError::NotAuthorized(*pbi))
        }
    }

    pub fn get_pin(&self, key: &MapKey) -> Option<Pin> {
        self.pins.get(key).map(|e| e.pin)
    }

    pub fn pin_entry(&self, key: &MapKey) -> Option<&PinEntry> {
        self.pins.get(key)
    }

    pub fn proposal(&self, pbi: &Pbi, id: u64) -> Result<&Proposal> {
        self.proposals
            .get(pbi)
            .and_then(|m| m.get(&id))
            .ok_or(RegistryError::NoSuchProposal(*pbi, id))
    }

    /// Open (un-actioned) proposals of a sidechain, by id.
    pub fn open_proposals(&self, pbi: &Pbi) -> impl Iterator<Item = &Proposal> {
        self.proposals
            .get(pbi)
            .into_iter()
            .flat_map(|m| m.values())
            .filter(|p| !p.actioned)
    }

    pub fn within_dispute_window(&self, entry: &PinEntry) -> bool {
        self.height - entry.posted_at < self.config.pin_dispute_period
    }

    /// True once a pin can no longer be contested.
    pub fn is_pin_final(&self, key: &MapKey) -> Result<bool> {
        let entry = self.pins.get(key).ok_or(RegistryError::NoSuchPin(*key))?;
        Ok(!entry.contested && !self.within_dispute_window(entry))
    }

    /// Counts the votes of currently unmasked participants.
    pub fn tally(&self, proposal: &Proposal) -> Tally {
        let Some(record) = self.sidechains.get(&proposal.sidechain) else {
            return Tally::default();
        };
        let mut tally = Tally {
            eligible: record.unmasked.len() as u64,
            ..Tally::default()
        };
        for (voter, approve) in &proposal.votes {
            if !record.is_unmasked(voter) {
                continue;
            }
            if *approve {
                tally.yes += 1;
            } else {
                tally.no += 1;
            }
        }
        tally
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("registry state always serializes")
    }
}

/// A registry together with the log of events that produced it.
#[derive(Debug, Clone)]
pub struct Registry {
    state: RegistryState,
    log: Vec<RegistryEvent>,
}

impl Registry {
    pub fn deploy(config: RegistryConfig, genesis_admins: BTreeSet<AccountId>) -> Result<Self> {
        Self::deploy_at(config, genesis_admins, 0)
    }

    pub fn deploy_at(config: RegistryConfig, genesis_admins: BTreeSet<AccountId>, height: u64) -> Result<Self> {
        if genesis_admins.is_empty() {
            return Err(RegistryError::InvalidConfig("at least one genesis admin is required".into()));
        }
        validate_voting(&config.mgmt_voting, config.pin_dispute_period)?;
        let event = RegistryEvent {
            height,
            caller: None,
            kind: EventKind::Deployed {
                config,
                admins: genesis_admins.clone(),
            },
        };
        Ok(Registry {
            state: RegistryState::genesis(config, genesis_admins, height),
            log: vec![event],
        })
    }

    pub fn state(&self) -> &RegistryState {
        &self.state
    }

    pub fn events(&self) -> &[RegistryEvent] {
        &self.log
    }

    pub fn height(&self) -> u64 {
        self.state.height
    }

    fn commit(&mut self, caller: Option<AccountId>, kind: EventKind) {
        let event = RegistryEvent {
            height: self.state.height,
            caller,
            kind,
        };
        self.state
            .apply(&event)
            .expect("validated events always apply");
        self.log.push(event);
    }

    pub fn advance_height(&mut self, new_height: u64) -> Result<()> {
        let current = self.state.height;
        if new_height < current {
            return Err(RegistryError::ClockRegression {
                current,
                attempted: new_height,
            });
        }
        if new_height > current {
            self.state.height = new_height;
            self.commit(None, EventKind::HeightAdvanced {});
        }
        Ok(())
    }

    pub fn add_sidechain(
        &mut self,
        caller: AccountId,
        pbi: Pbi,
        voting: VotingConfig,
        unmasked: BTreeSet<AccountId>,
        masked: BTreeSet<MaskedId>,
    ) -> Result<()> {
        self.state.participant(&caller, &Pbi::MANAGEMENT)?;
        if pbi.is_management() {
            return Err(RegistryError::ReservedId(pbi));
        }
        if self.state.sidechains.contains_key(&pbi) {
            return Err(RegistryError::DuplicateSidechain(pbi));
        }
        validate_voting(&voting, self.state.config.pin_dispute_period)?;
        self.commit(
            Some(caller),
            EventKind::SidechainAdded {
                pbi,
                voting,
                unmasked,
                masked,
            },
        );
        Ok(())
    }

    /// Posts a pin. Any account may post; membership is not consulted.
    pub fn add_pin(&mut self, caller: AccountId, key: MapKey, pin: Pin) -> Result<()> {
        if key == MapKey::GENESIS_PREV {
            return Err(RegistryError::ReservedKey(key));
        }
        if self.state.pins.contains_key(&key) {
            return Err(RegistryError::KeyOccupied(key));
        }
        self.commit(Some(caller), EventKind::PinAdded { key, pin });
        Ok(())
    }

    pub fn get_pin(&self, key: &MapKey) -> Option<Pin> {
        self.state.get_pin(key)
    }

    pub fn is_pin_final(&self, key: &MapKey) -> Result<bool> {
        self.state.is_pin_final(key)
    }

    pub fn unmask(&mut self, caller: AccountId, pbi: Pbi, salt: &Salt) -> Result<()> {
        let record = self.state.sidechain(&pbi)?;
        let masked = mask_participant(&caller, salt);
        if !record.masked.contains(&masked) {
            return Err(RegistryError::NotMasked);
        }
        self.commit(Some(caller), EventKind::Unmasked { pbi, masked });
        Ok(())
    }

    /// Opens a proposal, recording the proposer's yes vote. Returns its id.
    pub fn propose_vote(
        &mut self,
        caller: AccountId,
        pbi: Pbi,
        action: ProposalAction,
        contest_proof: Option<ContestProof>,
    ) -> Result<u64> {
        let state = &self.state;
        state.participant(&caller, &pbi)?;
        let proof = match action {
            ProposalAction::ContestPin { target } => {
                let proof = contest_proof.ok_or(RegistryError::MissingContestProof)?;
                self.check_contest(&pbi, &target, &proof)?;
                Some(proof)
            }
            _ => None,
        };
        if let Some(open) = state.open_proposals(&pbi).find(|p| p.action == action) {
            return Err(RegistryError::DuplicateActiveProposal(open.id));
        }
        let id = state.next_proposal_id;
        self.commit(
            Some(caller),
            EventKind::ProposalOpened {
                pbi,
                id,
                action,
                proof,
            },
        );
        Ok(id)
    }

    fn check_contest(&self, pbi: &Pbi, target: &MapKey, proof: &ContestProof) -> Result<()> {
        let state = &self.state;
        let target_entry = state.pins.get(target).ok_or(RegistryError::NoSuchPin(*target))?;
        if target_entry.contested {
            return Err(RegistryError::ContestedPin(*target));
        }
        let prev_pin = if proof.prev_key == MapKey::GENESIS_PREV {
            Pin::ZERO
        } else {
            let prev = state
                .pins
                .get(&proof.prev_key)
                .ok_or(RegistryError::NoSuchPin(proof.prev_key))?;
            if prev.contested {
                return Err(RegistryError::ContestedPin(proof.prev_key));
            }
            prev.pin
        };
        if derive_map_key(pbi, &prev_pin, &proof.prf) != *target {
            return Err(RegistryError::LinkageInvalid(*target));
        }
        if !state.within_dispute_window(target_entry) {
            return Err(RegistryError::DisputeWindowClosed(*target));
        }
        Ok(())
    }

    pub fn vote(&mut self, caller: AccountId, pbi: Pbi, proposal_id: u64, approve: bool) -> Result<()> {
        let record = self.state.participant(&caller, &pbi)?;
        let proposal = self.state.proposal(&pbi, proposal_id)?;
        if proposal.actioned || self.state.height - proposal.opened_at >= record.voting.voting_period {
            return Err(RegistryError::VotingClosed(proposal_id));
        }
        if proposal.votes.contains_key(&caller) {
            return Err(RegistryError::AlreadyVoted(proposal_id));
        }
        self.commit(
            Some(caller),
            EventKind::VoteCast {
                pbi,
                id: proposal_id,
                approve,
            },
        );
        Ok(())
    }

    /// Tallies a proposal whose voting period has expired and applies its
    /// action if it passed.
    pub fn action_votes(&mut self, caller: AccountId, pbi: Pbi, proposal_id: u64) -> Result<Outcome> {
        let record = self.state.participant(&caller, &pbi)?;
        let algorithm = record.voting.algorithm;
        let voting_period = record.voting.voting_period;
        let proposal = self.state.proposal(&pbi, proposal_id)?;
        if proposal.actioned {
            return Err(RegistryError::AlreadyActioned(proposal_id));
        }
        if self.state.height - proposal.opened_at < voting_period {
            return Err(RegistryError::VotingStillOpen(proposal_id));
        }
        if let ProposalAction::ContestPin { target } = proposal.action {
            let entry = self.state.pins.get(&target).ok_or(RegistryError::NoSuchPin(target))?;
            if entry.contested {
                return Err(RegistryError::ContestedPin(target));
            }
            if !self.state.within_dispute_window(entry) {
                return Err(RegistryError::DisputeWindowClosed(target));
            }
        }
        let action = proposal.action;
        let tally = self.state.tally(proposal);
        let passed = algorithm.passes(&tally);
        self.commit(
            Some(caller),
            EventKind::ProposalActioned {
                pbi,
                id: proposal_id,
                action,
                yes: tally.yes,
                no: tally.no,
                passed,
            },
        );
        if passed {
            if let ProposalAction::RemoveUnmasked { .. } = action {
                if self.state.sidechains[&pbi].unmasked.is_empty() {
                    self.commit(None, EventKind::SidechainUngovernable { pbi });
                }
            }
        }
        Ok(if passed { Outcome::Passed } else { Outcome::Failed })
    }
}

#[cfg(test)]
mod tests;
