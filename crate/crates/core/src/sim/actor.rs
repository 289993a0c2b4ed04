//! Per-chain participant behaviour: the poster schedule and the watcher's
//! contest loop. Both read the registry of the chain's management layer and
//! return at most one transaction per tick.

use std::collections::BTreeSet;

use serde::Serialize;

use super::config::Behavior;
use super::cursor::{walk, Cursor, Step, WalkEntry};
use super::engine::{Pinning, SimChain};
use crate::crypto::{AccountId, MapKey, Pbi, Pin, PinKeys, Salt};
use crate::registry::{ContestProof, Outcome, ProposalAction, RegistryError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TxOp {
    AddPin { key: MapKey, pin: Pin },
    Unmask { pbi: Pbi, salt: Salt },
    ProposeVote {
        pbi: Pbi,
        action: ProposalAction,
        proof: Option<ContestProof>,
    },
    Vote { pbi: Pbi, id: u64, approve: bool },
    ActionVotes { pbi: Pbi, id: u64 },
}

impl TxOp {
    pub fn name(&self) -> &'static str {
        match self {
            TxOp::AddPin { .. } => "add_pin",
            TxOp::Unmask { .. } => "unmask",
            TxOp::ProposeVote { .. } => "propose_vote",
            TxOp::Vote { .. } => "vote",
            TxOp::ActionVotes { .. } => "action_votes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receipt {
    Done,
    Opened(u64),
    Actioned(Outcome),
}

/// A decision to submit `op`, with a label for the log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub label: &'static str,
    pub op: TxOp,
}

/// Something worth logging that is not a transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Note {
    pub label: &'static str,
    pub key: MapKey,
    pub t: u64,
}

#[derive(Debug, Clone)]
pub struct Membership {
    /// Index of the pinned chain.
    pub chain: usize,
    pub keys: PinKeys,
    /// Holds the chain secret and an honest replica, so can judge pins.
    pub secret_access: bool,
    /// Listed in the sidechain record.
    pub participant: bool,
    pub salt: Option<Salt>,
    pub unmasked: bool,
    pub poster: bool,
    pending: bool,
    inflight_post: Option<(MapKey, u64)>,
    last_pinned: u64,
    own_keys: BTreeSet<MapKey>,
    post_cursor: Cursor,
    watch_cursor: Cursor,
    proposed: BTreeSet<MapKey>,
    accepted_invalid: BTreeSet<MapKey>,
}

impl Membership {
    pub fn new(chain: usize, keys: PinKeys, secret_access: bool, participant: bool, salt: Option<Salt>, poster: bool) -> Self {
        Membership {
            chain,
            keys,
            secret_access,
            participant,
            unmasked: participant && salt.is_none(),
            salt,
            poster,
            pending: false,
            inflight_post: None,
            last_pinned: 0,
            own_keys: BTreeSet::new(),
            post_cursor: Cursor::genesis(),
            watch_cursor: Cursor::genesis(),
            proposed: BTreeSet::new(),
            accepted_invalid: BTreeSet::new(),
        }
    }

    pub fn is_pending(&self) -> bool {
        self.pending
    }

    pub fn mark_submitted(&mut self, op: &TxOp, pinned_block: Option<u64>) {
        self.pending = true;
        if let (TxOp::AddPin { key, .. }, Some(block)) = (op, pinned_block) {
            self.inflight_post = Some((*key, block));
        }
        if let TxOp::ProposeVote {
            action: ProposalAction::ContestPin { target },
            ..
        } = op
        {
            self.proposed.insert(*target);
        }
    }

    /// Returns the pinned block number when a post of ours was accepted.
    pub fn on_receipt(&mut self, op: &TxOp, result: &Result<Receipt, RegistryError>) -> Option<u64> {
        self.pending = false;
        let inflight = self.inflight_post.take();
        match (op, result) {
            (TxOp::AddPin { key, .. }, Ok(_)) => {
                self.own_keys.insert(*key);
                let block = inflight.map(|(_, b)| b);
                if let Some(b) = block {
                    self.last_pinned = b;
                }
                block
            }
            (TxOp::Unmask { .. }, Ok(_)) => {
                self.unmasked = true;
                None
            }
            _ => None,
        }
    }

    fn pinning<'a>(&self, chains: &'a [SimChain]) -> &'a Pinning {
        chains[self.chain].pinning.as_ref().expect("memberships exist only for pinned chains")
    }

    /// The next pin this member should post, with the block it covers.
    pub fn post_step(&mut self, chains: &[SimChain]) -> Option<(Decision, u64)> {
        if self.pending || !self.poster {
            return None;
        }
        let pinning = self.pinning(chains);
        let honest = &chains[self.chain].honest;
        let due = honest.height() / pinning.pinning_period * pinning.pinning_period;
        if due == 0 || due <= self.last_pinned {
            return None;
        }
        let state = chains[pinning.management].registry.as_ref().expect("management chain hosts a registry").state();
        let own = &self.own_keys;
        let end = walk(
            &self.keys,
            &mut self.post_cursor,
            |k| state.pin_entry(k).copied(),
            |item| {
                let fin = !state.within_dispute_window(&item.entry);
                if item.entry.contested || fin {
                    Step::Accept { settled: true }
                } else if own.contains(&item.key) {
                    Step::Accept { settled: false }
                } else {
                    // Someone else's pin still inside its dispute window:
                    // wait until it is either contested or final.
                    Step::Stop
                }
            },
        );
        if end.stopped_at.is_some() {
            return None;
        }
        let header = honest.header(due)?;
        let op = TxOp::AddPin {
            key: end.cursor.next_key(&self.keys),
            pin: Pin::new(header.hash),
        };
        Some((Decision { label: "post_pin", op }, due))
    }

    /// Votes on, actions and opens contests on this member's chain.
    pub fn watch_step(
        &mut self,
        account: &AccountId,
        behavior: Behavior,
        chains: &[SimChain],
        notes: &mut Vec<Note>,
    ) -> Option<Decision> {
        if self.pending || !self.secret_access || !self.participant {
            return None;
        }
        let pinning = self.pinning(chains);
        let pbi = pinning.keys.pbi;
        let voting_period = pinning.voting.voting_period;
        let mgmt = &chains[pinning.management];
        let state = mgmt.registry.as_ref().expect("management chain hosts a registry").state();
        let visible = mgmt.honest.visible_height();
        let next_height = state.height + 1;
        let honest = &chains[self.chain].honest;
        let judge_invalid = |pin: &Pin| !pin.is_contested() && !honest.contains_hash(pin.digest());

        let unmask = |salt: &Option<Salt>| {
            salt.map(|salt| Decision {
                label: "unmask",
                op: TxOp::Unmask { pbi, salt },
            })
        };

        for proposal in state.open_proposals(&pbi) {
            let ProposalAction::ContestPin { target } = proposal.action else {
                continue;
            };
            let mine = proposal.proposer == *account;
            if mine {
                if next_height - proposal.opened_at >= voting_period {
                    return Some(Decision {
                        label: "action_contest",
                        op: TxOp::ActionVotes { pbi, id: proposal.id },
                    });
                }
                continue;
            }
            if proposal.opened_at > visible
                || proposal.votes.contains_key(account)
                || next_height - proposal.opened_at >= voting_period
            {
                continue;
            }
            if !self.unmasked {
                return unmask(&self.salt);
            }
            let approve = behavior == Behavior::Honest
                && state.pin_entry(&target).is_some_and(|e| judge_invalid(&e.pin));
            return Some(Decision {
                label: if approve { "vote_for_contest" } else { "vote_against_contest" },
                op: TxOp::Vote {
                    pbi,
                    id: proposal.id,
                    approve,
                },
            });
        }

        if behavior != Behavior::Honest {
            return None;
        }

        let own_posts = &self.own_keys;
        let accepted = &mut self.accepted_invalid;
        let end = walk(
            &self.keys,
            &mut self.watch_cursor,
            |k| state.pin_entry(k).copied(),
            |item: &WalkEntry| {
                if item.entry.contested {
                    return Step::Accept { settled: true };
                }
                if item.entry.posted_at > visible && !own_posts.contains(&item.key) {
                    return Step::Hidden;
                }
                let fin = !state.within_dispute_window(&item.entry);
                if !judge_invalid(&item.entry.pin) {
                    return Step::Accept { settled: fin };
                }
                if fin {
                    if accepted.insert(item.key) {
                        notes.push(Note {
                            label: "accept_final_invalid_pin",
                            key: item.key,
                            t: item.t,
                        });
                    }
                    return Step::Accept { settled: true };
                }
                Step::Stop
            },
        );
        let target = end.stopped_at?;
        let already_open = state
            .open_proposals(&pbi)
            .any(|p| p.action == ProposalAction::ContestPin { target: target.key });
        if already_open {
            // Someone else's contest counts as our one attempt.
            self.proposed.insert(target.key);
            return None;
        }
        if self.proposed.contains(&target.key) {
            return None;
        }
        if !self.unmasked {
            return unmask(&self.salt);
        }
        Some(Decision {
            label: "propose_contest",
            op: TxOp::ProposeVote {
                pbi,
                action: ProposalAction::ContestPin { target: target.key },
                proof: Some(ContestProof {
                    prev_key: target.prev_key,
                    prf: self.keys.prf(target.t),
                }),
            },
        })
    }
}
