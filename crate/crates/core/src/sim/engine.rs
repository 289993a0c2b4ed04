//! The discrete-time driver.
//!
//! Each tick runs three phases in order:
//! 1. chains whose block is due mint it; a chain hosting a registry then
//!    advances the registry clock and executes its mempool in submission order;
//! 2. scripted adversary actions fire;
//! 3. actors decide, watchers first, then posters (skipped when the tick
//!    changed nothing).
//!
//! A transaction submitted during tick `n` lands in the first block of its
//! management chain minted after `n`. Actors learn their own receipts as soon
//! as the block is minted and read other accounts' writes at the management
//! chain's visible height.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::actor::{Decision, Membership, Note, Receipt, TxOp};
use super::chain::{BlockHeader, ChainNode};
use super::config::{Adversary, Behavior, ConfigError, RoleConfig, SimConfig};
use super::cursor::{collect_all, Cursor};
use crate::crypto::{mask_participant, AccountId, Digest256, MapKey, Pin, PinKeys};
use crate::eventlog::LogRecord;
use crate::registry::{Registry, RegistryConfig, RegistryError, VotingConfig};

#[derive(Debug, Clone)]
pub struct Pinning {
    /// Index of the chain hosting the registry.
    pub management: usize,
    pub keys: PinKeys,
    pub pinning_period: u64,
    pub voting: VotingConfig,
    pub poster: usize,
}

#[derive(Debug, Clone)]
struct Tx {
    actor: usize,
    /// Index into the actor's memberships, if the actor tracks a receipt.
    membership: Option<usize>,
    pinned_chain: usize,
    op: TxOp,
}

#[derive(Debug, Clone)]
pub struct SimChain {
    pub id: String,
    pub ticks_per_block: u64,
    /// The history honest participants hold.
    pub honest: ChainNode,
    /// The colluders' rewritten history, once one exists.
    pub fork: Option<ChainNode>,
    pub pinning: Option<Pinning>,
    pub registry: Option<Registry>,
    mempool: Vec<Tx>,
}

#[derive(Debug, Clone)]
pub struct Actor {
    pub name: String,
    pub account: AccountId,
    pub behavior: Behavior,
    pub memberships: Vec<Membership>,
}

/// A pin accepted by a registry, with what it was meant to cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinRecord {
    pub chain: usize,
    pub key: MapKey,
    pub pin: Pin,
    pub posted_at: u64,
    /// Honest block covered, for pins posted by the chain's poster.
    pub block: Option<u64>,
}

#[derive(Debug)]
pub struct Simulation {
    config: SimConfig,
    tick: u64,
    rng: ChaCha8Rng,
    chains: Vec<SimChain>,
    actors: Vec<Actor>,
    log: Vec<LogRecord>,
    pin_records: Vec<PinRecord>,
}

fn registry_config(host: &super::config::RegistryHost) -> RegistryConfig {
    RegistryConfig::new(host.mgmt_voting, host.pin_dispute_period)
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut chains: Vec<SimChain> = config
            .chains
            .iter()
            .map(|c| SimChain {
                id: c.id.clone(),
                ticks_per_block: c.ticks_per_block,
                honest: ChainNode::new(c.id.clone(), c.ticks_per_block * config.tick_seconds, c.finality),
                fork: None,
                pinning: None,
                registry: None,
                mempool: Vec::new(),
            })
            .collect();
        for (idx, c) in config.chains.iter().enumerate() {
            if let Some(p) = &c.pins_to {
                chains[idx].pinning = Some(Pinning {
                    management: config.chain_index(&p.management).expect("validated"),
                    keys: PinKeys::new(p.pbi, p.secret.clone()),
                    pinning_period: p.pinning_period,
                    voting: p.voting,
                    poster: config.actor_index(&p.poster).expect("validated"),
                });
            }
        }

        let mut actors: Vec<Actor> = config
            .actors
            .iter()
            .map(|a| Actor {
                name: a.name.clone(),
                account: a.account,
                behavior: a.behavior,
                memberships: Vec::new(),
            })
            .collect();
        for (idx, chain) in chains.iter().enumerate() {
            let Some(pinning) = &chain.pinning else { continue };
            for (aidx, a) in config.actors.iter().enumerate() {
                let listed = a.chains.iter().any(|c| *c == chain.id);
                let poster = pinning.poster == aidx;
                if !listed && !poster {
                    continue;
                }
                let (secret_access, salt) = match (&a.role, listed) {
                    (RoleConfig::Member, true) => (true, None),
                    (RoleConfig::MaskedMember { salt }, true) => (true, Some(*salt)),
                    _ => (false, None),
                };
                actors[aidx].memberships.push(Membership::new(
                    idx,
                    pinning.keys.clone(),
                    secret_access,
                    listed,
                    salt,
                    poster,
                ));
            }
        }

        let mut sim = Simulation {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            tick: 0,
            chains,
            actors,
            log: Vec::new(),
            pin_records: Vec::new(),
            config,
        };
        sim.deploy_registries()?;
        Ok(sim)
    }

    fn deploy_registries(&mut self) -> Result<(), ConfigError> {
        for idx in 0..self.chains.len() {
            let Some(host) = self.config.chains[idx].registry.clone() else { continue };
            let admins: BTreeSet<AccountId> = host
                .admins
                .iter()
                .map(|n| self.actors[self.config.actor_index(n).expect("validated")].account)
                .collect();
            let first_admin = self.actors[self.config.actor_index(&host.admins[0]).expect("validated")].account;
            let mut registry =
                Registry::deploy(registry_config(&host), admins).map_err(|e| ConfigError(e.to_string()))?;
            for chain in &self.chains {
                let Some(p) = &chain.pinning else { continue };
                if p.management != idx {
                    continue;
                }
                let mut unmasked = BTreeSet::new();
                let mut masked = BTreeSet::new();
                for a in &self.config.actors {
                    if !a.chains.iter().any(|c| *c == chain.id) {
                        continue;
                    }
                    match &a.role {
                        RoleConfig::MaskedMember { salt } => {
                            masked.insert(mask_participant(&a.account, salt));
                        }
                        _ => {
                            unmasked.insert(a.account);
                        }
                    }
                }
                registry
                    .add_sidechain(first_admin, p.keys.pbi, p.voting, unmasked, masked)
                    .map_err(|e| ConfigError(format!("chain `{}`: {e}", chain.id)))?;
            }
            let host_id = self.chains[idx].id.clone();
            for event in registry.events() {
                self.log.push(
                    event
                        .to_record()
                        .with_payload_field("registry", json!(host_id))
                        .with_payload_field("tick", json!(0)),
                );
            }
            self.chains[idx].registry = Some(registry);
        }
        Ok(())
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn chains(&self) -> &[SimChain] {
        &self.chains
    }

    pub fn chain(&self, id: &str) -> Option<&SimChain> {
        self.chains.iter().find(|c| c.id == id)
    }

    pub fn actors(&self) -> &[Actor] {
        &self.actors
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn pin_records(&self) -> &[PinRecord] {
        &self.pin_records
    }

    pub fn run(&mut self) {
        while self.tick < self.config.duration_ticks {
            self.step();
        }
    }

    /// Runs one tick.
    pub fn step(&mut self) {
        let tick = self.tick;
        let mut minted = false;
        for idx in 0..self.chains.len() {
            if tick % self.chains[idx].ticks_per_block == 0 {
                self.mint(idx);
                minted = true;
            }
        }
        let due: Vec<Adversary> = self
            .config
            .script
            .iter()
            .filter(|e| e.tick == tick)
            .map(|e| e.action.clone())
            .collect();
        let scripted = !due.is_empty();
        for action in due {
            self.adversary(&action);
        }
        // Actors only react to new blocks or receipts, which arrive with them.
        if minted || scripted {
            self.actors_act();
        }
        self.tick += 1;
    }

    fn random_digest(&mut self) -> Digest256 {
        let mut bytes = [0u8; 32];
        self.rng.fill_bytes(&mut bytes);
        Digest256::from_bytes(bytes)
    }

    fn mint(&mut self, idx: usize) {
        let root = self.random_digest();
        let header = *self.chains[idx].honest.mint_block(root);
        let chain_id = self.chains[idx].id.clone();
        self.log.push(LogRecord::new(
            "block_minted",
            header.number,
            None,
            json!({
                "chain": chain_id,
                "hash": header.hash,
                "parent_hash": header.parent_hash,
                "tx_root": header.tx_root,
                "tick": self.tick,
            }),
        ));
        if self.chains[idx].registry.is_none() {
            return;
        }
        let mempool = std::mem::take(&mut self.chains[idx].mempool);
        let chain_ids: Vec<String> = self.chains.iter().map(|c| c.id.clone()).collect();
        let registry = self.chains[idx].registry.as_mut().expect("checked above");
        let mut emitted = registry.events().len();
        registry
            .advance_height(header.number)
            .expect("chain heights never decrease");
        let mut records = Vec::new();
        let mut receipts = Vec::new();
        records.extend(registry.events()[emitted..].iter().map(|e| e.to_record()));
        emitted = registry.events().len();
        for tx in mempool {
            let caller = self.actors[tx.actor].account;
            let result = execute(registry, caller, &tx.op);
            if let Err(err) = &result {
                records.push(LogRecord::new(
                    "tx_rejected",
                    registry.height(),
                    Some(caller),
                    json!({
                        "actor": self.actors[tx.actor].name,
                        "chain": chain_ids[tx.pinned_chain],
                        "op": tx.op.name(),
                        "error": err.code(),
                    }),
                ));
            }
            records.extend(registry.events()[emitted..].iter().map(|e| e.to_record()));
            emitted = registry.events().len();
            receipts.push((tx, result, registry.height()));
        }
        for record in records {
            self.log.push(
                record
                    .with_payload_field("registry", json!(chain_id))
                    .with_payload_field("tick", json!(self.tick)),
            );
        }
        for (tx, result, height) in receipts {
            let actor = &mut self.actors[tx.actor];
            let block = tx
                .membership
                .and_then(|m| actor.memberships[m].on_receipt(&tx.op, &result));
            if let (TxOp::AddPin { key, pin }, Ok(_)) = (&tx.op, &result) {
                self.pin_records.push(PinRecord {
                    chain: tx.pinned_chain,
                    key: *key,
                    pin: *pin,
                    posted_at: height,
                    block,
                });
            }
        }
    }

    /// Cursor at the first free key of `chain`, following every entry.
    fn next_free(&self, chain: usize) -> Cursor {
        let pinning = self.chains[chain].pinning.as_ref().expect("validated");
        let state = self.chains[pinning.management].registry.as_ref().expect("validated").state();
        collect_all(&pinning.keys, |k| state.pin_entry(k).copied()).1
    }

    fn adversary(&mut self, action: &Adversary) {
        let chain = self.config.chain_index(action.chain()).expect("validated");
        let actor = self.config.actor_index(action.actor()).expect("validated");
        let mut detail = json!({});
        let pin = match action {
            Adversary::RevertAndRepin { depth, .. } => {
                let mut fork = self.chains[chain].fork.clone().unwrap_or_else(|| self.chains[chain].honest.clone());
                let tip = fork.height();
                let to_height = tip.saturating_sub(*depth);
                let roots: Vec<Digest256> = (to_height..tip).map(|_| self.random_digest()).collect();
                if let Err(err) = fork.revert_chain(to_height, &roots) {
                    self.log_decision(actor, chain, "adversary_failed", json!({"error": err.to_string()}));
                    return;
                }
                let new_tip = *fork.tip().expect("non-empty after revert");
                self.log.push(LogRecord::new(
                    "chain_reverted",
                    new_tip.number,
                    None,
                    json!({
                        "chain": self.chains[chain].id,
                        "to_height": to_height,
                        "new_tip": new_tip.hash,
                        "honest_tip": self.chains[chain].honest.tip().map(|h| h.hash),
                        "tick": self.tick,
                    }),
                ));
                self.chains[chain].fork = Some(fork);
                Pin::new(new_tip.hash)
            }
            Adversary::FalsePin { .. } => {
                let honest = &self.chains[chain].honest;
                let (number, parent) = honest.tip().map_or((0, Digest256::ZERO), |h| (h.number + 1, h.hash));
                let root = self.random_digest();
                let fake = BlockHeader::new(number, parent, root);
                detail = json!({"claimed_number": number});
                Pin::new(fake.hash)
            }
            Adversary::SquatKey { .. } => Pin::new(self.random_digest()),
        };
        let key = self.next_free(chain).next_key(&self.chains[chain].pinning.as_ref().expect("validated").keys);
        let op = TxOp::AddPin { key, pin };
        let mut payload = serde_json::to_value(&op).expect("ops serialize");
        merge(&mut payload, detail);
        self.log_decision(actor, chain, action.label(), payload);
        self.submit(Tx {
            actor,
            membership: None,
            pinned_chain: chain,
            op,
        });
    }

    fn log_decision(&mut self, actor: usize, chain: usize, decision: &str, details: Value) {
        let mgmt = self.chains[chain].pinning.as_ref().map_or(chain, |p| p.management);
        let mut payload = json!({
            "actor": self.actors[actor].name,
            "chain": self.chains[chain].id,
            "decision": decision,
            "tick": self.tick,
        });
        merge(&mut payload, details);
        self.log.push(LogRecord::new(
            "actor_decision",
            self.chains[mgmt].honest.height(),
            Some(self.actors[actor].account),
            payload,
        ));
    }

    fn submit(&mut self, tx: Tx) {
        let mgmt = self.chains[tx.pinned_chain].pinning.as_ref().expect("validated").management;
        self.chains[mgmt].mempool.push(tx);
    }

    fn actors_act(&mut self) {
        for aidx in 0..self.actors.len() {
            for m in 0..self.actors[aidx].memberships.len() {
                let mut notes = Vec::new();
                let actor = &mut self.actors[aidx];
                let decision = actor.memberships[m].watch_step(&actor.account, actor.behavior, &self.chains, &mut notes);
                self.record_notes(aidx, m, notes);
                if let Some(decision) = decision {
                    self.dispatch(aidx, m, decision, None);
                }
            }
        }
        for aidx in 0..self.actors.len() {
            for m in 0..self.actors[aidx].memberships.len() {
                if let Some((decision, block)) = self.actors[aidx].memberships[m].post_step(&self.chains) {
                    self.dispatch(aidx, m, decision, Some(block));
                }
            }
        }
    }

    fn record_notes(&mut self, actor: usize, membership: usize, notes: Vec<Note>) {
        let chain = self.actors[actor].memberships[membership].chain;
        for note in notes {
            self.log_decision(actor, chain, note.label, json!({"key": note.key, "index": note.t}));
        }
    }

    fn dispatch(&mut self, actor: usize, membership: usize, decision: Decision, block: Option<u64>) {
        let chain = self.actors[actor].memberships[membership].chain;
        self.actors[actor].memberships[membership].mark_submitted(&decision.op, block);
        let mut payload = serde_json::to_value(&decision.op).expect("ops serialize");
        if let Some(b) = block {
            merge(&mut payload, json!({"block": b}));
        }
        self.log_decision(actor, chain, decision.label, payload);
        self.submit(Tx {
            actor,
            membership: Some(membership),
            pinned_chain: chain,
            op: decision.op,
        });
    }
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn execute(registry: &mut Registry, caller: AccountId, op: &TxOp) -> Result<Receipt, RegistryError> {
    match op {
        TxOp::AddPin { key, pin } => registry.add_pin(caller, *key, *pin).map(|_| Receipt::Done),
        TxOp::Unmask { pbi, salt } => registry.unmask(caller, *pbi, salt).map(|_| Receipt::Done),
        TxOp::ProposeVote { pbi, action, proof } => {
            registry.propose_vote(caller, *pbi, *action, *proof).map(Receipt::Opened)
        }
        TxOp::Vote { pbi, id, approve } => registry.vote(caller, *pbi, *id, *approve).map(|_| Receipt::Done),
        TxOp::ActionVotes { pbi, id } => registry.action_votes(caller, *pbi, *id).map(Receipt::Actioned),
    }
}
