use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::chain::FinalityMode;
use crate::crypto::{AccountId, ChainSecret, Pbi, Salt};
use crate::registry::VotingConfig;

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Number of ticks to run.
    pub duration_ticks: u64,
    /// Simulated seconds per tick.
    #[serde(default = "one")]
    pub tick_seconds: u64,
    pub chains: Vec<ChainConfig>,
    pub actors: Vec<ActorConfig>,
    #[serde(default)]
    pub script: Vec<ScriptedEvent>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub id: String,
    #[serde(default = "one")]
    pub ticks_per_block: u64,
    pub finality: FinalityMode,
    /// Present when this chain hosts a pin registry.
    #[serde(default)]
    pub registry: Option<RegistryHost>,
    /// Present when this chain pins its state to another chain's registry.
    #[serde(default)]
    pub pins_to: Option<PinningConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryHost {
    pub pin_dispute_period: u64,
    pub mgmt_voting: VotingConfig,
    /// Actor names holding management rights at deployment.
    pub admins: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinningConfig {
    /// Id of the chain hosting the registry.
    pub management: String,
    pub pbi: Pbi,
    pub secret: ChainSecret,
    /// Blocks of this chain between pins.
    pub pinning_period: u64,
    pub voting: VotingConfig,
    /// Actor posting the pins.
    pub poster: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RoleConfig {
    Member,
    MaskedMember { salt: Salt },
    /// Holds posting key material but not the chain secret.
    QuietGuardian,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Honest,
    /// Never contests and votes against contests on its own chains.
    Colluding,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorConfig {
    pub name: String,
    pub account: AccountId,
    pub role: RoleConfig,
    /// Chains whose sidechain record lists this actor.
    #[serde(default)]
    pub chains: Vec<String>,
    #[serde(default)]
    pub behavior: Behavior,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedEvent {
    pub tick: u64,
    pub action: Adversary,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Adversary {
    /// Colluders rewrite the last `depth` blocks of `chain` and `actor`
    /// pins the rewritten tip at the chain's next key.
    RevertAndRepin { chain: String, depth: u64, actor: String },
    /// `actor` pins a fabricated header hash at the chain's next key.
    FalsePin { chain: String, actor: String },
    /// `actor` fills the chain's next key with random bytes.
    SquatKey { chain: String, actor: String },
}

impl Adversary {
    pub fn chain(&self) -> &str {
        match self {
            Adversary::RevertAndRepin { chain, .. }
            | Adversary::FalsePin { chain, .. }
            | Adversary::SquatKey { chain, .. } => chain,
        }
    }

    pub fn actor(&self) -> &str {
        match self {
            Adversary::RevertAndRepin { actor, .. }
            | Adversary::FalsePin { actor, .. }
            | Adversary::SquatKey { actor, .. } => actor,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Adversary::RevertAndRepin { .. } => "revert_and_repin",
            Adversary::FalsePin { .. } => "false_pin",
            Adversary::SquatKey { .. } => "squat_key",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid simulation config: {0}")]
pub struct ConfigError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl SimConfig {
    pub fn chain_index(&self, id: &str) -> Option<usize> {
        self.chains.iter().position(|c| c.id == id)
    }

    pub fn actor_index(&self, name: &str) -> Option<usize> {
        self.actors.iter().position(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.chains.is_empty() {
            return err("at least one chain is required");
        }
        if self.duration_ticks == 0 || self.tick_seconds == 0 {
            return err("duration_ticks and tick_seconds must be positive");
        }
        let mut ids = BTreeSet::new();
        for chain in &self.chains {
            if !ids.insert(chain.id.as_str()) {
                return err(format!("duplicate chain id `{}`", chain.id));
            }
            if chain.ticks_per_block == 0 {
                return err(format!("chain `{}`: ticks_per_block must be positive", chain.id));
            }
        }
        let mut names = BTreeSet::new();
        let mut accounts = BTreeSet::new();
        for actor in &self.actors {
            if !names.insert(actor.name.as_str()) {
                return err(format!("duplicate actor `{}`", actor.name));
            }
            if !accounts.insert(actor.account) {
                return err(format!("actor `{}` reuses an account", actor.name));
            }
            for chain in &actor.chains {
                let Some(idx) = self.chain_index(chain) else {
                    return err(format!("actor `{}` lists unknown chain `{chain}`", actor.name));
                };
                if self.chains[idx].pins_to.is_none() {
                    return err(format!("actor `{}` lists chain `{chain}`, which pins nowhere", actor.name));
                }
            }
        }
        for chain in &self.chains {
            if let Some(host) = &chain.registry {
                if host.admins.is_empty() {
                    return err(format!("registry on `{}` has no admins", chain.id));
                }
                for admin in &host.admins {
                    if self.actor_index(admin).is_none() {
                        return err(format!("registry on `{}`: unknown admin `{admin}`", chain.id));
                    }
                }
                if host.pin_dispute_period <= host.mgmt_voting.voting_period || host.mgmt_voting.voting_period == 0 {
                    return err(format!("registry on `{}`: need 0 < voting_period < pin_dispute_period", chain.id));
                }
            }
        }
        let mut pbis: BTreeMap<&str, BTreeSet<Pbi>> = BTreeMap::new();
        for chain in &self.chains {
            let Some(p) = &chain.pins_to else { continue };
            let Some(mgmt) = self.chain_index(&p.management) else {
                return err(format!("chain `{}` pins to unknown chain `{}`", chain.id, p.management));
            };
            let Some(host) = &self.chains[mgmt].registry else {
                return err(format!("chain `{}` pins to `{}`, which hosts no registry", chain.id, p.management));
            };
            if p.pbi.is_management() {
                return err(format!("chain `{}` uses the reserved management id", chain.id));
            }
            if !pbis.entry(p.management.as_str()).or_default().insert(p.pbi) {
                return err(format!("chain `{}` reuses a pbi on `{}`", chain.id, p.management));
            }
            if p.pinning_period == 0 {
                return err(format!("chain `{}`: pinning_period must be positive", chain.id));
            }
            if p.voting.voting_period == 0 || host.pin_dispute_period <= p.voting.voting_period {
                return err(format!("chain `{}`: need 0 < voting_period < pin_dispute_period", chain.id));
            }
            if self.actor_index(&p.poster).is_none() {
                return err(format!("chain `{}`: unknown poster `{}`", chain.id, p.poster));
            }
        }
        for (idx, _) in self.chains.iter().enumerate() {
            let mut seen = BTreeSet::from([idx]);
            let mut cur = idx;
            while let Some(next) = self.chains[cur]
                .pins_to
                .as_ref()
                .and_then(|p| self.chain_index(&p.management))
            {
                if !seen.insert(next) {
                    return err(format!("pinning cycle through `{}`", self.chains[idx].id));
                }
                cur = next;
            }
        }
        for event in &self.script {
            let Some(idx) = self.chain_index(event.action.chain()) else {
                return err(format!("script references unknown chain `{}`", event.action.chain()));
            };
            if self.chains[idx].pins_to.is_none() {
                return err(format!("script targets `{}`, which pins nowhere", event.action.chain()));
            }
            if self.actor_index(event.action.actor()).is_none() {
                return err(format!("script references unknown actor `{}`", event.action.actor()));
            }
            if event.tick >= self.duration_ticks {
                return err(format!("script event at tick {} is past the end", event.tick));
            }
        }
        Ok(())
    }
}
