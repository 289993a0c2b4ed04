use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::types::{ContestProof, ProposalAction, RegistryConfig, VotingConfig};
use crate::crypto::{AccountId, MapKey, MaskedId, Pbi, Pin};
use crate::eventlog::LogRecord;

/// A state transition of the registry. The registry state is the fold of its
/// events in order; see [`super::RegistryState::apply`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEvent {
    pub height: u64,
    pub caller: Option<AccountId>,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event_type", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Deployed {
        config: RegistryConfig,
        admins: BTreeSet<AccountId>,
    },
    SidechainAdded {
        pbi: Pbi,
        voting: VotingConfig,
        unmasked: BTreeSet<AccountId>,
        masked: BTreeSet<MaskedId>,
    },
    PinAdded {
        key: MapKey,
        pin: Pin,
    },
    Unmasked {
        pbi: Pbi,
        masked: MaskedId,
    },
    ProposalOpened {
        pbi: Pbi,
        id: u64,
        action: ProposalAction,
        proof: Option<ContestProof>,
    },
    VoteCast {
        pbi: Pbi,
        id: u64,
        approve: bool,
    },
    ProposalActioned {
        pbi: Pbi,
        id: u64,
        action: ProposalAction,
        yes: u64,
        no: u64,
        passed: bool,
    },
    /// The last unmasked participant of a sidechain was removed.
    SidechainUngovernable {
        pbi: Pbi,
    },
    HeightAdvanced {},
}

impl EventKind {
    pub fn event_type(&self) -> &'static str {
        match self {
            EventKind::Deployed { .. } => "deployed",
            EventKind::SidechainAdded { .. } => "sidechain_added",
            EventKind::PinAdded { .. } => "pin_added",
            EventKind::Unmasked { .. } => "unmasked",
            EventKind::ProposalOpened { .. } => "proposal_opened",
            EventKind::VoteCast { .. } => "vote_cast",
            EventKind::ProposalActioned { .. } => "proposal_actioned",
            EventKind::SidechainUngovernable { .. } => "sidechain_ungovernable",
            EventKind::HeightAdvanced {} => "height_advanced",
        }
    }

    /// Row label in the operation-count table, for events that correspond to
    /// a registry call.
    pub fn operation_label(&self) -> Option<String> {
        match self {
            EventKind::Deployed { .. } => Some("deploy".into()),
            EventKind::SidechainAdded { .. } => Some("addSidechain".into()),
            EventKind::PinAdded { .. } => Some("addPin".into()),
            EventKind::Unmasked { .. } => Some("unmask".into()),
            EventKind::ProposalOpened { action, .. } => Some(format!("proposeVote:{}", action.label())),
            EventKind::VoteCast { .. } => Some("vote".into()),
            EventKind::ProposalActioned { action, passed, .. } => Some(format!(
                "actionVotes:{}:{}",
                action.label(),
                if *passed { "passed" } else { "failed" }
            )),
            EventKind::SidechainUngovernable { .. } | EventKind::HeightAdvanced {} => None,
        }
    }
}

impl RegistryEvent {
    pub fn event_type(&self) -> &'static str {
        self.kind.event_type()
    }

    pub fn to_record(&self) -> LogRecord {
        let tagged = serde_json::to_value(&self.kind).expect("registry events always serialize");
        let payload = tagged.get("payload").cloned().unwrap_or_else(|| json!({}));
        LogRecord::new(self.event_type(), self.height, self.caller, payload)
    }

    pub fn from_record(record: &LogRecord) -> Result<Self, serde_json::Error> {
        let payload = match &record.payload {
            Value::Object(map) => {
                // Records embedded in a simulator log carry extra routing
                // fields that are not part of the registry event.
                let mut map = map.clone();
                map.remove("registry");
                map.remove("tick");
                Value::Object(map)
            }
            other => other.clone(),
        };
        let kind = serde_json::from_value(json!({
            "event_type": record.event_type,
            "payload": payload,
        }))?;
        Ok(RegistryEvent {
            height: record.height,
            caller: record.caller,
            kind,
        })
    }
}
