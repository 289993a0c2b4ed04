use crate::crypto::{MapKey, Pbi};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("caller is not an unmasked participant of {0}")]
    NotAuthorized(Pbi),
    #[error("sidechain {0} already registered")]
    DuplicateSidechain(Pbi),
    #[error("sidechain id {0} is reserved")]
    ReservedId(Pbi),
    #[error("no such sidechain {0}")]
    NoSuchSidechain(Pbi),
    #[error("map key {0} already holds a pin")]
    KeyOccupied(MapKey),
    #[error("map key {0} is reserved")]
    ReservedKey(MapKey),
    #[error("no masked participant matches the presented salt")]
    NotMasked,
    #[error("no pin at {0}")]
    NoSuchPin(MapKey),
    #[error("pin at {0} is already contested")]
    ContestedPin(MapKey),
    #[error("contest proposals need a (previous key, prf) proof")]
    MissingContestProof,
    #[error("proof does not derive map key {0}")]
    LinkageInvalid(MapKey),
    #[error("dispute window for {0} has closed")]
    DisputeWindowClosed(MapKey),
    #[error("an identical proposal is already open as #{0}")]
    DuplicateActiveProposal(u64),
    #[error("no proposal #{1} on {0}")]
    NoSuchProposal(Pbi, u64),
    #[error("voting on proposal #{0} has closed")]
    VotingClosed(u64),
    #[error("caller already voted on proposal #{0}")]
    AlreadyVoted(u64),
    #[error("voting on proposal #{0} is still open")]
    VotingStillOpen(u64),
    #[error("proposal #{0} has already been actioned")]
    AlreadyActioned(u64),
    #[error("clock regression from {current} to {attempted}")]
    ClockRegression { current: u64, attempted: u64 },
}

impl RegistryError {
    /// Stable snake_case name used in event logs.
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::InvalidConfig(_) => "invalid_config",
            RegistryError::NotAuthorized(_) => "not_authorized",
            RegistryError::DuplicateSidechain(_) => "duplicate_sidechain",
            RegistryError::ReservedId(_) => "reserved_id",
            RegistryError::NoSuchSidechain(_) => "no_such_sidechain",
            RegistryError::KeyOccupied(_) => "key_occupied",
            RegistryError::ReservedKey(_) => "reserved_key",
            RegistryError::NotMasked => "not_masked",
            RegistryError::NoSuchPin(_) => "no_such_pin",
            RegistryError::ContestedPin(_) => "contested_pin",
            RegistryError::MissingContestProof => "missing_contest_proof",
            RegistryError::LinkageInvalid(_) => "linkage_invalid",
            RegistryError::DisputeWindowClosed(_) => "dispute_window_closed",
            RegistryError::DuplicateActiveProposal(_) => "duplicate_active_proposal",
            RegistryError::NoSuchProposal(..) => "no_such_proposal",
            RegistryError::VotingClosed(_) => "voting_closed",
            RegistryError::AlreadyVoted(_) => "already_voted",
            RegistryError::VotingStillOpen(_) => "voting_still_open",
            RegistryError::AlreadyActioned(_) => "already_actioned",
            RegistryError::ClockRegression { .. } => "clock_regression",
        }
    }
}
