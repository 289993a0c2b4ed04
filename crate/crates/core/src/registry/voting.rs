use serde::{Deserialize, Serialize};

/// Counted votes of a proposal at tally time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub yes: u64,
    pub no: u64,
    /// Unmasked participants of the sidechain when the tally was taken.
    pub eligible: u64,
}

impl Tally {
    pub fn cast(&self) -> u64 {
        self.yes + self.no
    }
}

/// Decides whether a tallied proposal passes.
pub trait VotingRule {
    fn passes(&self, tally: &Tally) -> bool;
}

/// More yes than no votes, with at least one vote cast.
pub struct StrictMajority;

impl VotingRule for StrictMajority {
    fn passes(&self, tally: &Tally) -> bool {
        tally.cast() >= 1 && tally.yes > tally.no
    }
}

/// At least two thirds of the votes cast are yes.
pub struct TwoThirds;

impl VotingRule for TwoThirds {
    fn passes(&self, tally: &Tally) -> bool {
        tally.yes >= 1 && 3 * tally.yes >= 2 * tally.cast()
    }
}

/// Every vote cast is yes.
pub struct Unanimous;

impl VotingRule for Unanimous {
    fn passes(&self, tally: &Tally) -> bool {
        tally.yes >= 1 && tally.no == 0
    }
}

/// Identifier of the voting rule a sidechain uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotingAlgorithm {
    #[default]
    StrictMajority,
    TwoThirds,
    Unanimous,
}

impl VotingAlgorithm {
    pub fn rule(&self) -> &'static dyn VotingRule {
        match self {
            VotingAlgorithm::StrictMajority => &StrictMajority,
            VotingAlgorithm::TwoThirds => &TwoThirds,
            VotingAlgorithm::Unanimous => &Unanimous,
        }
    }

    pub fn passes(&self, tally: &Tally) -> bool {
        self.rule().passes(tally)
    }
}
