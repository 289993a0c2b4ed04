use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::{keccak256_concat, Digest256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub number: u64,
    pub parent_hash: Digest256,
    pub tx_root: Digest256,
    pub hash: Digest256,
}

impl BlockHeader {
    /// `keccak256(parent_hash || tx_root || number)`, number as 8 big-endian bytes.
    pub fn compute_hash(parent_hash: &Digest256, tx_root: &Digest256, number: u64) -> Digest256 {
        keccak256_concat(&[parent_hash.as_bytes(), tx_root.as_bytes(), &number.to_be_bytes()])
    }

    pub fn new(number: u64, parent_hash: Digest256, tx_root: Digest256) -> Self {
        BlockHeader {
            number,
            parent_hash,
            tx_root,
            hash: Self::compute_hash(&parent_hash, &tx_root, number),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum FinalityMode {
    /// Reads are trusted `confirm_depth` blocks behind the tip.
    Probabilistic { confirm_depth: u64 },
    /// BFT-style: every block is final once minted.
    Instant,
}

impl FinalityMode {
    /// Blocks an observer spends before it can act on a newly posted value.
    pub fn observe_depth(&self) -> u64 {
        match self {
            FinalityMode::Probabilistic { confirm_depth } => *confirm_depth,
            FinalityMode::Instant => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("cannot revert {chain} to height {to_height}: tip is {tip:?}")]
    InvalidHeight {
        chain: String,
        to_height: u64,
        tip: Option<u64>,
    },
}

/// A simulated blockchain: a hash-linked header sequence and a block clock.
#[derive(Debug, Clone)]
pub struct ChainNode {
    pub chain_id: String,
    pub block_period: u64,
    pub finality_mode: FinalityMode,
    headers: Vec<BlockHeader>,
    by_hash: BTreeMap<Digest256, u64>,
}

impl ChainNode {
    pub fn new(chain_id: impl Into<String>, block_period: u64, finality_mode: FinalityMode) -> Self {
        ChainNode {
            chain_id: chain_id.into(),
            block_period,
            finality_mode,
            headers: Vec::new(),
            by_hash: BTreeMap::new(),
        }
    }

    pub fn headers(&self) -> &[BlockHeader] {
        &self.headers
    }

    pub fn header(&self, number: u64) -> Option<&BlockHeader> {
        self.headers.get(number as usize)
    }

    pub fn tip(&self) -> Option<&BlockHeader> {
        self.headers.last()
    }

    /// Tip block number, or 0 before genesis.
    pub fn height(&self) -> u64 {
        self.tip().map_or(0, |h| h.number)
    }

    /// Simulated seconds at the tip. Genesis is minted at time zero.
    pub fn clock(&self) -> u64 {
        self.height() * self.block_period
    }

    pub fn block_time(&self, number: u64) -> u64 {
        number * self.block_period
    }

    pub fn contains_hash(&self, hash: &Digest256) -> bool {
        self.by_hash.contains_key(hash)
    }

    pub fn mint_block(&mut self, tx_root: Digest256) -> &BlockHeader {
        let (number, parent) = match self.headers.last() {
            Some(tip) => (tip.number + 1, tip.hash),
            None => (0, Digest256::ZERO),
        };
        let header = BlockHeader::new(number, parent, tx_root);
        self.by_hash.insert(header.hash, number);
        self.headers.push(header);
        self.headers.last().expect("just pushed")
    }

    /// Drops every block above `to_height` and mints `new_tx_roots` on top.
    pub fn revert_chain(&mut self, to_height: u64, new_tx_roots: &[Digest256]) -> Result<(), ChainError> {
        match self.tip() {
            Some(tip) if to_height < tip.number => {}
            tip => {
                return Err(ChainError::InvalidHeight {
                    chain: self.chain_id.clone(),
                    to_height,
                    tip: tip.map(|h| h.number),
                })
            }
        }
        for dropped in self.headers.drain(to_height as usize + 1..) {
            self.by_hash.remove(&dropped.hash);
        }
        for root in new_tx_roots {
            self.mint_block(*root);
        }
        Ok(())
    }

    /// Highest block at which reads are trusted.
    pub fn visible_height(&self) -> u64 {
        match self.finality_mode {
            FinalityMode::Probabilistic { confirm_depth } => self.height().saturating_sub(confirm_depth),
            FinalityMode::Instant => self.height(),
        }
    }

    /// Checks numbering and hash linkage of every header.
    pub fn verify_linkage(&self) -> bool {
        let mut parent = Digest256::ZERO;
        for (idx, header) in self.headers.iter().enumerate() {
            if header.number != idx as u64
                || header.parent_hash != parent
                || header.hash != BlockHeader::compute_hash(&header.parent_hash, &header.tx_root, header.number)
            {
                return false;
            }
            parent = header.hash;
        }
        true
    }
}
