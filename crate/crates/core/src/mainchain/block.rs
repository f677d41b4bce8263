use serde::{Deserialize, Serialize};

use super::tx::McTx;
use crate::chain::{merkle_root, Canonical, Encoder, Hash};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McBlockHeader {
    pub height: u64,
    pub parent: Hash,
    pub tx_merkle_root: Hash,
    /// Simulated proof-of-work solution; see [`proof_hash_for`].
    pub proof_hash: Hash,
    pub nonce: u64,
    pub cumulative_work: u64,
}

impl McBlockHeader {
    pub fn hash(&self) -> Hash {
        self.canonical_hash()
    }
}

impl Canonical for McBlockHeader {
    fn encode(&self, enc: &mut Encoder) {
        enc.str("mc-header")
            .u64(self.height)
            .hash(&self.parent)
            .hash(&self.tx_merkle_root)
            .hash(&self.proof_hash)
            .u64(self.nonce)
            .u64(self.cumulative_work);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MainchainBlock {
    pub header: McBlockHeader,
    pub transactions: Vec<McTx>,
}

impl MainchainBlock {
    pub fn hash(&self) -> Hash {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn tx_hashes(&self) -> Vec<Hash> {
        self.transactions
            .iter()
            .map(Canonical::canonical_hash)
            .collect()
    }

    pub fn genesis() -> Self {
        let header = McBlockHeader {
            height: 0,
            parent: Hash::ZERO,
            tx_merkle_root: Hash::ZERO,
            proof_hash: proof_hash_for(0, 0, &Hash::ZERO),
            nonce: 0,
            cumulative_work: 0,
        };
        MainchainBlock {
            header,
            transactions: Vec::new(),
        }
    }
}

/// The simulated mining result: `H(seed || height || parent)`.
pub fn proof_hash_for(seed: u64, height: u64, parent: &Hash) -> Hash {
    let mut enc = Encoder::tagged("proof-of-work");
    enc.u64(seed).u64(height).hash(parent);
    enc.finish_hash()
}

/// Merkle root over transaction hashes; the zero hash for an empty block.
pub fn tx_root(txs: &[McTx]) -> Hash {
    let leaves: Vec<Hash> = txs.iter().map(Canonical::canonical_hash).collect();
    merkle_root(&leaves).unwrap_or(Hash::ZERO)
}
