//! Primitives shared by both ledgers: hashing, canonical encoding, Merkle
//! trees and simulated signatures.

pub mod codec;
pub mod hash;
pub mod keys;
pub mod merkle;

pub use codec::{Canonical, Encoder};
pub use hash::{hash_bytes, hash_pair, Hash};
pub use keys::{
    aggregate_signatures, verify_aggregate, Address, AggregateError, AggregatedSignature,
    AggregationScheme, KeyPair, PubKey, Signature,
};
pub use merkle::{merkle_path, merkle_root, verify_merkle_path, MerkleError, MerklePath, Side};

/// Coin amounts on either ledger.
pub type Coins = u64;
