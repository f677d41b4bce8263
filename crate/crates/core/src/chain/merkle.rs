//! Binary Merkle trees over [`Hash`] leaves.
//!
//! Odd levels duplicate their last node. A single leaf is still paired with
//! itself, so every path has at least one sibling.

use serde::{Deserialize, Serialize};

use super::codec::{Canonical, Encoder};
use super::hash::{hash_pair, Hash};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MerkleError {
    #[error("cannot build a Merkle tree over zero leaves")]
    EmptyLeaves,
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Which side of the running hash a sibling sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerklePath {
    pub leaf_index: u64,
    pub siblings: Vec<(Hash, Side)>,
}

impl Canonical for MerklePath {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.leaf_index).u32(self.siblings.len() as u32);
        for (h, side) in &self.siblings {
            enc.hash(h).u8(matches!(side, Side::Left) as u8);
        }
    }
}

fn next_level(level: &[Hash]) -> Vec<Hash> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [l, r] => hash_pair(l, r),
            [only] => hash_pair(only, only),
            _ => unreachable!(),
        })
        .collect()
}

pub fn merkle_root(leaves: &[Hash]) -> Result<Hash, MerkleError> {
    if leaves.is_empty() {
        return Err(MerkleError::EmptyLeaves);
    }
    let mut level = next_level(leaves);
    while level.len() > 1 {
        level = next_level(&level);
    }
    Ok(level[0])
}

pub fn merkle_path(leaves: &[Hash], index: usize) -> Result<MerklePath, MerkleError> {
    if index >= leaves.len() {
        return Err(MerkleError::IndexOutOfRange {
            index,
            len: leaves.len(),
        });
    }
    let mut siblings = Vec::new();
    let mut level = leaves.to_vec();
    let mut pos = index;
    loop {
        let sibling = if pos.is_multiple_of(2) {
            (*level.get(pos + 1).unwrap_or(&level[pos]), Side::Right)
        } else {
            (level[pos - 1], Side::Left)
        };
        siblings.push(sibling);
        level = next_level(&level);
        pos /= 2;
        if level.len() == 1 {
            break;
        }
    }
    Ok(MerklePath {
        leaf_index: index as u64,
        siblings,
    })
}

/// Recomputes the root from `leaf` and `path`. Side flags must agree with the
/// bits of `leaf_index`; a path that disagrees is malformed and fails.
pub fn verify_merkle_path(leaf: &Hash, path: &MerklePath, root: &Hash) -> bool {
    if path.siblings.is_empty() || path.siblings.len() >= 64 {
        return false;
    }
    if path.leaf_index >> path.siblings.len() != 0 {
        return false;
    }
    let mut acc = *leaf;
    for (depth, (sibling, side)) in path.siblings.iter().enumerate() {
        let bit_is_right_child = (path.leaf_index >> depth) & 1 == 1;
        acc = match (side, bit_is_right_child) {
            (Side::Left, true) => hash_pair(sibling, &acc),
            (Side::Right, false) => hash_pair(&acc, sibling),
            _ => return false,
        };
    }
    acc == *root
}
