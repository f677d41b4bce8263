//! Slot-leader selection and consensus-epoch randomness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::{Encoder, Hash, PubKey};
use crate::mainchain::LedgerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("stake distribution has zero total stake")]
pub struct ZeroStake;

/// Position of a slot: consensus epoch and index within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotId {
    pub epoch: u64,
    pub index: u64,
}

impl SlotId {
    pub fn from_global(slot: u64, slots_per_epoch: u64) -> Self {
        SlotId {
            epoch: slot / slots_per_epoch,
            index: slot % slots_per_epoch,
        }
    }

    pub fn global(&self, slots_per_epoch: u64) -> u64 {
        self.epoch * slots_per_epoch + self.index
    }
}

/// Follow-the-cumulative-stake draw for one slot. Stakeholders are laid out
/// in key order; a 64-bit draw is scaled onto the total stake.
pub fn slot_leader(
    stakes: &BTreeMap<PubKey, u64>,
    rand: &Hash,
    epoch: u64,
    slot: u64,
) -> Result<PubKey, ZeroStake> {
    let total: u128 = stakes.values().map(|&s| u128::from(s)).sum();
    if total == 0 {
        return Err(ZeroStake);
    }
    let mut enc = Encoder::tagged("slot-leader");
    enc.hash(rand).u64(epoch).u64(slot);
    let draw = u128::from(enc.finish_hash().prefix_u64());
    let mut point = (draw * total) >> 64;
    for (pk, &stake) in stakes {
        let stake = u128::from(stake);
        if point < stake {
            return Ok(*pk);
        }
        point -= stake;
    }
    unreachable!("point is below total stake")
}

pub fn select_slot_leaders(
    stakes: &BTreeMap<PubKey, u64>,
    rand: &Hash,
    epoch: u64,
    slots: u64,
) -> Result<Vec<PubKey>, ZeroStake> {
    (0..slots)
        .map(|j| slot_leader(stakes, rand, epoch, j))
        .collect()
}

pub fn genesis_randomness(ledger_id: &LedgerId) -> Hash {
    let mut enc = Encoder::tagged("sc-consensus-genesis");
    enc.put(ledger_id);
    enc.finish_hash()
}

/// Randomness of consensus epoch `epoch` given the previous epoch's value and
/// the smallest proof hash referenced during it, if any.
pub fn next_randomness(prev: &Hash, referenced_min: Option<&Hash>, epoch: u64) -> Hash {
    let mut enc = Encoder::tagged("sc-consensus-rand");
    match referenced_min {
        Some(min) => enc.u8(1).hash(min),
        None => enc.u8(0).hash(prev),
    };
    enc.u64(epoch);
    enc.finish_hash()
}
