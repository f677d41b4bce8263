//! Certifier selection: epoch randomness, eligibility and the ticket lottery.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CctError;
use crate::chain::{Encoder, Hash, PubKey};
use crate::mainchain::{CertifierRecord, MainchainBlock, ParticipationEntry, SidechainParams};

/// Smallest proof hash among the given preparation-stage blocks.
pub fn epoch_randomness(prep_blocks: &[MainchainBlock]) -> Result<Hash, CctError> {
    min_proof_hash(prep_blocks.iter().map(|b| b.header.proof_hash))
}

pub fn min_proof_hash(proofs: impl IntoIterator<Item = Hash>) -> Result<Hash, CctError> {
    proofs.into_iter().min().ok_or(CctError::EmptyRange)
}

/// `H(rand || epoch || pubkey)` under the canonical encoding.
pub fn lottery_ticket(rand: &Hash, epoch: u64, pub_key: &PubKey) -> Hash {
    let mut enc = Encoder::tagged("certifier-ticket");
    enc.hash(rand).u64(epoch).put(pub_key);
    enc.finish_hash()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifierGroup {
    pub epoch: u64,
    pub group_index: u32,
    pub members: Vec<PubKey>,
    pub tickets: BTreeMap<PubKey, Hash>,
}

impl CertifierGroup {
    pub fn member_set(&self) -> BTreeSet<PubKey> {
        self.members.iter().copied().collect()
    }

    pub fn contains(&self, pk: &PubKey) -> bool {
        self.tickets.contains_key(pk)
    }
}

/// Ranks every eligible certifier by ticket and cuts the ranking into
/// `floor(|ec| / N)` consecutive groups of N. Leftovers stay unassigned.
pub fn build_certifier_groups(
    ec: &BTreeSet<PubKey>,
    rand: &Hash,
    epoch: u64,
    group_size: usize,
) -> Vec<CertifierGroup> {
    if group_size == 0 {
        return Vec::new();
    }
    let mut ranked: Vec<(Hash, PubKey)> = ec
        .iter()
        .map(|pk| (lottery_ticket(rand, epoch, pk), *pk))
        .collect();
    // equal tickets fall back to key order
    ranked.sort();
    ranked
        .chunks_exact(group_size)
        .enumerate()
        .map(|(i, chunk)| CertifierGroup {
            epoch,
            group_index: i as u32,
            members: chunk.iter().map(|(_, pk)| *pk).collect(),
            tickets: chunk.iter().map(|(t, pk)| (*pk, *t)).collect(),
        })
        .collect()
}

/// Registered, unpunished, unrevoked certifiers for `epoch`, minus anyone who
/// sat in an accepted certificate's group during the previous `dispute_len`
/// epochs. Everything is judged as of the end of the epoch's preparation
/// stage, so the result does not change when recomputed later.
pub fn eligible_certifiers<'a>(
    registry: impl IntoIterator<Item = &'a CertifierRecord>,
    params: &SidechainParams,
    epoch: u64,
    participation: &[ParticipationEntry],
) -> BTreeSet<PubKey> {
    let cutoff = params.signing_start(epoch);
    let window_start = epoch.saturating_sub(params.dispute_len);
    let recent: BTreeSet<PubKey> = participation
        .iter()
        .filter(|p| p.epoch >= window_start && p.epoch < epoch && p.accepted_at < cutoff)
        .flat_map(|p| p.members.iter().copied())
        .collect();
    registry
        .into_iter()
        .filter(|r| r.sidechain == params.ledger_id && r.eligible_in(params, epoch))
        .map(|r| r.pub_key)
        .filter(|pk| !recent.contains(pk))
        .collect()
}
