use serde::{Deserialize, Serialize};

use super::block::{CertifierSignature, MainchainReference, SidechainBlock, WithdrawalRequest};
use super::consensus::SlotId;
use super::error::ScError;
use super::state::SidechainState;
use crate::chain::{KeyPair, Signature};
use crate::mainchain::Mainchain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForgePolicy {
    #[default]
    Honest,
    /// References nothing; legal, the cursor simply lags.
    OmitReferences,
    /// References blocks but strips their synced transactions; invalid.
    DropSyncedTxs,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mempool {
    pub withdrawals: Vec<WithdrawalRequest>,
    pub signatures: Vec<CertifierSignature>,
}

impl Mempool {
    pub fn is_empty(&self) -> bool {
        self.withdrawals.is_empty() && self.signatures.is_empty()
    }

    /// Drops entries that `state` already contains or can never accept.
    pub fn prune(&mut self, state: &SidechainState) {
        self.withdrawals
            .retain(|w| !state.request_ids.contains(&w.id()));
        self.signatures.retain(|s| {
            state
                .rounds
                .get(&s.epoch)
                .is_some_and(|r| !r.has_signed(s.cert_index, &s.sig.signer()))
        });
    }
}

/// Builds and signs the block for `slot` on top of `state`. Mempool entries
/// that would fail are left out; references follow `policy`.
pub fn forge_block(
    state: &SidechainState,
    mc: &Mainchain,
    forger: &KeyPair,
    slot: SlotId,
    mempool: &Mempool,
    policy: ForgePolicy,
) -> Result<SidechainBlock, ScError> {
    if state.leader_for(slot)? != forger.public() {
        return Err(ScError::NotLeader);
    }
    let id = state.params.ledger_id;
    let global = slot.global(state.slots_per_epoch);
    let last = mc.height().min(state.slot_height(global));
    let refs: Vec<MainchainReference> = match policy {
        ForgePolicy::OmitReferences => Vec::new(),
        ForgePolicy::Honest | ForgePolicy::DropSyncedTxs => (state.cursor..=last)
            .filter_map(|h| mc.block_at(h))
            .map(|b| MainchainReference::build(b, &id))
            .collect(),
    };

    let mut trial = state.clone();
    let mut events = Vec::new();
    let height = state.height + 1;
    trial.enter_slot(slot, &state.tip, height, &forger.public())?;
    let reward_payouts = trial.apply_references(&refs, global, &mut events)?;

    let mut withdrawal_requests = Vec::new();
    for w in &mempool.withdrawals {
        let idx = withdrawal_requests.len() as u32;
        if trial.apply_withdrawal(w, height, idx, &mut events).is_ok() {
            withdrawal_requests.push(w.clone());
        }
    }
    let mut certifier_signatures = Vec::new();
    for s in &mempool.signatures {
        if trial.apply_signature(s, &mut events).is_ok() {
            certifier_signatures.push(s.clone());
        }
    }

    let mc_refs = match policy {
        ForgePolicy::DropSyncedTxs => refs
            .into_iter()
            .map(|mut r| {
                r.synced_txs.clear();
                r
            })
            .collect(),
        _ => refs,
    };

    let mut block = SidechainBlock {
        slot,
        height,
        parent: state.tip,
        forger: forger.public(),
        mc_refs,
        withdrawal_requests,
        certifier_signatures,
        reward_payouts,
        forger_sig: placeholder_signature(forger),
    };
    block.sign(forger);
    Ok(block)
}

fn placeholder_signature(forger: &KeyPair) -> Signature {
    forger.sign(crate::chain::Hash::ZERO)
}
