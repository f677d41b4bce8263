use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cert::CrossChainCertificate;
use super::signing::PlannedCert;
use super::CctError;
use crate::chain::{Coins, PubKey};

/// How a certificate's fee pool is split. Every group member is owed
/// `pool / N`; only those whose signature made it to the mainchain are paid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardPlan {
    pub cert_index: u32,
    pub per_signer: Coins,
    pub signers: Vec<PubKey>,
    pub burned: Coins,
}

impl RewardPlan {
    pub fn paid_total(&self) -> Coins {
        self.per_signer * self.signers.len() as Coins
    }
}

/// Rewards for a planned certificate once `accepted` (the copy the mainchain
/// took) has been synced back. Fails when the accepted payload differs.
pub fn compute_rewards(
    planned: &PlannedCert,
    accepted: &CrossChainCertificate,
) -> Result<RewardPlan, CctError> {
    if accepted.payload_hash() != planned.payload {
        return Err(CctError::CertNotAccepted);
    }
    let members = planned.group.member_set();
    let signers: BTreeSet<PubKey> = accepted
        .agg_sig
        .parts
        .iter()
        .filter(|s| s.verify(&s.signer(), &planned.payload) && members.contains(&s.signer()))
        .map(|s| s.signer())
        .collect();
    let n = planned.group.members.len().max(1) as Coins;
    let per_signer = planned.fee_pool / n;
    let paid = per_signer * signers.len() as Coins;
    Ok(RewardPlan {
        cert_index: planned.cert.cert_index,
        per_signer,
        signers: signers.into_iter().collect(),
        burned: planned.fee_pool - paid,
    })
}
