use serde::{Deserialize, Serialize};

use super::params::{LedgerId, SidechainParams, Stage};
use crate::chain::{Coins, Hash, PubKey};

/// A certifier's pending revocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationRequest {
    pub requested_at_height: u64,
    pub epoch: u64,
    pub stage: Stage,
    /// First epoch in which the certifier is no longer eligible; the dispute
    /// countdown starts here.
    pub countdown_epoch: u64,
    /// Epoch at whose first block the deposit is released, absent fraud.
    pub release_epoch: u64,
}

impl RevocationRequest {
    pub fn new(params: &SidechainParams, height: u64) -> Self {
        let (epoch, stage) = match params.withdrawal_epoch_of(height) {
            Ok(pos) => (pos.epoch, pos.stage),
            Err(_) => (0, Stage::Preparation),
        };
        let countdown_epoch = match stage {
            Stage::Preparation => epoch,
            Stage::Signing => epoch + 1,
        };
        RevocationRequest {
            requested_at_height: height,
            epoch,
            stage,
            countdown_epoch,
            release_epoch: countdown_epoch + params.dispute_len + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifierRecord {
    pub pub_key: PubKey,
    pub sidechain: LedgerId,
    pub deposit: Coins,
    pub reg_tx_id: Hash,
    pub registered_at_height: u64,
    /// Withdrawal epoch of the registration; `None` before the sidechain starts.
    pub registered_at_epoch: Option<u64>,
    pub withdrawal: Option<RevocationRequest>,
    pub punished_at: Option<u64>,
    pub released_at: Option<u64>,
}

impl CertifierRecord {
    pub fn punished(&self) -> bool {
        self.punished_at.is_some()
    }

    /// Registration must precede the epoch, so eligibility starts one epoch
    /// after the one the registration landed in.
    pub fn first_eligible_epoch(&self) -> u64 {
        self.registered_at_epoch.map_or(0, |e| e + 1)
    }

    /// Eligibility for `epoch` from the record alone, judged as of the end of
    /// that epoch's preparation stage.
    pub fn eligible_in(&self, params: &SidechainParams, epoch: u64) -> bool {
        let cutoff = params.signing_start(epoch);
        self.first_eligible_epoch() <= epoch
            && self.punished_at.is_none_or(|h| h >= cutoff)
            && self
                .withdrawal
                .as_ref()
                .is_none_or(|w| w.countdown_epoch > epoch)
    }

    /// Deposit still held by the mainchain.
    pub fn locked(&self) -> Coins {
        if self.punished_at.is_some() || self.released_at.is_some() {
            0
        } else {
            self.deposit
        }
    }
}

/// Members of a certifier group whose certificate the mainchain accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipationEntry {
    pub epoch: u64,
    pub cert_index: u32,
    pub accepted_at: u64,
    pub members: Vec<PubKey>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mainchain::params::sample_params;

    fn params() -> SidechainParams {
        let mut p = sample_params("a");
        p.start_block = 100;
        p.epoch_len = 20;
        p.prep_len = 10;
        p.dispute_len = 2;
        p
    }

    #[test]
    fn revocation_timing() {
        let p = params();
        // prep stage of epoch 5
        let r = RevocationRequest::new(&p, p.epoch_start(5) + 3);
        assert_eq!(
            (r.epoch, r.stage, r.countdown_epoch, r.release_epoch),
            (5, Stage::Preparation, 5, 8)
        );
        // signing stage of epoch 5
        let r = RevocationRequest::new(&p, p.signing_start(5));
        assert_eq!((r.countdown_epoch, r.release_epoch), (6, 9));
        // before the sidechain starts
        let r = RevocationRequest::new(&p, 50);
        assert_eq!(r.countdown_epoch, 0);
    }

    #[test]
    fn registration_eligibility() {
        let p = params();
        let mut rec = CertifierRecord {
            pub_key: crate::chain::KeyPair::from_name("c").public(),
            sidechain: p.ledger_id,
            deposit: 100,
            reg_tx_id: Hash::ZERO,
            registered_at_height: p.epoch_start(3) + 4,
            registered_at_epoch: Some(3),
            withdrawal: None,
            punished_at: None,
            released_at: None,
        };
        assert!(!rec.eligible_in(&p, 3));
        assert!(rec.eligible_in(&p, 4));
        rec.withdrawal = Some(RevocationRequest::new(&p, p.signing_start(5)));
        assert!(rec.eligible_in(&p, 5));
        assert!(!rec.eligible_in(&p, 6));
        rec.withdrawal = None;
        rec.punished_at = Some(p.epoch_start(7));
        assert!(rec.eligible_in(&p, 6));
        assert!(!rec.eligible_in(&p, 7));
        assert!(!rec.eligible_in(&p, 9));
    }
}
