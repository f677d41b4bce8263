//! Per-epoch certificate pipeline on the sidechain side: collecting queued
//! withdrawals, cutting them into certificates and pairing each certificate
//! with its certifier group.

use serde::{Deserialize, Serialize};

use super::cert::{BTList, BackwardTransfer, CrossChainCertificate, FraudReport};
use super::lottery::CertifierGroup;
use super::CctError;
use crate::chain::{Address, Coins, Hash, PubKey};
use crate::mainchain::{LedgerId, SidechainParams};

/// A withdrawal request waiting in the sidechain's backward-transfer queue.
/// The gross amount has already been burned from the requester's balance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuedTransfer {
    pub request_id: Hash,
    /// Withdrawal epoch in which this request is first processed.
    pub origin_epoch: u64,
    pub sc_height: u64,
    pub index_in_block: u32,
    pub requester: Address,
    pub receiver: Address,
    pub gross: Coins,
    pub fee: Coins,
}

impl QueuedTransfer {
    pub fn net(&self) -> Coins {
        self.gross - self.fee
    }

    pub fn order_key(&self) -> (u64, u64, u32) {
        (self.origin_epoch, self.sc_height, self.index_in_block)
    }

    pub fn backward_transfer(&self) -> BackwardTransfer {
        BackwardTransfer {
            amount: self.net(),
            receiver: self.receiver,
        }
    }
}

/// Queue entries due in `epoch` (including carry-over from earlier epochs) in
/// chronological order. `referenced_height` is the latest mainchain height
/// the sidechain has referenced; the epoch's preparation stage must be over.
pub fn collect_backward_transfers(
    queue: &[QueuedTransfer],
    params: &SidechainParams,
    epoch: u64,
    referenced_height: Option<u64>,
) -> Result<Vec<QueuedTransfer>, CctError> {
    let closed = params.signing_start(epoch) - 1;
    if referenced_height.is_none_or(|h| h < closed) {
        return Err(CctError::EpochNotClosed { epoch });
    }
    let mut due: Vec<QueuedTransfer> = queue
        .iter()
        .filter(|q| q.origin_epoch <= epoch)
        .cloned()
        .collect();
    due.sort_by_key(QueuedTransfer::order_key);
    Ok(due)
}

/// Pairs BTLists with groups one-to-one. Fraud reports and certifier
/// withdrawal notices ride in certificate 0; when there are no lists but
/// something to report, certificate 0 carries an empty list.
pub fn build_certificates(
    sidechain_id: LedgerId,
    epoch: u64,
    btlists: &[BTList],
    groups: &[CertifierGroup],
    fraud_reports: &[FraudReport],
    certifier_withdrawals: &[PubKey],
) -> Vec<CrossChainCertificate> {
    let mut count = btlists.len().min(groups.len());
    let has_notices = !fraud_reports.is_empty() || !certifier_withdrawals.is_empty();
    if count == 0 && has_notices && !groups.is_empty() {
        count = 1;
    }
    (0..count)
        .map(|i| {
            let bt_list = btlists
                .get(i)
                .map(|l| l.transfers.clone())
                .unwrap_or_default();
            let mut cert = CrossChainCertificate::unsigned(sidechain_id, epoch, i as u32, bt_list);
            if i == 0 {
                cert.fraud_reports = fraud_reports.to_vec();
                cert.certifier_withdrawals = certifier_withdrawals.to_vec();
            }
            cert
        })
        .collect()
}
