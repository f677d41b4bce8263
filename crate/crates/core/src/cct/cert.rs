use serde::{Deserialize, Serialize};

use crate::chain::{Address, AggregatedSignature, Canonical, Coins, Encoder, Hash, PubKey};
use crate::mainchain::LedgerId;

/// One payment from a sidechain to a mainchain receiver. The amount is net of
/// the certifier fee.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackwardTransfer {
    pub amount: Coins,
    pub receiver: Address,
}

impl Canonical for BackwardTransfer {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.amount).put(&self.receiver);
    }
}

/// Points at a mainchain-accepted certificate that does not match the one
/// signed in the sidechain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FraudReport {
    pub reported_epoch: u64,
    pub reported_cert_index: u32,
    pub fraudulent_cert_hash: Hash,
}

impl Canonical for FraudReport {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.reported_epoch)
            .u32(self.reported_cert_index)
            .hash(&self.fraudulent_cert_hash);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BTList {
    pub transfers: Vec<BackwardTransfer>,
    pub epoch: u64,
    pub list_index: u32,
}

impl BTList {
    pub fn total(&self) -> Coins {
        self.transfers.iter().map(|t| t.amount).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossChainCertificate {
    pub sidechain_id: LedgerId,
    pub epoch_number: u64,
    pub cert_index: u32,
    pub bt_list: Vec<BackwardTransfer>,
    pub certifier_withdrawals: Vec<PubKey>,
    pub fraud_reports: Vec<FraudReport>,
    pub agg_sig: AggregatedSignature,
}

impl CrossChainCertificate {
    pub fn unsigned(
        sidechain_id: LedgerId,
        epoch_number: u64,
        cert_index: u32,
        bt_list: Vec<BackwardTransfer>,
    ) -> Self {
        CrossChainCertificate {
            sidechain_id,
            epoch_number,
            cert_index,
            bt_list,
            certifier_withdrawals: Vec::new(),
            fraud_reports: Vec::new(),
            agg_sig: AggregatedSignature::default(),
        }
    }

    /// Hash of everything except the aggregated signature. This is the message
    /// certifiers sign and the value fraud detection compares.
    pub fn payload_hash(&self) -> Hash {
        let mut enc = Encoder::tagged("cccert-payload");
        enc.put(&self.sidechain_id)
            .u64(self.epoch_number)
            .u32(self.cert_index)
            .list(&self.bt_list)
            .list(&self.certifier_withdrawals)
            .list(&self.fraud_reports);
        enc.finish_hash()
    }

    pub fn total_amount(&self) -> Coins {
        self.bt_list.iter().map(|t| t.amount).sum()
    }

    pub fn slot(&self) -> (u64, u32) {
        (self.epoch_number, self.cert_index)
    }
}

impl Canonical for CrossChainCertificate {
    fn encode(&self, enc: &mut Encoder) {
        enc.str("cccert")
            .hash(&self.payload_hash())
            .put(&self.agg_sig);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{aggregate_signatures, KeyPair};

    #[test]
    fn payload_hash_ignores_signatures() {
        let id = LedgerId::from_name("sc");
        let receiver = KeyPair::from_name("r").address();
        let mut cert = CrossChainCertificate::unsigned(
            id,
            3,
            0,
            vec![BackwardTransfer {
                amount: 50,
                receiver,
            }],
        );
        let payload = cert.payload_hash();
        let full = cert.canonical_hash();
        let k = KeyPair::from_name("c");
        cert.agg_sig = aggregate_signatures(&[k.sign(payload)]).unwrap();
        assert_eq!(cert.payload_hash(), payload);
        assert_ne!(cert.canonical_hash(), full);
    }

    #[test]
    fn payload_hash_covers_every_field() {
        let id = LedgerId::from_name("sc");
        let receiver = KeyPair::from_name("r").address();
        let base = CrossChainCertificate::unsigned(
            id,
            3,
            0,
            vec![BackwardTransfer {
                amount: 50,
                receiver,
            }],
        );
        let mut variants = vec![];
        let mut v = base.clone();
        v.epoch_number = 4;
        variants.push(v);
        let mut v = base.clone();
        v.cert_index = 1;
        variants.push(v);
        let mut v = base.clone();
        v.bt_list[0].amount = 51;
        variants.push(v);
        let mut v = base.clone();
        v.bt_list[0].receiver = KeyPair::from_name("thief").address();
        variants.push(v);
        let mut v = base.clone();
        v.certifier_withdrawals
            .push(KeyPair::from_name("c").public());
        variants.push(v);
        let mut v = base.clone();
        v.fraud_reports.push(FraudReport {
            reported_epoch: 2,
            reported_cert_index: 0,
            fraudulent_cert_hash: Hash::ZERO,
        });
        variants.push(v);
        for v in variants {
            assert_ne!(v.payload_hash(), base.payload_hash());
        }
    }
}
