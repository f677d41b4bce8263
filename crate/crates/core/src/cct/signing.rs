use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cert::CrossChainCertificate;
use super::lottery::CertifierGroup;
use super::pipeline::QueuedTransfer;
use crate::chain::{aggregate_signatures, Coins, Hash, PubKey, Signature};

/// A certificate prepared for signing, together with the queue entries it
/// pays out and the fees they carried.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedCert {
    pub cert: CrossChainCertificate,
    pub payload: Hash,
    pub transfers: Vec<QueuedTransfer>,
    pub fee_pool: Coins,
    pub group: CertifierGroup,
}

impl PlannedCert {
    pub fn new(
        cert: CrossChainCertificate,
        transfers: Vec<QueuedTransfer>,
        group: CertifierGroup,
    ) -> Self {
        let fee_pool = transfers.iter().map(|t| t.fee).sum();
        PlannedCert {
            payload: cert.payload_hash(),
            cert,
            transfers,
            fee_pool,
            group,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SigningError {
    #[error("certificate {0} does not exist in this round")]
    UnknownCertificate(u32),
    #[error("signer is not a member of the certificate's group")]
    NotGroupMember,
    #[error("signature submitted outside the signing stage")]
    WrongStage,
    #[error("signature does not verify over the certificate payload")]
    BadSignature,
    #[error("signer already signed this certificate")]
    Duplicate,
}

/// Signatures collected on the sidechain during one epoch's signing stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigningRound {
    pub epoch: u64,
    pub quorum: usize,
    /// First mainchain height of the signing stage.
    pub signing_start: u64,
    /// First mainchain height of the next epoch; signatures must come earlier.
    pub deadline: u64,
    pub certificates: Vec<PlannedCert>,
    pub collected: Vec<(u32, Signature)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finalized {
    Signed(CrossChainCertificate),
    Insufficient { collected: usize, required: usize },
}

impl SigningRound {
    pub fn signatures_for(&self, cert_index: u32) -> Vec<Signature> {
        self.collected
            .iter()
            .filter(|(i, _)| *i == cert_index)
            .map(|(_, s)| s.clone())
            .collect()
    }

    pub fn has_signed(&self, cert_index: u32, signer: &PubKey) -> bool {
        self.collected
            .iter()
            .any(|(i, s)| *i == cert_index && s.signer() == *signer)
    }

    /// `height` is the latest mainchain height the sidechain has referenced.
    pub fn submit_signature(
        &mut self,
        certifier: PubKey,
        cert_index: u32,
        sig: Signature,
        height: u64,
    ) -> Result<(), SigningError> {
        let planned = self
            .certificates
            .get(cert_index as usize)
            .ok_or(SigningError::UnknownCertificate(cert_index))?;
        if !planned.group.contains(&certifier) {
            return Err(SigningError::NotGroupMember);
        }
        if height < self.signing_start || height >= self.deadline {
            return Err(SigningError::WrongStage);
        }
        if !sig.verify(&certifier, &planned.payload) {
            return Err(SigningError::BadSignature);
        }
        if self.has_signed(cert_index, &certifier) {
            return Err(SigningError::Duplicate);
        }
        self.collected.push((cert_index, sig));
        Ok(())
    }

    pub fn finalize_certificate(&self, cert_index: u32) -> Finalized {
        let Some(planned) = self.certificates.get(cert_index as usize) else {
            return Finalized::Insufficient {
                collected: 0,
                required: self.quorum,
            };
        };
        let sigs = self.signatures_for(cert_index);
        if sigs.len() < self.quorum {
            return Finalized::Insufficient {
                collected: sigs.len(),
                required: self.quorum,
            };
        }
        let agg =
            aggregate_signatures(&sigs).expect("round only stores signatures over the payload");
        let mut cert = planned.cert.clone();
        cert.agg_sig = agg;
        Finalized::Signed(cert)
    }

    pub fn signers_for(&self, cert_index: u32) -> BTreeSet<PubKey> {
        self.signatures_for(cert_index)
            .iter()
            .map(Signature::signer)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cct::lottery::build_certifier_groups;
    use crate::chain::{hash_bytes, verify_aggregate, KeyPair};
    use crate::mainchain::LedgerId;

    fn round(n: usize) -> (SigningRound, Vec<KeyPair>) {
        let keys: Vec<KeyPair> = (0..n)
            .map(|i| KeyPair::from_name(&format!("s{i}")))
            .collect();
        let ec = keys.iter().map(KeyPair::public).collect();
        let group = build_certifier_groups(&ec, &hash_bytes(b"r"), 0, n).remove(0);
        let cert = CrossChainCertificate::unsigned(LedgerId::from_name("a"), 0, 0, vec![]);
        let planned = PlannedCert::new(cert, vec![], group);
        let r = SigningRound {
            epoch: 0,
            quorum: n / 2 + 1,
            signing_start: 10,
            deadline: 20,
            certificates: vec![planned],
            collected: vec![],
        };
        (r, keys)
    }

    fn sign(r: &mut SigningRound, k: &KeyPair, h: u64) -> Result<(), SigningError> {
        let payload = r.certificates[0].payload;
        r.submit_signature(k.public(), 0, k.sign(payload), h)
    }

    #[test]
    fn member_signature_recorded_once() {
        let (mut r, keys) = round(5);
        sign(&mut r, &keys[0], 12).unwrap();
        assert_eq!(sign(&mut r, &keys[0], 13), Err(SigningError::Duplicate));
        assert_eq!(r.collected.len(), 1);
    }

    #[test]
    fn outsiders_and_late_signers_rejected() {
        let (mut r, keys) = round(5);
        assert_eq!(
            sign(&mut r, &KeyPair::from_name("x"), 12),
            Err(SigningError::NotGroupMember)
        );
        assert_eq!(sign(&mut r, &keys[1], 20), Err(SigningError::WrongStage));
        assert_eq!(sign(&mut r, &keys[1], 9), Err(SigningError::WrongStage));
        let wrong = keys[1].sign(hash_bytes(b"other"));
        assert_eq!(
            r.submit_signature(keys[1].public(), 0, wrong, 12),
            Err(SigningError::BadSignature)
        );
        assert_eq!(
            r.submit_signature(keys[1].public(), 4, keys[1].sign(Hash::ZERO), 12),
            Err(SigningError::UnknownCertificate(4))
        );
    }

    #[test]
    fn quorum_thresholds() {
        for (n, signed, ok) in [(5, 3, true), (5, 2, false), (4, 3, true), (4, 2, false)] {
            let (mut r, keys) = round(n);
            for k in &keys[..signed] {
                sign(&mut r, k, 15).unwrap();
            }
            match r.finalize_certificate(0) {
                Finalized::Signed(cert) => {
                    assert!(ok);
                    let allowed = r.certificates[0].group.member_set();
                    assert!(verify_aggregate(
                        &cert.agg_sig,
                        &cert.payload_hash(),
                        &allowed,
                        r.quorum
                    ));
                }
                Finalized::Insufficient {
                    collected,
                    required,
                } => {
                    assert!(!ok);
                    assert_eq!((collected, required), (signed, n / 2 + 1));
                }
            }
        }
    }
}
