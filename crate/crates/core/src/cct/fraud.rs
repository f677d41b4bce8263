use super::cert::{CrossChainCertificate, FraudReport};
use crate::chain::Canonical;

/// Report against `mc_accepted` when its payload differs from the certificate
/// the sidechain signed for the same slot. Signature sets are not compared.
pub fn detect_fraud(
    mc_accepted: &CrossChainCertificate,
    sc_expected: &CrossChainCertificate,
) -> Option<FraudReport> {
    if mc_accepted.payload_hash() == sc_expected.payload_hash() {
        None
    } else {
        Some(report_against(mc_accepted))
    }
}

/// Report for a certificate the sidechain never brought to quorum.
pub fn report_against(mc_accepted: &CrossChainCertificate) -> FraudReport {
    FraudReport {
        reported_epoch: mc_accepted.epoch_number,
        reported_cert_index: mc_accepted.cert_index,
        fraudulent_cert_hash: mc_accepted.canonical_hash(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cct::cert::BackwardTransfer;
    use crate::chain::{aggregate_signatures, KeyPair};
    use crate::mainchain::LedgerId;

    fn cert() -> CrossChainCertificate {
        let r = KeyPair::from_name("user").address();
        CrossChainCertificate::unsigned(
            LedgerId::from_name("s"),
            4,
            1,
            vec![BackwardTransfer {
                amount: 90,
                receiver: r,
            }],
        )
    }

    #[test]
    fn identical_is_clean() {
        assert_eq!(detect_fraud(&cert(), &cert()), None);
    }

    #[test]
    fn redirected_receiver_is_reported() {
        let mut fraud = cert();
        fraud.bt_list[0].receiver = KeyPair::from_name("thief").address();
        let report = detect_fraud(&fraud, &cert()).unwrap();
        assert_eq!((report.reported_epoch, report.reported_cert_index), (4, 1));
        assert_eq!(report.fraudulent_cert_hash, fraud.canonical_hash());
    }

    #[test]
    fn signature_only_difference_is_clean() {
        let c = cert();
        let mut signed = c.clone();
        let k = KeyPair::from_name("k");
        signed.agg_sig = aggregate_signatures(&[k.sign(c.payload_hash())]).unwrap();
        assert_eq!(detect_fraud(&signed, &c), None);
    }
}
