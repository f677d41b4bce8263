//! Simulated signatures.
//!
//! A signature is a deterministic tag over `(signer, message)` computed by
//! [`KeyPair::sign`]. Verification recomputes the tag, so any change to the
//! signer or message invalidates it. Actors only ever hold their own key
//! pairs, which is what makes forgery impossible inside the simulation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::codec::{Canonical, Encoder};
use super::hash::{hash_bytes, Hash};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PubKey(Hash);

impl PubKey {
    pub fn as_hash(&self) -> &Hash {
        &self.0
    }

    pub fn from_hash(h: Hash) -> Self {
        PubKey(h)
    }
}

impl fmt::Debug for PubKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PubKey({})", self.0.short())
    }
}

impl Canonical for PubKey {
    fn encode(&self, enc: &mut Encoder) {
        enc.hash(&self.0);
    }
}

/// An account on either ledger. Derived from a public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(Hash);

impl Address {
    pub fn from_pubkey(pk: &PubKey) -> Self {
        let mut enc = Encoder::tagged("address");
        enc.put(pk);
        Address(enc.finish_hash())
    }

    pub fn as_hash(&self) -> &Hash {
        &self.0
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.0.short())
    }
}

impl Canonical for Address {
    fn encode(&self, enc: &mut Encoder) {
        enc.hash(&self.0);
    }
}

/// Simulated key pair; the seed only determines the public key.
#[derive(Clone)]
pub struct KeyPair {
    public: PubKey,
}

impl KeyPair {
    pub fn from_seed(seed: &[u8]) -> Self {
        let secret = hash_bytes(seed);
        let mut enc = Encoder::tagged("pubkey");
        enc.hash(&secret);
        KeyPair {
            public: PubKey(enc.finish_hash()),
        }
    }

    /// Key pair for a named actor; names are unique within a scenario.
    pub fn from_name(name: &str) -> Self {
        let mut enc = Encoder::tagged("actor-key");
        enc.str(name);
        Self::from_seed(enc.as_slice())
    }

    pub fn public(&self) -> PubKey {
        self.public
    }

    pub fn address(&self) -> Address {
        Address::from_pubkey(&self.public)
    }

    pub fn sign(&self, message: Hash) -> Signature {
        Signature {
            signer: self.public,
            message,
            tag: signature_tag(&self.public, &message),
        }
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public)
            .finish()
    }
}

fn signature_tag(signer: &PubKey, message: &Hash) -> Hash {
    let mut enc = Encoder::tagged("sim-signature-v1");
    enc.put(signer).hash(message);
    enc.finish_hash()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    signer: PubKey,
    message: Hash,
    tag: Hash,
}

impl Signature {
    pub fn signer(&self) -> PubKey {
        self.signer
    }

    pub fn message(&self) -> Hash {
        self.message
    }

    /// Checks the tag against the signing construction only.
    pub fn is_well_formed(&self) -> bool {
        self.tag == signature_tag(&self.signer, &self.message)
    }

    pub fn verify(&self, signer: &PubKey, message: &Hash) -> bool {
        self.signer == *signer && self.message == *message && self.is_well_formed()
    }

    #[cfg(test)]
    pub(crate) fn with_tag(mut self, tag: Hash) -> Self {
        self.tag = tag;
        self
    }
}

impl Canonical for Signature {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.signer).hash(&self.message).hash(&self.tag);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AggregationScheme {
    /// Personal signatures concatenated in submission order.
    #[default]
    Concatenation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct AggregatedSignature {
    pub scheme: AggregationScheme,
    pub parts: Vec<Signature>,
}

impl AggregatedSignature {
    pub fn signers(&self) -> Vec<PubKey> {
        self.parts.iter().map(Signature::signer).collect()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

impl Canonical for AggregatedSignature {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(match self.scheme {
            AggregationScheme::Concatenation => 0,
        });
        enc.list(&self.parts);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("signatures cover different messages")]
    MixedMessages,
}

/// Concatenates personal signatures over one message. Later signatures from a
/// signer already present are dropped.
pub fn aggregate_signatures(sigs: &[Signature]) -> Result<AggregatedSignature, AggregateError> {
    if let Some(first) = sigs.first() {
        if sigs.iter().any(|s| s.message != first.message) {
            return Err(AggregateError::MixedMessages);
        }
    }
    let mut seen = BTreeSet::new();
    let parts = sigs
        .iter()
        .filter(|s| seen.insert(s.signer))
        .cloned()
        .collect();
    Ok(AggregatedSignature {
        scheme: AggregationScheme::Concatenation,
        parts,
    })
}

/// True iff at least `quorum` distinct signers produce verifying parts over
/// `message` and every such signer is in `allowed`.
pub fn verify_aggregate(
    agg: &AggregatedSignature,
    message: &Hash,
    allowed: &BTreeSet<PubKey>,
    quorum: usize,
) -> bool {
    let mut verified = BTreeSet::new();
    for part in &agg.parts {
        if part.verify(&part.signer, message) {
            if !allowed.contains(&part.signer) {
                return false;
            }
            verified.insert(part.signer);
        }
    }
    quorum >= 1 && verified.len() >= quorum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(n: usize) -> Vec<KeyPair> {
        (0..n)
            .map(|i| KeyPair::from_name(&format!("k{i}")))
            .collect()
    }

    #[test]
    fn sign_verify() {
        let k = KeyPair::from_name("alice");
        let m = hash_bytes(b"m");
        let sig = k.sign(m);
        assert!(sig.verify(&k.public(), &m));
        assert!(!sig.verify(&k.public(), &hash_bytes(b"other")));
        assert!(!sig.verify(&KeyPair::from_name("bob").public(), &m));
        assert!(!sig.clone().with_tag(Hash::ZERO).verify(&k.public(), &m));
    }

    #[test]
    fn aggregate_empty_and_ordered() {
        assert_eq!(aggregate_signatures(&[]).unwrap().len(), 0);
        let ks = keys(3);
        let m = hash_bytes(b"cert");
        let sigs: Vec<_> = ks.iter().map(|k| k.sign(m)).collect();
        let agg = aggregate_signatures(&sigs).unwrap();
        assert_eq!(
            agg.signers(),
            ks.iter().map(KeyPair::public).collect::<Vec<_>>()
        );
    }

    #[test]
    fn aggregate_dedups_every_duplicate_arrangement() {
        let ks = keys(2);
        let m = hash_bytes(b"cert");
        let (a, b) = (ks[0].sign(m), ks[1].sign(m));
        for arrangement in [
            vec![a.clone(), a.clone(), b.clone()],
            vec![a.clone(), b.clone(), a.clone()],
            vec![b.clone(), a.clone(), a.clone()],
        ] {
            let agg = aggregate_signatures(&arrangement).unwrap();
            assert_eq!(agg.len(), 2);
            // first occurrence wins, order preserved
            let mut expected = Vec::new();
            for s in &arrangement {
                if !expected.contains(&s.signer()) {
                    expected.push(s.signer());
                }
            }
            assert_eq!(agg.signers(), expected);
        }
    }

    #[test]
    fn mixed_messages_rejected() {
        let ks = keys(2);
        let sigs = vec![ks[0].sign(hash_bytes(b"a")), ks[1].sign(hash_bytes(b"b"))];
        assert_eq!(
            aggregate_signatures(&sigs),
            Err(AggregateError::MixedMessages)
        );
    }

    #[test]
    fn quorum_checks() {
        let ks = keys(5);
        let m = hash_bytes(b"cert");
        let allowed: BTreeSet<_> = ks.iter().map(KeyPair::public).collect();
        let three =
            aggregate_signatures(&ks[..3].iter().map(|k| k.sign(m)).collect::<Vec<_>>()).unwrap();
        assert!(verify_aggregate(&three, &m, &allowed, 3));
        let two =
            aggregate_signatures(&ks[..2].iter().map(|k| k.sign(m)).collect::<Vec<_>>()).unwrap();
        assert!(!verify_aggregate(&two, &m, &allowed, 3));
        assert!(!verify_aggregate(&three, &m, &allowed, 0));
    }

    #[test]
    fn any_outsider_signer_fails() {
        let ks = keys(6);
        let m = hash_bytes(b"cert");
        let sigs: Vec<_> = ks[..3].iter().map(|k| k.sign(m)).collect();
        let agg = aggregate_signatures(&sigs).unwrap();
        for excluded in 0..3 {
            let allowed: BTreeSet<_> = ks
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != excluded)
                .map(|(_, k)| k.public())
                .collect();
            assert!(!verify_aggregate(&agg, &m, &allowed, 3));
        }
    }
}
