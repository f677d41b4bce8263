//! Per-sidechain peg bookkeeping on the mainchain: the safeguard balance, the
//! certifier registry and the certificate acceptance rules.
//!
//! The sidechain keeps a replica of this state built from the transactions it
//! syncs, so both sides derive identical certifier groups.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::certifier::{CertifierRecord, ParticipationEntry, RevocationRequest};
use super::error::McError;
use super::params::SidechainParams;
use crate::cct::{
    build_certifier_groups, eligible_certifiers, BackwardTransfer, CertifierGroup,
    CrossChainCertificate,
};
use crate::chain::{verify_aggregate, Canonical, Coins, Hash, PubKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochCommittee {
    pub randomness: Hash,
    pub eligible: BTreeSet<PubKey>,
    pub groups: Vec<CertifierGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptedCert {
    pub cert: CrossChainCertificate,
    pub payload: Hash,
    pub cert_hash: Hash,
    /// Group members whose signatures verified.
    pub signers: Vec<PubKey>,
    pub accepted_at: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertEffects {
    pub outputs: Vec<BackwardTransfer>,
    /// Newly punished certifiers with the deposit destroyed for each.
    pub punished: Vec<(PubKey, Coins)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PegBlockEffects {
    pub committee_formed: Option<u64>,
    pub released: Vec<(PubKey, Coins)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PegState {
    pub params: SidechainParams,
    pub created_at: u64,
    pub safeguard: Coins,
    pub forward_total: Coins,
    pub withdrawn_total: Coins,
    pub certifiers: BTreeMap<PubKey, CertifierRecord>,
    pub participation: Vec<ParticipationEntry>,
    /// Running minimum proof hash of the preparation stage in progress.
    pub prep_min: BTreeMap<u64, Hash>,
    pub committees: BTreeMap<u64, EpochCommittee>,
    pub accepted: BTreeMap<(u64, u32), AcceptedCert>,
    pub destroyed_deposits: Coins,
}

impl PegState {
    pub fn new(params: SidechainParams, created_at: u64) -> Self {
        PegState {
            params,
            created_at,
            safeguard: 0,
            forward_total: 0,
            withdrawn_total: 0,
            certifiers: BTreeMap::new(),
            participation: Vec::new(),
            prep_min: BTreeMap::new(),
            committees: BTreeMap::new(),
            accepted: BTreeMap::new(),
            destroyed_deposits: 0,
        }
    }

    pub fn credit_forward(&mut self, amount: Coins) {
        self.safeguard += amount;
        self.forward_total += amount;
    }

    pub fn committee(&self, epoch: u64) -> Option<&EpochCommittee> {
        self.committees.get(&epoch)
    }

    pub fn group(&self, epoch: u64, index: u32) -> Option<&CertifierGroup> {
        self.committees.get(&epoch)?.groups.get(index as usize)
    }

    /// Deposits currently held for this sidechain.
    pub fn locked_deposits(&self) -> Coins {
        self.certifiers.values().map(CertifierRecord::locked).sum()
    }

    /// Whether `pk` may register now. A released registration may be renewed.
    pub fn check_registration(&self, pk: &PubKey, deposit: Coins) -> Result<(), McError> {
        if deposit != self.params.cert_depo {
            return Err(McError::WrongDepositAmount {
                paid: deposit,
                required: self.params.cert_depo,
            });
        }
        match self.certifiers.get(pk) {
            Some(rec) if rec.released_at.is_none() => Err(McError::AlreadyRegistered),
            _ => Ok(()),
        }
    }

    pub fn register_certifier(
        &mut self,
        pk: PubKey,
        reg_tx_id: Hash,
        deposit: Coins,
        height: u64,
    ) -> Result<(), McError> {
        self.check_registration(&pk, deposit)?;
        let record = CertifierRecord {
            pub_key: pk,
            sidechain: self.params.ledger_id,
            deposit,
            reg_tx_id,
            registered_at_height: height,
            registered_at_epoch: self
                .params
                .withdrawal_epoch_of(height)
                .ok()
                .map(|p| p.epoch),
            withdrawal: None,
            punished_at: None,
            released_at: None,
        };
        self.certifiers.insert(pk, record);
        Ok(())
    }

    pub fn check_withdraw(
        &self,
        pk: &PubKey,
        reg_tx_id: &Hash,
    ) -> Result<&CertifierRecord, McError> {
        let rec = self
            .certifiers
            .get(pk)
            .filter(|r| r.reg_tx_id == *reg_tx_id && r.released_at.is_none())
            .ok_or(McError::UnknownCertifier)?;
        if rec.punished() {
            return Err(McError::AlreadyPunished);
        }
        if rec.withdrawal.is_some() {
            return Err(McError::AlreadyRequested);
        }
        Ok(rec)
    }

    pub fn request_withdraw(
        &mut self,
        pk: &PubKey,
        reg_tx_id: &Hash,
        height: u64,
    ) -> Result<RevocationRequest, McError> {
        self.check_withdraw(pk, reg_tx_id)?;
        let req = RevocationRequest::new(&self.params, height);
        if let Some(rec) = self.certifiers.get_mut(pk) {
            rec.withdrawal = Some(req.clone());
        }
        Ok(req)
    }

    /// All acceptance rules for `cert` at `height`, without side effects.
    /// Returns the verified signers.
    pub fn check_certificate(
        &self,
        cert: &CrossChainCertificate,
        height: u64,
    ) -> Result<Vec<PubKey>, McError> {
        let p = &self.params;
        let (epoch, index) = cert.slot();
        if !p.in_acceptance_window(epoch, height) {
            return Err(McError::OutsideAcceptanceWindow { epoch });
        }
        if self.accepted.contains_key(&(epoch, index)) {
            return Err(McError::DuplicateCertificate { epoch, index });
        }
        let group = self
            .group(epoch, index)
            .ok_or(McError::UnknownCertifierGroup { epoch, index })?;
        let members = group.member_set();
        let payload = cert.payload_hash();
        if !verify_aggregate(&cert.agg_sig, &payload, &members, p.quorum()) {
            return Err(McError::QuorumNotMet);
        }
        if let Some(bt) = cert
            .bt_list
            .iter()
            .find(|bt| bt.amount < p.min_transfer_amount)
        {
            return Err(McError::BelowMinTransfer {
                amount: bt.amount,
                min: p.min_transfer_amount,
            });
        }
        let total = cert
            .bt_list
            .iter()
            .try_fold(0u64, |acc, bt| acc.checked_add(bt.amount));
        let total = total.unwrap_or(u64::MAX);
        if total > p.max_cert_amount() {
            return Err(McError::ExceedsMaxCertAmount {
                total,
                max: p.max_cert_amount(),
            });
        }
        if total > self.safeguard {
            return Err(McError::ExceedsSafeguard {
                total,
                safeguard: self.safeguard,
            });
        }
        for report in &cert.fraud_reports {
            let key = (report.reported_epoch, report.reported_cert_index);
            let target_ok = self
                .accepted
                .get(&key)
                .is_some_and(|a| a.cert_hash == report.fraudulent_cert_hash);
            let in_window =
                report.reported_epoch < epoch && epoch <= report.reported_epoch + p.dispute_len;
            if !target_ok || !in_window {
                return Err(McError::InvalidFraudReport);
            }
        }
        let mut signers: BTreeSet<PubKey> = BTreeSet::new();
        for part in &cert.agg_sig.parts {
            if part.verify(&part.signer(), &payload) {
                signers.insert(part.signer());
            }
        }
        Ok(signers.into_iter().collect())
    }

    pub fn accept_certificate(
        &mut self,
        cert: &CrossChainCertificate,
        height: u64,
    ) -> Result<CertEffects, McError> {
        let signers = self.check_certificate(cert, height)?;
        let (epoch, index) = cert.slot();
        let total = cert.total_amount();
        self.safeguard -= total;
        self.withdrawn_total += total;
        let members = self
            .group(epoch, index)
            .map(|g| g.members.clone())
            .unwrap_or_default();
        self.participation.push(ParticipationEntry {
            epoch,
            cert_index: index,
            accepted_at: height,
            members,
        });

        let mut punished = Vec::new();
        for report in &cert.fraud_reports {
            let key = (report.reported_epoch, report.reported_cert_index);
            let targets = self
                .accepted
                .get(&key)
                .map(|a| a.signers.clone())
                .unwrap_or_default();
            for pk in targets {
                if let Some(rec) = self.certifiers.get_mut(&pk) {
                    if rec.punished() {
                        continue;
                    }
                    let destroyed = rec.locked();
                    rec.punished_at = Some(height);
                    self.destroyed_deposits += destroyed;
                    punished.push((pk, destroyed));
                }
            }
        }

        self.accepted.insert(
            (epoch, index),
            AcceptedCert {
                cert: cert.clone(),
                payload: cert.payload_hash(),
                cert_hash: cert.canonical_hash(),
                signers,
                accepted_at: height,
            },
        );
        Ok(CertEffects {
            outputs: cert.bt_list.clone(),
            punished,
        })
    }

    /// Bookkeeping run after the transactions of block `height`: randomness
    /// accumulation, committee formation at the last preparation block and
    /// deposit release.
    pub fn on_block(&mut self, height: u64, proof_hash: Hash) -> PegBlockEffects {
        let mut effects = PegBlockEffects::default();
        let Ok(pos) = self.params.withdrawal_epoch_of(height) else {
            return effects;
        };
        let epoch = pos.epoch;
        if pos.offset < self.params.prep_len {
            let slot = self.prep_min.entry(epoch).or_insert(proof_hash);
            if proof_hash < *slot {
                *slot = proof_hash;
            }
        }
        if height + 1 == self.params.signing_start(epoch) {
            if let Some(randomness) = self.prep_min.remove(&epoch) {
                let eligible = eligible_certifiers(
                    self.certifiers.values(),
                    &self.params,
                    epoch,
                    &self.participation,
                );
                let groups = build_certifier_groups(
                    &eligible,
                    &randomness,
                    epoch,
                    self.params.cert_group_size as usize,
                );
                self.committees.insert(
                    epoch,
                    EpochCommittee {
                        randomness,
                        eligible,
                        groups,
                    },
                );
                effects.committee_formed = Some(epoch);
            }
        }
        for rec in self.certifiers.values_mut() {
            let due = rec
                .withdrawal
                .as_ref()
                .is_some_and(|w| w.release_epoch <= epoch);
            if due && rec.released_at.is_none() && !rec.punished() {
                rec.released_at = Some(height);
                effects.released.push((rec.pub_key, rec.deposit));
            }
        }
        effects
    }
}
