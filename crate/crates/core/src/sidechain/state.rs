//! Sidechain state transition. Everything here is independent of the
//! mainchain view; reference validity against the mainchain is checked in
//! [`super::chain`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::block::{
    CertifierSignature, MainchainReference, RewardPayout, SidechainBlock, WithdrawalRequest,
};
use super::consensus::{genesis_randomness, next_randomness, slot_leader, SlotId};
use super::error::ScError;
use crate::cct::{
    build_certificates, collect_backward_transfers, compute_rewards, group_by_cap, report_against,
    BTList, CrossChainCertificate, Finalized, FraudReport, PlannedCert, QueuedTransfer,
    SigningRound,
};
use crate::chain::{Address, Canonical, Coins, Encoder, Hash, PubKey};
use crate::mainchain::{McTx, PegState, SidechainParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusState {
    pub epoch: u64,
    pub rand: Hash,
    /// Smallest proof hash referenced so far in `epoch`.
    pub referenced_min: Option<Hash>,
}

/// A certificate that reached quorum and is waiting for the mainchain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AwaitingCert {
    pub planned: PlannedCert,
    pub signed: CrossChainCertificate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScTotals {
    pub credited: Coins,
    pub withdrawn_gross: Coins,
    pub paid_net: Coins,
    pub fee_burned: Coins,
    pub rewards_paid: Coins,
    pub lost: Coins,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScEvent {
    TransferCredited {
        receiver: Address,
        amount: Coins,
    },
    CertifierSynced {
        pub_key: PubKey,
        withdraw: bool,
    },
    RoundOpened {
        epoch: u64,
        certificates: usize,
        transfers: usize,
        carried: usize,
    },
    RoundClosed {
        epoch: u64,
        finalized: Vec<u32>,
        insufficient: Vec<u32>,
        carried: usize,
    },
    CertificateExpired {
        epoch: u64,
        cert_index: u32,
        carried: usize,
    },
    CertificatePaid {
        epoch: u64,
        cert_index: u32,
        net: Coins,
        rewards: Coins,
        burned: Coins,
        request_ids: Vec<Hash>,
    },
    FraudDetected {
        report: FraudReport,
        lost: Coins,
    },
    ReportDropped {
        report: FraudReport,
    },
    WithdrawalQueued {
        request_id: Hash,
        gross: Coins,
        fee: Coins,
        origin_epoch: u64,
    },
    SignatureRecorded {
        epoch: u64,
        cert_index: u32,
        signer: PubKey,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidechainState {
    pub params: SidechainParams,
    pub slots_per_epoch: u64,
    pub stakes: BTreeMap<PubKey, u64>,
    pub height: u64,
    pub tip: Hash,
    pub last_slot: Option<u64>,
    /// Next mainchain height a block must reference.
    pub cursor: u64,
    pub last_ref: Option<(u64, Hash)>,
    pub consensus: ConsensusState,
    pub balances: BTreeMap<Address, Coins>,
    pub replica: PegState,
    pub queue: Vec<QueuedTransfer>,
    pub rounds: BTreeMap<u64, SigningRound>,
    pub awaiting: BTreeMap<(u64, u32), AwaitingCert>,
    pub pending_reports: Vec<FraudReport>,
    pub pending_notices: Vec<PubKey>,
    pub reward_ledger: BTreeMap<PubKey, Coins>,
    pub request_ids: BTreeSet<Hash>,
    pub totals: ScTotals,
}

pub fn genesis_hash(params: &SidechainParams) -> Hash {
    let mut enc = Encoder::tagged("sc-genesis");
    enc.put(&params.ledger_id);
    enc.finish_hash()
}

impl SidechainState {
    /// State anchored at the mainchain block that created the sidechain;
    /// the first reference is the block after it.
    pub fn genesis(
        params: SidechainParams,
        created_at: u64,
        slots_per_epoch: u64,
        stakes: BTreeMap<PubKey, u64>,
    ) -> Self {
        SidechainState {
            tip: genesis_hash(&params),
            consensus: ConsensusState {
                epoch: 0,
                rand: genesis_randomness(&params.ledger_id),
                referenced_min: None,
            },
            replica: PegState::new(params.clone(), created_at),
            params,
            slots_per_epoch: slots_per_epoch.max(1),
            stakes,
            height: 0,
            last_slot: None,
            cursor: created_at + 1,
            last_ref: None,
            balances: BTreeMap::new(),
            queue: Vec::new(),
            rounds: BTreeMap::new(),
            awaiting: BTreeMap::new(),
            pending_reports: Vec::new(),
            pending_notices: Vec::new(),
            reward_ledger: BTreeMap::new(),
            request_ids: BTreeSet::new(),
            totals: ScTotals::default(),
        }
    }

    pub fn balance(&self, addr: &Address) -> Coins {
        self.balances.get(addr).copied().unwrap_or(0)
    }

    pub fn circulating(&self) -> Coins {
        self.balances.values().sum()
    }

    /// Gross amount of every withdrawal not yet paid or lost.
    pub fn pending_gross(&self) -> Coins {
        let queued: Coins = self.queue.iter().map(|q| q.gross).sum();
        let in_rounds: Coins = self
            .rounds
            .values()
            .flat_map(|r| &r.certificates)
            .flat_map(|p| &p.transfers)
            .map(|q| q.gross)
            .sum();
        let awaiting: Coins = self
            .awaiting
            .values()
            .flat_map(|a| &a.planned.transfers)
            .map(|q| q.gross)
            .sum();
        queued + in_rounds + awaiting
    }

    pub fn latest_ref_height(&self) -> Option<u64> {
        self.last_ref.map(|(h, _)| h)
    }

    /// Mainchain height of global slot `slot`.
    pub fn slot_height(&self, slot: u64) -> u64 {
        self.params.start_block + slot
    }

    /// Leader of `slot` as seen from this state; advances randomness on a
    /// scratch copy when the slot is in a later consensus epoch.
    pub fn leader_for(&self, slot: SlotId) -> Result<PubKey, ScError> {
        let mut scratch = self.consensus.clone();
        advance_consensus(&mut scratch, slot.epoch);
        slot_leader(&self.stakes, &scratch.rand, slot.epoch, slot.index)
            .map_err(|_| ScError::ZeroStake)
    }

    /// Slot, parent and leader checks; moves consensus randomness forward.
    pub fn enter_slot(
        &mut self,
        slot: SlotId,
        parent: &Hash,
        height: u64,
        forger: &PubKey,
    ) -> Result<(), ScError> {
        if *parent != self.tip || height != self.height + 1 {
            return Err(ScError::BadParent);
        }
        if slot.index >= self.slots_per_epoch {
            return Err(ScError::BadSlot);
        }
        let global = slot.global(self.slots_per_epoch);
        if self.last_slot.is_some_and(|l| global <= l) {
            return Err(ScError::SlotNotIncreasing);
        }
        if self.leader_for(slot)? != *forger {
            return Err(ScError::WrongLeader);
        }
        advance_consensus(&mut self.consensus, slot.epoch);
        Ok(())
    }

    /// Applies references in order. Returns rewards paid out by certificates
    /// synced back from the mainchain.
    pub fn apply_references(
        &mut self,
        refs: &[MainchainReference],
        slot: u64,
        events: &mut Vec<ScEvent>,
    ) -> Result<Vec<RewardPayout>, ScError> {
        let mut payouts = Vec::new();
        for r in refs {
            if r.height != self.cursor {
                return Err(ScError::ReferenceGap {
                    expected: self.cursor,
                    got: r.height,
                });
            }
            if r.height > self.slot_height(slot) {
                return Err(ScError::FutureReference { height: r.height });
            }
            self.apply_reference(r, &mut payouts, events)?;
            self.cursor += 1;
            self.last_ref = Some((r.height, r.hash));
            let min = &mut self.consensus.referenced_min;
            if min.is_none_or(|m| r.proof_hash < m) {
                *min = Some(r.proof_hash);
            }
        }
        Ok(payouts)
    }

    fn apply_reference(
        &mut self,
        r: &MainchainReference,
        payouts: &mut Vec<RewardPayout>,
        events: &mut Vec<ScEvent>,
    ) -> Result<(), ScError> {
        let h = r.height;
        if let Ok(pos) = self.params.withdrawal_epoch_of(h) {
            if pos.offset == 0 && pos.epoch > 0 {
                self.close_round(pos.epoch - 1, events);
                self.expire_awaiting(pos.epoch, events);
            }
        }
        for st in &r.synced_txs {
            match &st.tx {
                McTx::Send(tx) => {
                    *self.balances.entry(tx.receive_acc).or_insert(0) += tx.amount;
                    self.totals.credited += tx.amount;
                    self.replica.credit_forward(tx.amount);
                    events.push(ScEvent::TransferCredited {
                        receiver: tx.receive_acc,
                        amount: tx.amount,
                    });
                }
                McTx::CertifierReg(tx) => {
                    let reg_tx_id = st.tx.canonical_hash();
                    self.replica
                        .register_certifier(tx.pub_key, reg_tx_id, tx.deposit, h)
                        .map_err(ScError::ReplicaDivergence)?;
                    events.push(ScEvent::CertifierSynced {
                        pub_key: tx.pub_key,
                        withdraw: false,
                    });
                }
                McTx::CertifierWithdraw(tx) => {
                    self.replica
                        .request_withdraw(&tx.pub_key, &tx.reg_tx_id, h)
                        .map_err(ScError::ReplicaDivergence)?;
                    self.pending_notices.push(tx.pub_key);
                    events.push(ScEvent::CertifierSynced {
                        pub_key: tx.pub_key,
                        withdraw: true,
                    });
                }
                McTx::Certificate(cert) => {
                    self.replica
                        .accept_certificate(cert, h)
                        .map_err(ScError::ReplicaDivergence)?;
                    self.on_synced_certificate(cert, payouts, events)?;
                }
                McTx::CreateSidechain(_) => return Err(ScError::UnexpectedSyncedTx),
            }
        }
        let fx = self.replica.on_block(h, r.proof_hash);
        if let Some(epoch) = fx.committee_formed {
            self.open_round(epoch, h, events)?;
        }
        Ok(())
    }

    fn requeue(&mut self, planned: PlannedCert) -> usize {
        if planned.cert.cert_index == 0 {
            self.pending_reports
                .extend(planned.cert.fraud_reports.iter().cloned());
            self.pending_notices
                .extend(planned.cert.certifier_withdrawals.iter().copied());
        }
        let n = planned.transfers.len();
        self.queue.extend(planned.transfers);
        n
    }

    fn close_round(&mut self, epoch: u64, events: &mut Vec<ScEvent>) {
        let Some(round) = self.rounds.remove(&epoch) else {
            return;
        };
        let (mut finalized, mut insufficient, mut carried) = (Vec::new(), Vec::new(), 0);
        for planned in round.certificates.iter() {
            let idx = planned.cert.cert_index;
            match round.finalize_certificate(idx) {
                Finalized::Signed(signed) => {
                    finalized.push(idx);
                    self.awaiting.insert(
                        (epoch, idx),
                        AwaitingCert {
                            planned: planned.clone(),
                            signed,
                        },
                    );
                }
                Finalized::Insufficient { .. } => {
                    insufficient.push(idx);
                    carried += self.requeue(planned.clone());
                }
            }
        }
        events.push(ScEvent::RoundClosed {
            epoch,
            finalized,
            insufficient,
            carried,
        });
    }

    /// Certificates whose acceptance window ended before `current_epoch`
    /// hand their transfers back to the queue.
    fn expire_awaiting(&mut self, current_epoch: u64, events: &mut Vec<ScEvent>) {
        let d = self.params.dispute_len;
        let expired: Vec<(u64, u32)> = self
            .awaiting
            .keys()
            .filter(|(e, _)| e + d < current_epoch)
            .copied()
            .collect();
        for key in expired {
            if let Some(aw) = self.awaiting.remove(&key) {
                let carried = self.requeue(aw.planned);
                events.push(ScEvent::CertificateExpired {
                    epoch: key.0,
                    cert_index: key.1,
                    carried,
                });
            }
        }
    }

    fn open_round(
        &mut self,
        epoch: u64,
        ref_height: u64,
        events: &mut Vec<ScEvent>,
    ) -> Result<(), ScError> {
        let p = self.params.clone();
        let due = collect_backward_transfers(&self.queue, &p, epoch, Some(ref_height))?;
        let ranges = group_by_cap(&due, p.max_cert_amount(), QueuedTransfer::net)
            .map_err(crate::cct::CctError::from)?;
        let lists: Vec<BTList> = ranges
            .iter()
            .enumerate()
            .map(|(i, r)| BTList {
                transfers: due[r.clone()]
                    .iter()
                    .map(QueuedTransfer::backward_transfer)
                    .collect(),
                epoch,
                list_index: i as u32,
            })
            .collect();

        let d = p.dispute_len;
        let (reports, stale): (Vec<FraudReport>, Vec<FraudReport>) =
            std::mem::take(&mut self.pending_reports)
                .into_iter()
                .partition(|r| r.reported_epoch < epoch && epoch <= r.reported_epoch + d);
        for report in stale {
            events.push(ScEvent::ReportDropped { report });
        }
        let mut reports = reports;
        reports.sort();
        reports.dedup();
        let notices = std::mem::take(&mut self.pending_notices);

        let groups = self
            .replica
            .committee(epoch)
            .map(|c| c.groups.clone())
            .unwrap_or_default();
        let certs = build_certificates(p.ledger_id, epoch, &lists, &groups, &reports, &notices);
        if certs.is_empty() {
            self.pending_reports = reports;
            self.pending_notices = notices;
        }

        let mut consumed = BTreeSet::new();
        let mut planned = Vec::with_capacity(certs.len());
        for (i, cert) in certs.into_iter().enumerate() {
            let transfers: Vec<QueuedTransfer> = ranges
                .get(i)
                .map(|r| due[r.clone()].to_vec())
                .unwrap_or_default();
            consumed.extend(transfers.iter().map(|t| t.request_id));
            planned.push(PlannedCert::new(cert, transfers, groups[i].clone()));
        }
        self.queue.retain(|q| !consumed.contains(&q.request_id));
        events.push(ScEvent::RoundOpened {
            epoch,
            certificates: planned.len(),
            transfers: consumed.len(),
            carried: self.queue.len(),
        });
        self.rounds.insert(
            epoch,
            SigningRound {
                epoch,
                quorum: p.quorum(),
                signing_start: p.signing_start(epoch),
                deadline: p.epoch_start(epoch + 1),
                certificates: planned,
                collected: Vec::new(),
            },
        );
        Ok(())
    }

    fn on_synced_certificate(
        &mut self,
        cert: &CrossChainCertificate,
        payouts: &mut Vec<RewardPayout>,
        events: &mut Vec<ScEvent>,
    ) -> Result<(), ScError> {
        let (epoch, cert_index) = cert.slot();
        match self.awaiting.remove(&cert.slot()) {
            Some(aw) if aw.planned.payload == cert.payload_hash() => {
                let plan = compute_rewards(&aw.planned, cert)?;
                for pk in &plan.signers {
                    if plan.per_signer > 0 {
                        *self.balances.entry(Address::from_pubkey(pk)).or_insert(0) +=
                            plan.per_signer;
                        *self.reward_ledger.entry(*pk).or_insert(0) += plan.per_signer;
                        payouts.push(RewardPayout {
                            pub_key: *pk,
                            amount: plan.per_signer,
                        });
                    }
                }
                let net = cert.total_amount();
                self.totals.paid_net += net;
                self.totals.rewards_paid += plan.paid_total();
                self.totals.fee_burned += plan.burned;
                events.push(ScEvent::CertificatePaid {
                    epoch,
                    cert_index,
                    net,
                    rewards: plan.paid_total(),
                    burned: plan.burned,
                    request_ids: aw.planned.transfers.iter().map(|t| t.request_id).collect(),
                });
            }
            other => {
                let lost = match other {
                    Some(aw) => {
                        let lost: Coins = aw.planned.transfers.iter().map(|t| t.gross).sum();
                        if cert_index == 0 {
                            self.pending_reports
                                .extend(aw.planned.cert.fraud_reports.iter().cloned());
                            self.pending_notices
                                .extend(aw.planned.cert.certifier_withdrawals.iter().copied());
                        }
                        lost
                    }
                    None => 0,
                };
                self.totals.lost += lost;
                let report = report_against(cert);
                self.pending_reports.push(report.clone());
                events.push(ScEvent::FraudDetected { report, lost });
            }
        }
        Ok(())
    }

    /// Epoch a request made now is processed in: the current one while the
    /// preparation stage is still open, else the next.
    pub fn origin_epoch_now(&self) -> u64 {
        match self
            .latest_ref_height()
            .map(|h| self.params.withdrawal_epoch_of(h))
        {
            Some(Ok(pos)) if pos.offset + 1 < self.params.prep_len => pos.epoch,
            Some(Ok(pos)) => pos.epoch + 1,
            _ => 0,
        }
    }

    pub fn apply_withdrawal(
        &mut self,
        req: &WithdrawalRequest,
        sc_height: u64,
        index_in_block: u32,
        events: &mut Vec<ScEvent>,
    ) -> Result<(), ScError> {
        let p = &self.params;
        if !req.signature_valid() {
            return Err(ScError::BadSignature);
        }
        let request_id = req.id();
        if self.request_ids.contains(&request_id) {
            return Err(ScError::DuplicateRequest);
        }
        let expected = p.fee_for(req.gross);
        if req.fee != expected {
            return Err(ScError::WrongFee {
                expected,
                got: req.fee,
            });
        }
        let net = req.gross - req.fee;
        if net < p.min_transfer_amount {
            return Err(ScError::BelowMinTransfer {
                amount: net,
                min: p.min_transfer_amount,
            });
        }
        if net > p.max_cert_amount() {
            return Err(ScError::ExceedsMaxCertAmount {
                amount: net,
                max: p.max_cert_amount(),
            });
        }
        let requester = Address::from_pubkey(&req.requester);
        let available = self.balance(&requester);
        if available < req.gross {
            return Err(ScError::InsufficientBalance {
                needed: req.gross,
                available,
            });
        }
        let origin_epoch = self.origin_epoch_now();
        self.balances.insert(requester, available - req.gross);
        self.request_ids.insert(request_id);
        self.totals.withdrawn_gross += req.gross;
        self.queue.push(QueuedTransfer {
            request_id,
            origin_epoch,
            sc_height,
            index_in_block,
            requester,
            receiver: req.receiver,
            gross: req.gross,
            fee: req.fee,
        });
        events.push(ScEvent::WithdrawalQueued {
            request_id,
            gross: req.gross,
            fee: req.fee,
            origin_epoch,
        });
        Ok(())
    }

    pub fn apply_signature(
        &mut self,
        s: &CertifierSignature,
        events: &mut Vec<ScEvent>,
    ) -> Result<(), ScError> {
        let height = self.latest_ref_height();
        let round = self
            .rounds
            .get_mut(&s.epoch)
            .ok_or(ScError::NoOpenRound { epoch: s.epoch })?;
        let height = height.ok_or(crate::cct::SigningError::WrongStage)?;
        round.submit_signature(s.sig.signer(), s.cert_index, s.sig.clone(), height)?;
        events.push(ScEvent::SignatureRecorded {
            epoch: s.epoch,
            cert_index: s.cert_index,
            signer: s.sig.signer(),
        });
        Ok(())
    }

    /// Full state transition for `block`. On error the state is unchanged.
    pub fn apply_block(&mut self, block: &SidechainBlock) -> Result<Vec<ScEvent>, ScError> {
        if !block.forger_sig.verify(&block.forger, &block.hash()) {
            return Err(ScError::BadForgerSignature);
        }
        let mut next = self.clone();
        let mut events = Vec::new();
        next.enter_slot(block.slot, &block.parent, block.height, &block.forger)?;
        let slot = block.slot.global(next.slots_per_epoch);
        let payouts = next.apply_references(&block.mc_refs, slot, &mut events)?;
        if payouts != block.reward_payouts {
            return Err(ScError::RewardMismatch);
        }
        for (i, w) in block.withdrawal_requests.iter().enumerate() {
            next.apply_withdrawal(w, block.height, i as u32, &mut events)?;
        }
        for s in &block.certifier_signatures {
            next.apply_signature(s, &mut events)?;
        }
        next.height = block.height;
        next.tip = block.hash();
        next.last_slot = Some(slot);
        *self = next;
        Ok(events)
    }
}

fn advance_consensus(c: &mut ConsensusState, to_epoch: u64) {
    while c.epoch < to_epoch {
        let next = c.epoch + 1;
        c.rand = next_randomness(&c.rand, c.referenced_min.as_ref(), next);
        c.referenced_min = None;
        c.epoch = next;
    }
}
