use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::audit::audit_world;
use super::config::{
    expand_names, ActorSpec, CertifierPolicySpec, FaultSpec, ForgerPolicySpec, FraudMode,
    ScenarioConfig, Schedule,
};
use super::events::{Event, EventLog};
use super::report::{fold_report, SimReport};
use super::SimError;
use crate::cct::{BackwardTransfer, CrossChainCertificate, Finalized, PlannedCert};
use crate::chain::{aggregate_signatures, Address, Canonical, Coins, Hash, KeyPair, PubKey};
use crate::mainchain::{
    proof_hash_for, BlockReceipt, CertifierRegTx, CertifierWithdrawTx, CreateSidechainTx, LedgerId,
    Mainchain, MainchainBlock, MainchainState, McTx, SendingTx, SidechainParams, TxEffect,
};
use crate::sidechain::{
    forge_block, CertifierSignature, ForgePolicy, Mempool, ScEvent, SidechainChain, SidechainState,
    SlotId, WithdrawalRequest,
};

/// Snapshots kept by the mainchain; bounds how deep a reorg can go.
const SNAPSHOT_RETENTION: usize = 64;

const MC_ACTOR: &str = "mainchain";
const SIM_ACTOR: &str = "sim";

#[derive(Debug, Clone)]
pub struct User {
    pub name: String,
    pub key: KeyPair,
    pub sidechain: usize,
    pub deposits: Vec<Schedule>,
    pub withdrawals: Vec<Schedule>,
    mc_nonce: u64,
    sc_nonce: u64,
}

#[derive(Debug, Clone)]
pub struct Forger {
    pub name: String,
    pub key: KeyPair,
    pub policy: ForgerPolicySpec,
}

#[derive(Debug, Clone)]
pub struct Certifier {
    pub name: String,
    pub key: KeyPair,
    pub sidechain: usize,
    pub register_at: u64,
    pub withdraw_at: Option<u64>,
    pub policy: CertifierPolicySpec,
}

impl Certifier {
    fn colludes(&self) -> Option<FraudMode> {
        match self.policy {
            CertifierPolicySpec::SignFraudulent { mode } => Some(mode),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SidechainInstance {
    pub name: String,
    pub params: SidechainParams,
    pub slots_per_epoch: u64,
    pub creator: KeyPair,
    pub create_at: u64,
    pub forgers: Vec<Forger>,
    pub chain: Option<SidechainChain>,
    pub mempool: Mempool,
    /// Epochs for which colluders already attempted fraud.
    fraud_attempted: BTreeSet<(u64, u32)>,
}

impl SidechainInstance {
    pub fn id(&self) -> LedgerId {
        self.params.ledger_id
    }

    fn stakes(&self, cfg: &ScenarioConfig) -> BTreeMap<PubKey, u64> {
        let mut stakes = BTreeMap::new();
        for a in &cfg.actors {
            if let ActorSpec::Forger(f) = a {
                if f.sidechain == self.name {
                    for n in expand_names(&f.name, f.count) {
                        *stakes.entry(KeyPair::from_name(&n).public()).or_insert(0) += f.stake;
                    }
                }
            }
        }
        stakes
    }
}

#[derive(Debug, Clone)]
struct PoolTx {
    tx: McTx,
    actor: String,
    fraud: bool,
}

/// The whole simulated system: one mainchain, its sidechains and all actors,
/// advanced one mainchain block per step.
#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub mc: Mainchain,
    pub sidechains: Vec<SidechainInstance>,
    pub users: Vec<User>,
    pub certifiers: Vec<Certifier>,
    pub log: EventLog,
    pub audits_run: u64,
    pool: Vec<PoolTx>,
    rng: ChaCha8Rng,
    names: BTreeMap<PubKey, String>,
}

impl World {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut balances: BTreeMap<Address, Coins> = BTreeMap::new();
        let mut names = BTreeMap::new();
        let mut sidechains = Vec::new();
        for spec in &config.sidechains {
            let creator = KeyPair::from_name(&spec.creator_name());
            *balances.entry(creator.address()).or_insert(0) += config.deployment_fee;
            names.insert(creator.public(), spec.creator_name());
            sidechains.push(SidechainInstance {
                name: spec.name.clone(),
                params: spec.params(),
                slots_per_epoch: spec.slots_per_epoch,
                creator,
                create_at: spec.create_at,
                forgers: Vec::new(),
                chain: None,
                mempool: Mempool::default(),
                fraud_attempted: BTreeSet::new(),
            });
        }

        let (mut users, mut certifiers) = (Vec::new(), Vec::new());
        for actor in &config.actors {
            match actor {
                ActorSpec::User(u) => {
                    let sc = config.sidechain_index(&u.sidechain).expect("validated");
                    for name in expand_names(&u.name, u.count) {
                        let key = KeyPair::from_name(&name);
                        *balances.entry(key.address()).or_insert(0) += u.funds;
                        names.insert(key.public(), name.clone());
                        users.push(User {
                            name,
                            key,
                            sidechain: sc,
                            deposits: u.deposits.clone(),
                            withdrawals: u.withdrawals.clone(),
                            mc_nonce: 0,
                            sc_nonce: 0,
                        });
                    }
                }
                ActorSpec::Forger(f) => {
                    let sc = config.sidechain_index(&f.sidechain).expect("validated");
                    for name in expand_names(&f.name, f.count) {
                        let key = KeyPair::from_name(&name);
                        names.insert(key.public(), name.clone());
                        sidechains[sc].forgers.push(Forger {
                            name,
                            key,
                            policy: f.policy,
                        });
                    }
                }
                ActorSpec::Certifier(c) => {
                    let sc = config.sidechain_index(&c.sidechain).expect("validated");
                    for name in expand_names(&c.name, c.count) {
                        let key = KeyPair::from_name(&name);
                        *balances.entry(key.address()).or_insert(0) +=
                            sidechains[sc].params.cert_depo;
                        names.insert(key.public(), name.clone());
                        certifiers.push(Certifier {
                            name,
                            key,
                            sidechain: sc,
                            register_at: c.register_at,
                            withdraw_at: c.withdraw_at,
                            policy: c.policy,
                        });
                    }
                }
            }
        }

        let genesis = MainchainState::genesis(balances, config.deployment_fee);
        Ok(World {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            mc: Mainchain::new(genesis, SNAPSHOT_RETENTION),
            sidechains,
            users,
            certifiers,
            log: EventLog::default(),
            audits_run: 0,
            pool: Vec::new(),
            names,
        })
    }

    pub fn name_of(&self, pk: &PubKey) -> String {
        self.names
            .get(pk)
            .cloned()
            .unwrap_or_else(|| pk.as_hash().short())
    }

    pub fn is_done(&self) -> bool {
        self.mc.height() >= self.config.mc_blocks
    }

    pub fn run(&mut self) -> Result<(), SimError> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn report(&self) -> SimReport {
        fold_report(&self.config, &self.log.events, self.audits_run)
    }

    /// Mines one mainchain block, lets every sidechain forge its slot, runs
    /// the actors and audits the result.
    pub fn step(&mut self) -> Result<(), SimError> {
        let h = self.mc.height() + 1;
        self.schedule_mc_txs(h);
        if self
            .faults_at(h)
            .any(|f| matches!(f, FaultSpec::DropCertificate { .. }))
        {
            self.drop_pending_certificates(h);
        }
        let reorg_depth = self.faults_at(h).find_map(|f| match f {
            FaultSpec::McReorg { depth, .. } => Some(depth),
            _ => None,
        });
        match reorg_depth {
            Some(depth) => self.mine_fork(h, depth)?,
            None => self.mine_block(h)?,
        }
        self.instantiate_sidechains(h);
        for sc in 0..self.sidechains.len() {
            self.forge_slot(sc, h);
        }
        self.collect_signatures();
        self.schedule_withdrawals(h);
        self.submit_certificates(h);

        let violations = audit_world(self);
        self.audits_run += 1;
        if !violations.is_empty() {
            let seq = self.log.len() as u64;
            for v in &violations {
                self.emit(Event::new(h, SIM_ACTOR, "invariant_violation").note(v.clone()));
            }
            return Err(SimError::InvariantViolation {
                step: h,
                seq,
                details: violations,
            });
        }
        Ok(())
    }

    fn faults_at(&self, h: u64) -> impl Iterator<Item = FaultSpec> + '_ {
        self.config
            .faults
            .iter()
            .copied()
            .filter(move |f| f.at() == h)
    }

    fn emit(&mut self, event: Event) {
        self.log.push(event);
    }

    fn sc_name_of(&self, id: &LedgerId) -> Option<String> {
        self.sidechains
            .iter()
            .find(|s| s.id() == *id)
            .map(|s| s.name.clone())
    }

    fn schedule_mc_txs(&mut self, h: u64) {
        let mut new = Vec::new();
        for sc in &self.sidechains {
            if sc.create_at == h {
                let tx = CreateSidechainTx::new(
                    &sc.creator,
                    sc.params.clone(),
                    self.config.deployment_fee,
                );
                new.push(PoolTx {
                    tx: McTx::CreateSidechain(tx),
                    actor: sc.creator_name(),
                    fraud: false,
                });
            }
        }
        let mc_blocks = self.config.mc_blocks;
        for user in &mut self.users {
            let id = self.sidechains[user.sidechain].id();
            for d in user.deposits.iter().filter(|d| d.fires_at(h, mc_blocks)) {
                let tx = SendingTx::new(&user.key, id, user.mc_nonce, user.key.address(), d.amount);
                user.mc_nonce += 1;
                new.push(PoolTx {
                    tx: McTx::Send(tx),
                    actor: user.name.clone(),
                    fraud: false,
                });
            }
        }
        for c in &self.certifiers {
            let sc = &self.sidechains[c.sidechain];
            if c.register_at == h {
                let tx = CertifierRegTx::new(&c.key, sc.id(), sc.params.cert_depo, 0);
                new.push(PoolTx {
                    tx: McTx::CertifierReg(tx),
                    actor: c.name.clone(),
                    fraud: false,
                });
            }
            if c.withdraw_at == Some(h) {
                let record = self
                    .mc
                    .state()
                    .peg(&sc.id())
                    .and_then(|p| p.certifiers.get(&c.key.public()));
                match record {
                    Some(rec) => {
                        let tx = CertifierWithdrawTx::new(&c.key, sc.id(), rec.reg_tx_id);
                        new.push(PoolTx {
                            tx: McTx::CertifierWithdraw(tx),
                            actor: c.name.clone(),
                            fraud: false,
                        });
                    }
                    None => self.log.push(
                        Event::new(h, c.name.clone(), "withdraw_skipped")
                            .sidechain(&sc.name)
                            .note("not registered"),
                    ),
                }
            }
        }
        self.pool.extend(new);
    }

    fn drop_pending_certificates(&mut self, h: u64) {
        let (dropped, kept): (Vec<PoolTx>, Vec<PoolTx>) = std::mem::take(&mut self.pool)
            .into_iter()
            .partition(|p| matches!(p.tx, McTx::Certificate(_)));
        self.pool = kept;
        for p in dropped {
            if let McTx::Certificate(c) = &p.tx {
                let name = self.sc_name_of(&c.sidechain_id).unwrap_or_default();
                self.emit(
                    Event::new(h, SIM_ACTOR, "certificate_dropped")
                        .sidechain(&name)
                        .epoch(c.epoch_number)
                        .index(c.cert_index)
                        .payload(c.canonical_hash()),
                );
            }
        }
    }

    /// Sequentially validates the pool against `base`; invalid transactions
    /// are discarded with a log entry.
    fn select_valid(&mut self, base: &MainchainState, h: u64) -> Vec<McTx> {
        let mut pool = std::mem::take(&mut self.pool);
        pool.sort_by_key(|p| !p.fraud);
        let mut scratch = base.clone();
        let mut txs = Vec::new();
        for p in pool {
            match scratch.apply_tx(&p.tx, h) {
                Ok(_) => txs.push(p.tx),
                Err(e) => {
                    let mut ev = Event::new(h, p.actor, "tx_rejected")
                        .payload(p.tx.canonical_hash())
                        .note(format!("{}: {e}", p.tx.kind()));
                    if let Some(name) = p.tx.sidechain().and_then(|id| self.sc_name_of(&id)) {
                        ev = ev.sidechain(&name);
                    }
                    if let McTx::Certificate(c) = &p.tx {
                        ev = ev
                            .epoch(c.epoch_number)
                            .index(c.cert_index)
                            .payload(c.canonical_hash());
                    }
                    self.emit(ev);
                }
            }
        }
        txs
    }

    fn mine_block(&mut self, h: u64) -> Result<(), SimError> {
        let base = self.mc.state().clone();
        let txs = self.select_valid(&base, h);
        let attempts = self.faults_at(h).find_map(|f| match f {
            FaultSpec::GrindProof { attempts, .. } => Some(attempts.max(1)),
            _ => None,
        });
        let seed = match attempts {
            Some(n) => {
                let parent = base.tip;
                let best = (0..n)
                    .map(|_| self.rng.next_u64())
                    .min_by_key(|&s| proof_hash_for(s, h, &parent))
                    .expect("at least one attempt");
                self.emit(Event::new(h, SIM_ACTOR, "proof_ground").note(format!("attempts={n}")));
                best
            }
            None => self.rng.next_u64(),
        };
        let block = base.produce_block(txs, seed).map_err(SimError::internal)?;
        let hash = block.hash();
        let receipt = self
            .mc
            .push_block(block)
            .map_err(SimError::internal)?
            .clone();
        self.log_mc_block(h, hash, &receipt);
        Ok(())
    }

    /// Mines `depth + 1` blocks on the ancestor `depth` blocks below the tip,
    /// the last carrying the pool. Transactions of reverted blocks go back
    /// to the pool.
    fn mine_fork(&mut self, h: u64, depth: u64) -> Result<(), SimError> {
        let ancestor = h - 1 - depth;
        let mut state = self
            .mc
            .state_at(ancestor)
            .ok_or_else(|| SimError::internal("reorg beyond snapshots"))?
            .clone();
        let mut fork = Vec::new();
        for _ in 0..depth {
            let block = state
                .produce_block(Vec::new(), self.rng.next_u64())
                .map_err(SimError::internal)?;
            state.apply_block(&block).map_err(SimError::internal)?;
            fork.push(block);
        }
        let txs = self.select_valid(&state, h);
        fork.push(
            state
                .produce_block(txs, self.rng.next_u64())
                .map_err(SimError::internal)?,
        );
        let hashes: Vec<Hash> = fork.iter().map(MainchainBlock::hash).collect();
        let outcome = self.mc.apply_reorg(fork).map_err(SimError::internal)?;

        self.emit(
            Event::new(h, SIM_ACTOR, "mc_reorg").note(format!("depth={depth} ancestor={ancestor}")),
        );
        let mut returned = Vec::new();
        for b in &outcome.reverted {
            self.emit(
                Event::new(h, MC_ACTOR, "mc_block_reverted")
                    .payload(b.hash())
                    .note(format!("height={}", b.height())),
            );
            returned.extend(b.transactions.iter().cloned());
        }
        for (i, receipt) in outcome.receipts.iter().enumerate() {
            self.log_mc_block(ancestor + 1 + i as u64, hashes[i], receipt);
        }
        self.pool.extend(returned.into_iter().map(|tx| PoolTx {
            tx,
            actor: SIM_ACTOR.into(),
            fraud: false,
        }));

        let reverted: Vec<Hash> = outcome.reverted.iter().map(MainchainBlock::hash).collect();
        for sc in 0..self.sidechains.len() {
            let Some(chain) = self.sidechains[sc].chain.as_mut() else {
                continue;
            };
            match chain.handle_mc_reorg(&reverted) {
                Ok(removed) => {
                    let name = self.sidechains[sc].name.clone();
                    for b in removed {
                        let mempool = &mut self.sidechains[sc].mempool;
                        mempool
                            .withdrawals
                            .extend(b.withdrawal_requests.iter().cloned());
                        mempool
                            .signatures
                            .extend(b.certifier_signatures.iter().cloned());
                        self.log.push(
                            Event::new(h, SIM_ACTOR, "sc_block_reverted")
                                .sidechain(&name)
                                .payload(b.hash())
                                .note(format!("height={}", b.height)),
                        );
                    }
                }
                Err(e) => return Err(SimError::internal(e)),
            }
        }
        Ok(())
    }

    fn log_mc_block(&mut self, h: u64, hash: Hash, receipt: &BlockReceipt) {
        self.emit(
            Event::new(h, MC_ACTOR, "mc_block")
                .block(hash)
                .payload(hash),
        );
        for fx in &receipt.effects {
            let ev = |kind: &str, id: &LedgerId| {
                let mut e = Event::new(h, MC_ACTOR, kind).block(hash);
                if let Some(n) = self.sc_name_of(id) {
                    e = e.sidechain(&n);
                }
                e
            };
            let mut out = Vec::new();
            match fx {
                TxEffect::SidechainCreated { sidechain, fee } => {
                    out.push(ev("sidechain_created", sidechain).amount(*fee))
                }
                TxEffect::ForwardTransfer {
                    sidechain, amount, ..
                } => out.push(ev("forward_transfer", sidechain).amount(*amount)),
                TxEffect::CertifierRegistered {
                    sidechain,
                    pub_key,
                    reg_tx_id,
                } => out.push(
                    ev("certifier_registered", sidechain)
                        .payload(*reg_tx_id)
                        .note(self.name_of(pub_key)),
                ),
                TxEffect::CertifierWithdrawRequested {
                    sidechain,
                    pub_key,
                    release_epoch,
                } => out.push(
                    ev("certifier_withdraw_requested", sidechain)
                        .epoch(*release_epoch)
                        .note(self.name_of(pub_key)),
                ),
                TxEffect::CertificateAccepted {
                    sidechain,
                    epoch,
                    cert_index,
                    total,
                    cert_hash,
                    punished,
                } => {
                    out.push(
                        ev("certificate_accepted", sidechain)
                            .epoch(*epoch)
                            .index(*cert_index)
                            .amount(*total)
                            .payload(*cert_hash),
                    );
                    for (pk, destroyed) in punished {
                        out.push(
                            ev("certifier_punished", sidechain)
                                .amount(*destroyed)
                                .note(self.name_of(pk)),
                        );
                    }
                }
            }
            for e in out {
                self.emit(e);
            }
        }
        for (id, fx) in &receipt.peg {
            let name = self.sc_name_of(id).unwrap_or_default();
            if let Some(epoch) = fx.committee_formed {
                let committee = self
                    .mc
                    .state_at(h)
                    .and_then(|s| s.peg(id))
                    .and_then(|p| p.committee(epoch));
                let note = committee
                    .map(|c| format!("eligible={} groups={}", c.eligible.len(), c.groups.len()));
                let mut e = Event::new(h, MC_ACTOR, "committee_formed")
                    .sidechain(&name)
                    .block(hash)
                    .epoch(epoch);
                if let Some(n) = note {
                    e = e.note(n);
                }
                self.emit(e);
            }
            for (pk, amount) in &fx.released {
                let who = self.name_of(pk);
                self.emit(
                    Event::new(h, MC_ACTOR, "deposit_released")
                        .sidechain(&name)
                        .block(hash)
                        .amount(*amount)
                        .note(who),
                );
            }
        }
    }

    fn instantiate_sidechains(&mut self, h: u64) {
        let cfg = self.config.clone();
        for sc in &mut self.sidechains {
            if sc.chain.is_some() {
                continue;
            }
            if let Some(peg) = self.mc.state().peg(&sc.id()) {
                let genesis = SidechainState::genesis(
                    sc.params.clone(),
                    peg.created_at,
                    sc.slots_per_epoch,
                    sc.stakes(&cfg),
                );
                sc.chain = Some(SidechainChain::new(genesis));
                self.log.push(
                    Event::new(h, SIM_ACTOR, "sidechain_genesis")
                        .sidechain(&sc.name)
                        .epoch(peg.created_at),
                );
            }
        }
    }

    fn forge_slot(&mut self, sc: usize, h: u64) {
        let inst = &self.sidechains[sc];
        let Some(chain) = inst.chain.as_ref() else {
            return;
        };
        if h < inst.params.start_block {
            return;
        }
        let global = h - inst.params.start_block;
        let slot = SlotId::from_global(global, inst.slots_per_epoch);
        let state = chain.state();
        let Ok(leader) = state.leader_for(slot) else {
            return;
        };
        let Some(forger) = inst
            .forgers
            .iter()
            .find(|f| f.key.public() == leader)
            .cloned()
        else {
            return;
        };
        let name = inst.name.clone();
        let policy = match forger.policy {
            ForgerPolicySpec::Honest => ForgePolicy::Honest,
            ForgerPolicySpec::OmitReferences => ForgePolicy::OmitReferences,
            ForgerPolicySpec::DropSyncedTxs => ForgePolicy::DropSyncedTxs,
            ForgerPolicySpec::SkipSlots { every } => {
                if every > 0 && global.is_multiple_of(every) {
                    self.emit(
                        Event::new(h, forger.name, "slot_skipped")
                            .sidechain(&name)
                            .note(format!("slot={global}")),
                    );
                    return;
                }
                ForgePolicy::Honest
            }
        };
        let block = match forge_block(state, &self.mc, &forger.key, slot, &inst.mempool, policy) {
            Ok(b) => b,
            Err(e) => {
                self.emit(
                    Event::new(h, forger.name, "forge_failed")
                        .sidechain(&name)
                        .note(e.to_string()),
                );
                return;
            }
        };
        let hash = block.hash();
        let chain = self.sidechains[sc].chain.as_mut().expect("checked above");
        match chain.push_block(block.clone(), &self.mc) {
            Ok(events) => {
                let state = chain.state().clone();
                self.sidechains[sc].mempool.prune(&state);
                self.emit(
                    Event::new(h, forger.name.clone(), "sc_block")
                        .sidechain(&name)
                        .block(hash)
                        .payload(hash)
                        .note(format!(
                            "height={} slot={} refs={}",
                            block.height,
                            global,
                            block.mc_refs.len()
                        )),
                );
                for e in events {
                    self.log_sc_event(h, &forger.name, &name, hash, e);
                }
            }
            Err(e) => {
                self.emit(
                    Event::new(h, forger.name, "sc_block_rejected")
                        .sidechain(&name)
                        .payload(hash)
                        .note(e.to_string()),
                );
            }
        }
    }

    fn log_sc_event(&mut self, h: u64, forger: &str, sc: &str, block: Hash, event: ScEvent) {
        let base = |kind: &str| Event::new(h, forger, kind).sidechain(sc).block(block);
        let events = match event {
            ScEvent::TransferCredited { amount, .. } => {
                vec![base("transfer_credited").amount(amount)]
            }
            ScEvent::CertifierSynced { pub_key, withdraw } => {
                vec![base("certifier_synced")
                    .note(format!("{} withdraw={withdraw}", self.name_of(&pub_key)))]
            }
            ScEvent::RoundOpened {
                epoch,
                certificates,
                transfers,
                carried,
            } => vec![base("round_opened").epoch(epoch).note(format!(
                "certificates={certificates} transfers={transfers} queued={carried}"
            ))],
            ScEvent::RoundClosed {
                epoch,
                finalized,
                insufficient,
                carried,
            } => {
                let mut v = vec![base("round_closed").epoch(epoch).note(format!(
                    "finalized={} insufficient={} carried={carried}",
                    finalized.len(),
                    insufficient.len()
                ))];
                v.extend(
                    insufficient
                        .into_iter()
                        .map(|i| base("certificate_insufficient").epoch(epoch).index(i)),
                );
                v
            }
            ScEvent::CertificateExpired {
                epoch,
                cert_index,
                carried,
            } => {
                vec![base("certificate_expired")
                    .epoch(epoch)
                    .index(cert_index)
                    .note(format!("carried={carried}"))]
            }
            ScEvent::CertificatePaid {
                epoch,
                cert_index,
                net,
                rewards,
                burned,
                request_ids,
            } => {
                let mut v = vec![
                    base("certificate_paid")
                        .epoch(epoch)
                        .index(cert_index)
                        .amount(net),
                    base("rewards_paid")
                        .epoch(epoch)
                        .index(cert_index)
                        .amount(rewards),
                    base("rewards_burned")
                        .epoch(epoch)
                        .index(cert_index)
                        .amount(burned),
                ];
                v.extend(request_ids.into_iter().map(|id| {
                    base("withdrawal_paid")
                        .epoch(epoch)
                        .index(cert_index)
                        .payload(id)
                }));
                v
            }
            ScEvent::FraudDetected { report, lost } => vec![base("fraud_detected")
                .epoch(report.reported_epoch)
                .index(report.reported_cert_index)
                .payload(report.fraudulent_cert_hash)
                .amount(lost)],
            ScEvent::ReportDropped { report } => vec![base("report_dropped")
                .epoch(report.reported_epoch)
                .index(report.reported_cert_index)
                .payload(report.fraudulent_cert_hash)],
            ScEvent::WithdrawalQueued {
                request_id,
                gross,
                fee,
                origin_epoch,
            } => vec![base("withdrawal_queued")
                .payload(request_id)
                .amount(gross)
                .epoch(origin_epoch)
                .note(format!("fee={fee}"))],
            ScEvent::SignatureRecorded {
                epoch,
                cert_index,
                signer,
            } => {
                vec![base("signature_recorded")
                    .epoch(epoch)
                    .index(cert_index)
                    .note(self.name_of(&signer))]
            }
        };
        for e in events {
            self.emit(e);
        }
    }

    /// Certifiers sign every certificate of their group they have not yet
    /// signed. Colluders refuse certificates that carry fraud reports.
    fn collect_signatures(&mut self) {
        for c in &self.certifiers {
            if c.policy == CertifierPolicySpec::WithholdSignatures {
                continue;
            }
            let inst = &self.sidechains[c.sidechain];
            let Some(chain) = inst.chain.as_ref() else {
                continue;
            };
            let state = chain.state();
            let pk = c.key.public();
            let mut new = Vec::new();
            for (epoch, round) in &state.rounds {
                if state
                    .latest_ref_height()
                    .is_none_or(|r| r + 1 < round.signing_start)
                {
                    continue;
                }
                for planned in &round.certificates {
                    let idx = planned.cert.cert_index;
                    if !planned.group.contains(&pk) || round.has_signed(idx, &pk) {
                        continue;
                    }
                    if c.colludes().is_some() && !planned.cert.fraud_reports.is_empty() {
                        continue;
                    }
                    let queued =
                        inst.mempool.signatures.iter().any(|s| {
                            s.epoch == *epoch && s.cert_index == idx && s.sig.signer() == pk
                        });
                    if !queued {
                        new.push(CertifierSignature {
                            epoch: *epoch,
                            cert_index: idx,
                            sig: c.key.sign(planned.payload),
                        });
                    }
                }
            }
            self.sidechains[c.sidechain].mempool.signatures.extend(new);
        }
    }

    fn schedule_withdrawals(&mut self, h: u64) {
        let mc_blocks = self.config.mc_blocks;
        let mut events = Vec::new();
        for user in &mut self.users {
            let inst = &mut self.sidechains[user.sidechain];
            for w in user.withdrawals.iter().filter(|w| w.fires_at(h, mc_blocks)) {
                let p = &inst.params;
                let gross = w.amount;
                let fee = p.fee_for(gross);
                let ev = Event::new(h, user.name.clone(), "withdrawal_submitted")
                    .sidechain(&inst.name)
                    .amount(gross);
                let available = inst
                    .chain
                    .as_ref()
                    .map_or(0, |c| c.state().balance(&user.key.address()));
                let reserved: Coins = inst
                    .mempool
                    .withdrawals
                    .iter()
                    .filter(|r| r.requester == user.key.public())
                    .map(|r| r.gross)
                    .sum();
                let problem = if inst.chain.is_none() {
                    Some("sidechain not created")
                } else if available < gross + reserved {
                    Some("insufficient sidechain balance")
                } else if gross - fee < p.min_transfer_amount {
                    Some("below minimum transfer")
                } else if gross - fee > p.max_cert_amount() {
                    Some("above certificate cap")
                } else {
                    None
                };
                if let Some(why) = problem {
                    events.push(
                        Event::new(h, user.name.clone(), "withdrawal_skipped")
                            .sidechain(&inst.name)
                            .amount(gross)
                            .note(why),
                    );
                    continue;
                }
                let req = WithdrawalRequest::new(
                    &user.key,
                    user.key.address(),
                    gross,
                    fee,
                    user.sc_nonce,
                );
                user.sc_nonce += 1;
                events.push(ev.payload(req.id()));
                inst.mempool.withdrawals.push(req);
            }
        }
        for e in events {
            self.emit(e);
        }
    }

    fn submission_delayed(&self, target: u64) -> bool {
        self.config.faults.iter().any(|f| match *f {
            FaultSpec::DelaySubmission { at, blocks } => target >= at && target < at + blocks,
            _ => false,
        })
    }

    /// Queues certificates for block `h + 1`: fraudulent ones first, then
    /// every honest certificate that is signed, not yet accepted and inside
    /// its acceptance window.
    fn submit_certificates(&mut self, h: u64) {
        let target = h + 1;
        let pending: BTreeSet<Hash> = self
            .pool
            .iter()
            .filter_map(|p| match &p.tx {
                McTx::Certificate(c) => Some(c.canonical_hash()),
                _ => None,
            })
            .collect();
        let mut new = Vec::new();
        let mut events = Vec::new();
        for sc in 0..self.sidechains.len() {
            for (cert, actor) in self.fraudulent_certificates(sc, target) {
                events.push(
                    Event::new(h, actor.clone(), "fraud_submitted")
                        .sidechain(&self.sidechains[sc].name)
                        .epoch(cert.epoch_number)
                        .index(cert.cert_index)
                        .amount(cert.total_amount())
                        .payload(cert.canonical_hash()),
                );
                new.push(PoolTx {
                    tx: McTx::Certificate(cert),
                    actor,
                    fraud: true,
                });
            }

            let inst = &self.sidechains[sc];
            let Some(chain) = inst.chain.as_ref() else {
                continue;
            };
            let Some(peg) = self.mc.state().peg(&inst.id()) else {
                continue;
            };
            let state = chain.state();
            let mut ready: Vec<CrossChainCertificate> = Vec::new();
            for round in state.rounds.values().filter(|r| target >= r.deadline) {
                for planned in &round.certificates {
                    if let Finalized::Signed(c) =
                        round.finalize_certificate(planned.cert.cert_index)
                    {
                        ready.push(c);
                    }
                }
            }
            ready.extend(state.awaiting.values().map(|a| a.signed.clone()));
            for cert in ready {
                let (e, i) = cert.slot();
                if peg.accepted.contains_key(&(e, i))
                    || !inst.params.in_acceptance_window(e, target)
                {
                    continue;
                }
                if pending.contains(&cert.canonical_hash()) {
                    continue;
                }
                if self.submission_delayed(target) {
                    events.push(
                        Event::new(h, SIM_ACTOR, "submission_delayed")
                            .sidechain(&inst.name)
                            .epoch(e)
                            .index(i),
                    );
                    continue;
                }
                events.push(
                    Event::new(h, "certifiers", "certificate_submitted")
                        .sidechain(&inst.name)
                        .epoch(e)
                        .index(i)
                        .amount(cert.total_amount())
                        .payload(cert.canonical_hash()),
                );
                new.push(PoolTx {
                    tx: McTx::Certificate(cert),
                    actor: "certifiers".into(),
                    fraud: false,
                });
            }
        }
        for e in events {
            self.emit(e);
        }
        self.pool.extend(new);
    }

    /// Certificates forged by colluders holding a quorum of some group, built
    /// once per group when its acceptance window opens.
    fn fraudulent_certificates(
        &mut self,
        sc: usize,
        target: u64,
    ) -> Vec<(CrossChainCertificate, String)> {
        let inst = &self.sidechains[sc];
        let p = &inst.params;
        if target <= p.start_block {
            return Vec::new();
        }
        let Ok(pos) = p.withdrawal_epoch_of(target) else {
            return Vec::new();
        };
        if pos.offset != 0 || pos.epoch == 0 {
            return Vec::new();
        }
        let epoch = pos.epoch - 1;
        let Some(committee) = self
            .mc
            .state()
            .peg(&inst.id())
            .and_then(|peg| peg.committee(epoch))
        else {
            return Vec::new();
        };
        let colluders: Vec<&Certifier> = self
            .certifiers
            .iter()
            .filter(|c| c.sidechain == sc && c.colludes().is_some())
            .collect();
        let mut out = Vec::new();
        for (i, group) in committee.groups.iter().enumerate() {
            let index = i as u32;
            if inst.fraud_attempted.contains(&(epoch, index)) {
                continue;
            }
            let members: Vec<&&Certifier> = colluders
                .iter()
                .filter(|c| group.contains(&c.key.public()))
                .collect();
            if members.len() < p.quorum() {
                continue;
            }
            let mode = members[0].colludes().expect("filtered to colluders");
            let thief = members[0].key.address();
            let base = inst
                .chain
                .as_ref()
                .and_then(|c| planned_cert(c.state(), epoch, index));
            let bt_list = match mode {
                FraudMode::Redirect => match &base {
                    Some(b) if !b.cert.bt_list.is_empty() => b
                        .cert
                        .bt_list
                        .iter()
                        .map(|bt| BackwardTransfer {
                            amount: bt.amount,
                            receiver: thief,
                        })
                        .collect(),
                    _ => continue,
                },
                FraudMode::Max => vec![BackwardTransfer {
                    amount: p.max_cert_amount(),
                    receiver: thief,
                }],
            };
            let mut cert = CrossChainCertificate::unsigned(inst.id(), epoch, index, bt_list);
            if let Some(b) = &base {
                cert.fraud_reports = b.cert.fraud_reports.clone();
                cert.certifier_withdrawals = b.cert.certifier_withdrawals.clone();
            }
            let payload = cert.payload_hash();
            let sigs: Vec<_> = members.iter().map(|c| c.key.sign(payload)).collect();
            cert.agg_sig = aggregate_signatures(&sigs).expect("all parts sign one payload");
            out.push((cert, members[0].name.clone(), index));
        }
        let inst = &mut self.sidechains[sc];
        out.into_iter()
            .map(|(cert, name, index)| {
                inst.fraud_attempted.insert((epoch, index));
                (cert, name)
            })
            .collect()
    }
}

fn planned_cert(state: &SidechainState, epoch: u64, index: u32) -> Option<PlannedCert> {
    if let Some(aw) = state.awaiting.get(&(epoch, index)) {
        return Some(aw.planned.clone());
    }
    state
        .rounds
        .get(&epoch)
        .and_then(|r| r.certificates.get(index as usize))
        .cloned()
}

impl SidechainInstance {
    fn creator_name(&self) -> String {
        format!("creator:{}", self.name)
    }
}

/// Runs `config` to completion.
pub fn run_scenario(config: ScenarioConfig) -> Result<World, SimError> {
    let mut world = World::new(config)?;
    world.run()?;
    Ok(world)
}
