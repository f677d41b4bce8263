use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::block::{proof_hash_for, tx_root, MainchainBlock, McBlockHeader};
use super::error::McError;
use super::params::LedgerId;
use super::peg::{PegBlockEffects, PegState};
use super::tx::{CertifierRegTx, CertifierWithdrawTx, CreateSidechainTx, McTx, SendingTx};
use crate::cct::{BackwardTransfer, CrossChainCertificate};
use crate::chain::{Address, Canonical, Coins, Hash, PubKey};

/// A mainchain output created by an accepted certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedOutput {
    pub sidechain: LedgerId,
    pub epoch: u64,
    pub cert_index: u32,
    pub receiver: Address,
    pub amount: Coins,
    pub height: u64,
}

/// Where every coin of the genesis supply has gone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyLedger {
    pub genesis: Coins,
    pub fees_burned: Coins,
    pub forward_burned: Coins,
    pub outputs_created: Coins,
    pub deposits_destroyed: Coins,
}

/// What a transaction did, for event logging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TxEffect {
    SidechainCreated {
        sidechain: LedgerId,
        fee: Coins,
    },
    ForwardTransfer {
        sidechain: LedgerId,
        receiver: Address,
        amount: Coins,
    },
    CertifierRegistered {
        sidechain: LedgerId,
        pub_key: PubKey,
        reg_tx_id: Hash,
    },
    CertifierWithdrawRequested {
        sidechain: LedgerId,
        pub_key: PubKey,
        release_epoch: u64,
    },
    CertificateAccepted {
        sidechain: LedgerId,
        epoch: u64,
        cert_index: u32,
        total: Coins,
        cert_hash: Hash,
        punished: Vec<(PubKey, Coins)>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockReceipt {
    pub effects: Vec<TxEffect>,
    pub peg: Vec<(LedgerId, PegBlockEffects)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MainchainState {
    pub height: u64,
    pub tip: Hash,
    pub tip_work: u64,
    pub deployment_fee: Coins,
    pub balances: BTreeMap<Address, Coins>,
    pub pegs: BTreeMap<LedgerId, PegState>,
    pub created_outputs: Vec<CreatedOutput>,
    pub seen_tx_ids: BTreeSet<Hash>,
    pub supply: SupplyLedger,
}

impl MainchainState {
    pub fn genesis(balances: BTreeMap<Address, Coins>, deployment_fee: Coins) -> Self {
        let genesis = MainchainBlock::genesis();
        let total = balances.values().sum();
        MainchainState {
            height: 0,
            tip: genesis.hash(),
            tip_work: genesis.header.cumulative_work,
            deployment_fee,
            balances,
            pegs: BTreeMap::new(),
            created_outputs: Vec::new(),
            seen_tx_ids: BTreeSet::new(),
            supply: SupplyLedger {
                genesis: total,
                ..SupplyLedger::default()
            },
        }
    }

    pub fn balance(&self, addr: &Address) -> Coins {
        self.balances.get(addr).copied().unwrap_or(0)
    }

    pub fn peg(&self, id: &LedgerId) -> Option<&PegState> {
        self.pegs.get(id)
    }

    pub fn safeguard(&self, id: &LedgerId) -> Option<Coins> {
        self.pegs.get(id).map(|p| p.safeguard)
    }

    /// Coins held in balances plus deposits still locked.
    pub fn circulating_supply(&self) -> Coins {
        let balances: Coins = self.balances.values().sum();
        let locked: Coins = self.pegs.values().map(PegState::locked_deposits).sum();
        balances + locked
    }

    fn debit(&mut self, addr: &Address, amount: Coins) -> Result<(), McError> {
        let available = self.balance(addr);
        if available < amount {
            return Err(McError::InsufficientBalance {
                needed: amount,
                available,
            });
        }
        self.balances.insert(*addr, available - amount);
        Ok(())
    }

    fn credit(&mut self, addr: &Address, amount: Coins) {
        *self.balances.entry(*addr).or_insert(0) += amount;
    }

    fn peg_mut(&mut self, id: &LedgerId) -> Result<&mut PegState, McError> {
        self.pegs.get_mut(id).ok_or(McError::UnknownSidechain(*id))
    }

    /// The height the next block will have; transactions are validated as if
    /// included there.
    pub fn next_height(&self) -> u64 {
        self.height + 1
    }

    pub fn process_create_sidechain(
        &mut self,
        tx: &CreateSidechainTx,
        height: u64,
    ) -> Result<TxEffect, McError> {
        let id = tx.params.ledger_id;
        if self.pegs.contains_key(&id) {
            return Err(McError::DuplicateLedgerId(id));
        }
        tx.params.validate()?;
        if tx.params.start_block <= height {
            return Err(McError::StartInPast {
                start_block: tx.params.start_block,
                height,
            });
        }
        if tx.fee < self.deployment_fee {
            return Err(McError::InsufficientDeploymentFee {
                paid: tx.fee,
                required: self.deployment_fee,
            });
        }
        if !tx.signature_valid() {
            return Err(McError::BadSignature);
        }
        self.debit(&Address::from_pubkey(&tx.creator), tx.fee)?;
        self.supply.fees_burned += tx.fee;
        self.pegs
            .insert(id, PegState::new(tx.params.clone(), height));
        Ok(TxEffect::SidechainCreated {
            sidechain: id,
            fee: tx.fee,
        })
    }

    pub fn process_sending_tx(&mut self, tx: &SendingTx, height: u64) -> Result<TxEffect, McError> {
        let peg = self
            .pegs
            .get(&tx.ledger_id)
            .ok_or(McError::UnknownSidechain(tx.ledger_id))?;
        if height < peg.params.start_block {
            return Err(McError::SidechainNotStarted {
                start_block: peg.params.start_block,
            });
        }
        if tx.amount == 0 {
            return Err(McError::ZeroAmount);
        }
        if !tx.signature_valid() {
            return Err(McError::BadSignature);
        }
        if self.seen_tx_ids.contains(&tx.tx_id) {
            return Err(McError::DuplicateTx(tx.tx_id));
        }
        self.debit(&tx.send_acc, tx.amount)?;
        self.seen_tx_ids.insert(tx.tx_id);
        self.supply.forward_burned += tx.amount;
        self.peg_mut(&tx.ledger_id)?.credit_forward(tx.amount);
        Ok(TxEffect::ForwardTransfer {
            sidechain: tx.ledger_id,
            receiver: tx.receive_acc,
            amount: tx.amount,
        })
    }

    pub fn process_certifier_reg(
        &mut self,
        tx: &CertifierRegTx,
        height: u64,
    ) -> Result<TxEffect, McError> {
        let peg = self
            .pegs
            .get(&tx.sidechain)
            .ok_or(McError::UnknownSidechain(tx.sidechain))?;
        peg.check_registration(&tx.pub_key, tx.deposit)?;
        if !tx.signature_valid() {
            return Err(McError::BadSignature);
        }
        let reg_tx_id = McTx::CertifierReg(tx.clone()).canonical_hash();
        if self.seen_tx_ids.contains(&reg_tx_id) {
            return Err(McError::DuplicateTx(reg_tx_id));
        }
        self.debit(&Address::from_pubkey(&tx.pub_key), tx.deposit)?;
        self.seen_tx_ids.insert(reg_tx_id);
        self.peg_mut(&tx.sidechain)?
            .register_certifier(tx.pub_key, reg_tx_id, tx.deposit, height)?;
        Ok(TxEffect::CertifierRegistered {
            sidechain: tx.sidechain,
            pub_key: tx.pub_key,
            reg_tx_id,
        })
    }

    pub fn process_certifier_withdraw(
        &mut self,
        tx: &CertifierWithdrawTx,
        height: u64,
    ) -> Result<TxEffect, McError> {
        let peg = self.peg_mut(&tx.sidechain)?;
        peg.check_withdraw(&tx.pub_key, &tx.reg_tx_id)?;
        if !tx.signature_valid() {
            return Err(McError::BadSignature);
        }
        let req = peg.request_withdraw(&tx.pub_key, &tx.reg_tx_id, height)?;
        Ok(TxEffect::CertifierWithdrawRequested {
            sidechain: tx.sidechain,
            pub_key: tx.pub_key,
            release_epoch: req.release_epoch,
        })
    }

    pub fn process_cccert(
        &mut self,
        cert: &CrossChainCertificate,
        height: u64,
    ) -> Result<TxEffect, McError> {
        let id = cert.sidechain_id;
        let fx = self.peg_mut(&id)?.accept_certificate(cert, height)?;
        let destroyed: Coins = fx.punished.iter().map(|(_, c)| c).sum();
        self.supply.deposits_destroyed += destroyed;
        for BackwardTransfer { amount, receiver } in &fx.outputs {
            self.credit(receiver, *amount);
            self.supply.outputs_created += amount;
            self.created_outputs.push(CreatedOutput {
                sidechain: id,
                epoch: cert.epoch_number,
                cert_index: cert.cert_index,
                receiver: *receiver,
                amount: *amount,
                height,
            });
        }
        Ok(TxEffect::CertificateAccepted {
            sidechain: id,
            epoch: cert.epoch_number,
            cert_index: cert.cert_index,
            total: cert.total_amount(),
            cert_hash: cert.canonical_hash(),
            punished: fx.punished,
        })
    }

    pub fn apply_tx(&mut self, tx: &McTx, height: u64) -> Result<TxEffect, McError> {
        match tx {
            McTx::CreateSidechain(t) => self.process_create_sidechain(t, height),
            McTx::Send(t) => self.process_sending_tx(t, height),
            McTx::CertifierReg(t) => self.process_certifier_reg(t, height),
            McTx::CertifierWithdraw(t) => self.process_certifier_withdraw(t, height),
            McTx::Certificate(c) => self.process_cccert(c, height),
        }
    }

    /// Whether `tx` would be accepted in the next block on top of this state.
    pub fn check_tx(&self, tx: &McTx) -> Result<(), McError> {
        let mut scratch = self.clone();
        scratch.apply_tx(tx, self.next_height()).map(|_| ())
    }

    /// Validates and applies a block on top of the tip. On error the state
    /// is left untouched.
    pub fn apply_block(&mut self, block: &MainchainBlock) -> Result<BlockReceipt, McError> {
        let h = &block.header;
        if h.height != self.height + 1 {
            return Err(McError::BadBlock("height"));
        }
        if h.parent != self.tip {
            return Err(McError::BadBlock("parent"));
        }
        if h.cumulative_work != self.tip_work + 1 {
            return Err(McError::BadBlock("cumulative work"));
        }
        if h.proof_hash != proof_hash_for(h.nonce, h.height, &h.parent) {
            return Err(McError::BadBlock("proof hash"));
        }
        if h.tx_merkle_root != tx_root(&block.transactions) {
            return Err(McError::BadBlock("tx merkle root"));
        }
        let mut next = self.clone();
        let mut receipt = BlockReceipt::default();
        for (index, tx) in block.transactions.iter().enumerate() {
            let fx = next
                .apply_tx(tx, h.height)
                .map_err(|e| McError::InvalidTx {
                    index,
                    source: Box::new(e),
                })?;
            receipt.effects.push(fx);
        }
        let mut released_total = Vec::new();
        for (id, peg) in next.pegs.iter_mut() {
            let fx = peg.on_block(h.height, h.proof_hash);
            if fx.committee_formed.is_some() || !fx.released.is_empty() {
                released_total.extend(fx.released.iter().copied());
                receipt.peg.push((*id, fx));
            }
        }
        for (pk, amount) in released_total {
            next.credit(&Address::from_pubkey(&pk), amount);
        }
        next.height = h.height;
        next.tip = block.hash();
        next.tip_work = h.cumulative_work;
        *self = next;
        Ok(receipt)
    }

    /// Builds the next block from `txs`, which must all be valid in order.
    pub fn produce_block(&self, txs: Vec<McTx>, seed: u64) -> Result<MainchainBlock, McError> {
        let height = self.height + 1;
        let mut scratch = self.clone();
        for (index, tx) in txs.iter().enumerate() {
            scratch
                .apply_tx(tx, height)
                .map_err(|e| McError::InvalidTx {
                    index,
                    source: Box::new(e),
                })?;
        }
        let header = McBlockHeader {
            height,
            parent: self.tip,
            tx_merkle_root: tx_root(&txs),
            proof_hash: proof_hash_for(seed, height, &self.tip),
            nonce: seed,
            cumulative_work: self.tip_work + 1,
        };
        Ok(MainchainBlock {
            header,
            transactions: txs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::KeyPair;
    use crate::mainchain::params::sample_params;

    fn world() -> (MainchainState, KeyPair) {
        let alice = KeyPair::from_name("alice");
        let balances = [(alice.address(), 10_000)].into_iter().collect();
        (MainchainState::genesis(balances, 10), alice)
    }

    fn mine(state: &mut MainchainState, txs: Vec<McTx>) -> BlockReceipt {
        let seed = state.height;
        let block = state.produce_block(txs, seed).unwrap();
        state.apply_block(&block).unwrap()
    }

    fn create(state: &mut MainchainState, who: &KeyPair, start: u64) -> LedgerId {
        let mut p = sample_params("sc-a");
        p.start_block = start;
        let id = p.ledger_id;
        mine(
            state,
            vec![McTx::CreateSidechain(CreateSidechainTx::new(who, p, 10))],
        );
        id
    }

    #[test]
    fn create_sidechain_rules() {
        let (mut s, alice) = world();
        let id = create(&mut s, &alice, 3);
        assert_eq!(s.balance(&alice.address()), 9_990);
        let mut p = sample_params("sc-a");
        p.start_block = 5;
        let dup = McTx::CreateSidechain(CreateSidechainTx::new(&alice, p.clone(), 10));
        assert_eq!(s.check_tx(&dup), Err(McError::DuplicateLedgerId(id)));
        p.ledger_id = LedgerId::from_name("sc-b");
        p.prep_len = p.epoch_len;
        let bad = McTx::CreateSidechain(CreateSidechainTx::new(&alice, p.clone(), 10));
        assert!(matches!(s.check_tx(&bad), Err(McError::InvalidParams(_))));
        p.prep_len = 10;
        let cheap = McTx::CreateSidechain(CreateSidechainTx::new(&alice, p, 9));
        assert_eq!(
            s.check_tx(&cheap),
            Err(McError::InsufficientDeploymentFee {
                paid: 9,
                required: 10
            })
        );
    }

    #[test]
    fn sending_moves_coins_into_safeguard() {
        let (mut s, alice) = world();
        let id = create(&mut s, &alice, 2);
        let supply = s.circulating_supply();
        let a = SendingTx::new(&alice, id, 0, alice.address(), 30);
        let b = SendingTx::new(&alice, id, 1, alice.address(), 20);
        mine(&mut s, vec![McTx::Send(a.clone()), McTx::Send(b)]);
        assert_eq!(s.safeguard(&id), Some(50));
        assert_eq!(supply - s.circulating_supply(), 50);
        let a_id = a.tx_id;
        assert_eq!(s.check_tx(&McTx::Send(a)), Err(McError::DuplicateTx(a_id)));
        let big = SendingTx::new(&alice, id, 9, alice.address(), 1_000_000);
        assert!(matches!(
            s.check_tx(&McTx::Send(big)),
            Err(McError::InsufficientBalance { .. })
        ));
        let stranger = SendingTx::new(&alice, LedgerId::from_name("nope"), 9, alice.address(), 1);
        assert!(matches!(
            s.check_tx(&McTx::Send(stranger)),
            Err(McError::UnknownSidechain(_))
        ));
    }

    #[test]
    fn send_before_start_is_rejected() {
        let (mut s, alice) = world();
        let id = create(&mut s, &alice, 5);
        let tx = McTx::Send(SendingTx::new(&alice, id, 0, alice.address(), 30));
        assert_eq!(
            s.check_tx(&tx),
            Err(McError::SidechainNotStarted { start_block: 5 })
        );
    }

    #[test]
    fn registration_debits_deposit() {
        let (mut s, alice) = world();
        let id = create(&mut s, &alice, 3);
        let reg = CertifierRegTx::new(&alice, id, 100, 0);
        mine(&mut s, vec![McTx::CertifierReg(reg)]);
        assert_eq!(s.balance(&alice.address()), 9_890);
        assert_eq!(s.peg(&id).unwrap().locked_deposits(), 100);
        let again = CertifierRegTx::new(&alice, id, 100, 1);
        assert_eq!(
            s.check_tx(&McTx::CertifierReg(again)),
            Err(McError::AlreadyRegistered)
        );
        let wrong = CertifierRegTx::new(&KeyPair::from_name("b"), id, 50, 0);
        assert!(matches!(
            s.check_tx(&McTx::CertifierReg(wrong)),
            Err(McError::WrongDepositAmount { .. })
        ));
    }

    #[test]
    fn same_key_two_sidechains_are_independent() {
        let (mut s, alice) = world();
        let a = create(&mut s, &alice, 5);
        let mut p = sample_params("sc-b");
        p.start_block = 5;
        let b = p.ledger_id;
        mine(
            &mut s,
            vec![McTx::CreateSidechain(CreateSidechainTx::new(&alice, p, 10))],
        );
        mine(
            &mut s,
            vec![
                McTx::CertifierReg(CertifierRegTx::new(&alice, a, 100, 0)),
                McTx::CertifierReg(CertifierRegTx::new(&alice, b, 100, 0)),
            ],
        );
        assert!(s.peg(&a).unwrap().certifiers.contains_key(&alice.public()));
        assert!(s.peg(&b).unwrap().certifiers.contains_key(&alice.public()));
        assert_eq!(s.balance(&alice.address()), 10_000 - 20 - 200);
    }

    #[test]
    fn produce_block_is_deterministic_and_validated() {
        let (s, _) = world();
        let a = s.produce_block(vec![], 7).unwrap();
        let b = s.produce_block(vec![], 7).unwrap();
        assert_eq!(a, b);
        let mut s2 = s.clone();
        let before = s2.clone();
        s2.apply_block(&a).unwrap();
        assert_eq!(s2.balances, before.balances);
        assert_eq!(s2.tip, a.hash());

        let mut forged = s.produce_block(vec![], 8).unwrap();
        forged.header.proof_hash = Hash::ZERO;
        let mut s3 = s.clone();
        assert_eq!(
            s3.apply_block(&forged),
            Err(McError::BadBlock("proof hash"))
        );
        assert_eq!(s3, s);
    }

    #[test]
    fn invalid_tx_reports_index() {
        let (s, alice) = world();
        let tx = McTx::Send(SendingTx::new(
            &alice,
            LedgerId::from_name("x"),
            0,
            alice.address(),
            1,
        ));
        match s.produce_block(vec![tx], 0) {
            Err(McError::InvalidTx { index, .. }) => assert_eq!(index, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn proof_hashes_do_not_collide() {
        let (s, _) = world();
        let hashes: BTreeSet<Hash> = (0..100)
            .map(|seed| s.produce_block(vec![], seed).unwrap().header.proof_hash)
            .collect();
        assert_eq!(hashes.len(), 100);
    }
}
