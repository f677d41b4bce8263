use std::collections::BTreeSet;

use super::block::{MainchainReference, SidechainBlock};
use super::error::ScError;
use super::state::{ScEvent, SidechainState};
use crate::chain::{verify_merkle_path, Canonical, Hash};
use crate::mainchain::{LedgerId, Mainchain};

/// Checks every reference of a block against the active mainchain: the
/// block exists, the proof hash and header match, and all transactions for
/// this sidechain are synced with verifying Merkle paths.
pub fn check_references(
    refs: &[MainchainReference],
    id: &LedgerId,
    mc: &Mainchain,
) -> Result<(), ScError> {
    for r in refs {
        let block = mc
            .block_at(r.height)
            .filter(|b| b.hash() == r.hash)
            .ok_or(ScError::UnknownMcBlock { height: r.height })?;
        if r.proof_hash != block.header.proof_hash {
            return Err(ScError::BadHeader);
        }
        let related: Vec<(usize, _)> = block
            .transactions
            .iter()
            .enumerate()
            .filter(|(_, tx)| tx.sidechain() == Some(*id))
            .collect();
        if related.is_empty() {
            if r.header.is_some() || !r.synced_txs.is_empty() {
                return Err(ScError::UnexpectedSyncedTx);
            }
            continue;
        }
        let header = r.header.as_ref().ok_or(ScError::MissingSyncedTx)?;
        if *header != block.header {
            return Err(ScError::BadHeader);
        }
        if r.synced_txs.len() < related.len() {
            return Err(ScError::MissingSyncedTx);
        }
        if r.synced_txs.len() > related.len() {
            return Err(ScError::UnexpectedSyncedTx);
        }
        for (st, (index, tx)) in r.synced_txs.iter().zip(related) {
            if st.tx != *tx {
                return Err(ScError::MissingSyncedTx);
            }
            if st.path.leaf_index != index as u64
                || !verify_merkle_path(&st.tx.canonical_hash(), &st.path, &header.tx_merkle_root)
            {
                return Err(ScError::BadMerklePath);
            }
        }
    }
    Ok(())
}

/// The sidechain's block history with the state after every block.
#[derive(Debug, Clone)]
pub struct SidechainChain {
    blocks: Vec<SidechainBlock>,
    /// `states[i]` is the state after `i` blocks; `states[0]` is genesis.
    states: Vec<SidechainState>,
}

impl SidechainChain {
    pub fn new(genesis: SidechainState) -> Self {
        SidechainChain {
            blocks: Vec::new(),
            states: vec![genesis],
        }
    }

    pub fn ledger_id(&self) -> LedgerId {
        self.genesis().params.ledger_id
    }

    pub fn genesis(&self) -> &SidechainState {
        &self.states[0]
    }

    pub fn state(&self) -> &SidechainState {
        self.states.last().expect("genesis present")
    }

    pub fn blocks(&self) -> &[SidechainBlock] {
        &self.blocks
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    /// Validates `block` against the tip and the mainchain without applying it.
    pub fn validate_block(
        &self,
        block: &SidechainBlock,
        mc: &Mainchain,
    ) -> Result<SidechainState, ScError> {
        check_references(&block.mc_refs, &self.ledger_id(), mc)?;
        let mut next = self.state().clone();
        next.apply_block(block)?;
        Ok(next)
    }

    pub fn push_block(
        &mut self,
        block: SidechainBlock,
        mc: &Mainchain,
    ) -> Result<Vec<ScEvent>, ScError> {
        check_references(&block.mc_refs, &self.ledger_id(), mc)?;
        let mut next = self.state().clone();
        let events = next.apply_block(&block)?;
        self.blocks.push(block);
        self.states.push(next);
        Ok(events)
    }

    /// Hashes of every referenced mainchain block, in reference order.
    pub fn referenced_hashes(&self) -> Vec<Hash> {
        self.blocks
            .iter()
            .flat_map(|b| b.referenced_hashes())
            .collect()
    }

    /// Drops every block that references one of `reverted` (and all its
    /// descendants). Returns the removed blocks.
    pub fn handle_mc_reorg(&mut self, reverted: &[Hash]) -> Result<Vec<SidechainBlock>, ScError> {
        let reverted: BTreeSet<Hash> = reverted.iter().copied().collect();
        let history = self.referenced_hashes();
        let first = history.iter().position(|h| reverted.contains(h));
        let Some(first) = first else {
            return Ok(Vec::new());
        };
        if !history[first..].iter().all(|h| reverted.contains(h)) {
            return Err(ScError::NotASuffix);
        }
        let cut = self
            .blocks
            .iter()
            .position(|b| b.referenced_hashes().any(|h| reverted.contains(&h)))
            .expect("a referenced hash was found above");
        self.states.truncate(cut + 1);
        Ok(self.blocks.split_off(cut))
    }
}

/// Independent oracle: the state reached by applying `blocks` to `genesis`.
pub fn replay_from_genesis(
    genesis: &SidechainState,
    blocks: &[SidechainBlock],
) -> Result<SidechainState, ScError> {
    let mut state = genesis.clone();
    for b in blocks {
        state.apply_block(b)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::chain::KeyPair;
    use crate::mainchain::params::sample_params;
    use crate::mainchain::{CreateSidechainTx, MainchainState, McTx, SendingTx, SidechainParams};
    use crate::sidechain::consensus::SlotId;
    use crate::sidechain::forge::{forge_block, ForgePolicy, Mempool};

    struct World {
        mc: Mainchain,
        sc: SidechainChain,
        alice: KeyPair,
        forger: KeyPair,
        params: SidechainParams,
        nonce: u64,
    }

    impl World {
        fn new() -> Self {
            let alice = KeyPair::from_name("alice");
            let forger = KeyPair::from_name("forger");
            let g = MainchainState::genesis([(alice.address(), 10_000)].into_iter().collect(), 10);
            let mut mc = Mainchain::new(g, 64);
            let mut params = sample_params("sc-chain");
            params.start_block = 3;
            params.epoch_len = 20;
            params.prep_len = 5;
            mc.mine(
                vec![McTx::CreateSidechain(CreateSidechainTx::new(
                    &alice,
                    params.clone(),
                    10,
                ))],
                1,
            )
            .unwrap();
            let stakes: BTreeMap<_, _> = [(forger.public(), 1)].into_iter().collect();
            let sc = SidechainChain::new(SidechainState::genesis(params.clone(), 1, 10, stakes));
            World {
                mc,
                sc,
                alice,
                forger,
                params,
                nonce: 0,
            }
        }

        fn send(&mut self, amount: u64) -> McTx {
            self.nonce += 1;
            McTx::Send(SendingTx::new(
                &self.alice,
                self.params.ledger_id,
                self.nonce,
                self.alice.address(),
                amount,
            ))
        }

        fn mine(&mut self, txs: Vec<McTx>) {
            let seed = self.mc.height() * 7 + 1;
            self.mc.mine(txs, seed).unwrap();
        }

        fn slot(&self) -> SlotId {
            SlotId::from_global(self.mc.height() - self.params.start_block, 10)
        }

        fn forge(&self, policy: ForgePolicy) -> SidechainBlock {
            forge_block(
                self.sc.state(),
                &self.mc,
                &self.forger,
                self.slot(),
                &Mempool::default(),
                policy,
            )
            .unwrap()
        }

        fn step(&mut self, txs: Vec<McTx>) {
            self.mine(txs);
            if self.mc.height() >= self.params.start_block {
                let b = self.forge(ForgePolicy::Honest);
                self.sc.push_block(b, &self.mc).unwrap();
            }
        }
    }

    #[test]
    fn forward_transfers_are_credited() {
        let mut w = World::new();
        w.step(vec![]);
        w.step(vec![]);
        let (a, b) = (w.send(30), w.send(20));
        w.step(vec![a, b]);
        assert_eq!(w.sc.state().balance(&w.alice.address()), 50);
        assert_eq!(w.sc.state().cursor, w.mc.height() + 1);
        assert_eq!(w.sc.state().replica.safeguard, 50);
    }

    #[test]
    fn gap_and_replay_are_rejected() {
        let mut w = World::new();
        w.step(vec![]);
        w.step(vec![]);
        w.mine(vec![]);
        w.mine(vec![]);
        let mut block = w.forge(ForgePolicy::Honest);
        assert_eq!(block.mc_refs.len(), 2);
        block.mc_refs.remove(0);
        block.sign(&w.forger);
        let cursor = w.sc.state().cursor;
        assert_eq!(
            w.sc.validate_block(&block, &w.mc).unwrap_err(),
            ScError::ReferenceGap {
                expected: cursor,
                got: cursor + 1
            }
        );
        let honest = w.forge(ForgePolicy::Honest);
        w.sc.push_block(honest.clone(), &w.mc).unwrap();
        let mut replay = honest;
        replay.parent = w.sc.state().tip;
        replay.height += 1;
        replay.slot.index += 1;
        replay.sign(&w.forger);
        assert!(matches!(
            w.sc.validate_block(&replay, &w.mc),
            Err(ScError::ReferenceGap { .. })
        ));
    }

    #[test]
    fn omitted_synced_tx_invalidates_block() {
        let mut w = World::new();
        w.step(vec![]);
        w.step(vec![]);
        let s = w.send(40);
        w.mine(vec![s]);
        let dropped = w.forge(ForgePolicy::DropSyncedTxs);
        assert_eq!(
            w.sc.validate_block(&dropped, &w.mc).unwrap_err(),
            ScError::MissingSyncedTx
        );
        let omitted = w.forge(ForgePolicy::OmitReferences);
        let cursor = w.sc.state().cursor;
        w.sc.push_block(omitted, &w.mc).unwrap();
        assert_eq!(w.sc.state().cursor, cursor);
    }

    #[test]
    fn wrong_forger_and_tampering() {
        let mut w = World::new();
        w.step(vec![]);
        w.mine(vec![]);
        let other = KeyPair::from_name("other");
        assert_eq!(
            forge_block(
                w.sc.state(),
                &w.mc,
                &other,
                w.slot(),
                &Mempool::default(),
                ForgePolicy::Honest
            )
            .unwrap_err(),
            ScError::NotLeader
        );
        let mut block = w.forge(ForgePolicy::Honest);
        block.sign(&other);
        assert_eq!(
            w.sc.validate_block(&block, &w.mc).unwrap_err(),
            ScError::WrongLeader
        );
        let mut block = w.forge(ForgePolicy::Honest);
        block.mc_refs[0].proof_hash = Hash::ZERO;
        block.sign(&w.forger);
        assert_eq!(
            w.sc.validate_block(&block, &w.mc).unwrap_err(),
            ScError::BadHeader
        );
        let mut block = w.forge(ForgePolicy::Honest);
        block.reward_payouts.push(crate::sidechain::RewardPayout {
            pub_key: other.public(),
            amount: 1,
        });
        block.sign(&w.forger);
        assert_eq!(
            w.sc.validate_block(&block, &w.mc).unwrap_err(),
            ScError::RewardMismatch
        );
    }

    #[test]
    fn mc_reorg_reverts_referencing_blocks() {
        let mut w = World::new();
        for _ in 0..3 {
            w.step(vec![]);
        }
        let s = w.send(50);
        w.step(vec![s]);
        w.step(vec![]);
        w.step(vec![]);
        assert_eq!(w.sc.state().balance(&w.alice.address()), 50);
        let sc_height = w.sc.height();

        // revert the three newest MC blocks, the oldest holding the send
        let ancestor = w.mc.height() - 3;
        let mut base = w.mc.state_at(ancestor).unwrap().clone();
        let mut fork = Vec::new();
        for seed in 500..504 {
            let b = base.produce_block(vec![], seed).unwrap();
            base.apply_block(&b).unwrap();
            fork.push(b);
        }
        let out = w.mc.apply_reorg(fork).unwrap();
        let reverted: Vec<Hash> = out.reverted.iter().map(|b| b.hash()).collect();
        let removed = w.sc.handle_mc_reorg(&reverted).unwrap();
        assert_eq!(removed.len(), 3);
        assert_eq!(w.sc.height(), sc_height - 3);
        assert_eq!(w.sc.state().balance(&w.alice.address()), 0);
        let oracle = replay_from_genesis(w.sc.genesis(), w.sc.blocks()).unwrap();
        assert_eq!(&oracle, w.sc.state());
        let history: BTreeSet<Hash> = w.sc.referenced_hashes().into_iter().collect();
        assert!(reverted.iter().all(|h| !history.contains(h)));

        let b = w.forge(ForgePolicy::Honest);
        w.sc.push_block(b, &w.mc).unwrap();
        assert_eq!(w.sc.state().cursor, w.mc.height() + 1);
    }

    #[test]
    fn reorg_of_unreferenced_blocks_changes_nothing() {
        let mut w = World::new();
        w.step(vec![]);
        w.step(vec![]);
        w.mine(vec![]);
        let before = w.sc.height();
        assert!(w
            .sc
            .handle_mc_reorg(&[w.mc.tip().hash()])
            .unwrap()
            .is_empty());
        assert_eq!(w.sc.height(), before);
    }

    #[test]
    fn reorg_must_be_a_suffix() {
        let mut w = World::new();
        for _ in 0..4 {
            w.step(vec![]);
        }
        let history = w.sc.referenced_hashes();
        assert_eq!(
            w.sc.handle_mc_reorg(&history[..1]),
            Err(ScError::NotASuffix)
        );
    }
}
