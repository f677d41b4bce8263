use std::collections::VecDeque;

use super::block::MainchainBlock;
use super::error::McError;
use super::state::{BlockReceipt, MainchainState};
use super::tx::McTx;
use crate::chain::Hash;

/// Result of a successful reorganization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReorgOutcome {
    pub ancestor_height: u64,
    pub reverted: Vec<MainchainBlock>,
    pub receipts: Vec<BlockReceipt>,
}

/// The active mainchain: blocks from genesis plus recent state snapshots so
/// reorganizations rewind by restoring a snapshot instead of undoing effects.
#[derive(Debug, Clone)]
pub struct Mainchain {
    genesis_state: MainchainState,
    blocks: Vec<MainchainBlock>,
    receipts: Vec<BlockReceipt>,
    /// States after each of the most recent blocks, oldest first.
    snapshots: VecDeque<MainchainState>,
    retain: usize,
}

impl Mainchain {
    /// `retain` bounds how many snapshots are kept, which bounds reorg depth.
    pub fn new(genesis_state: MainchainState, retain: usize) -> Self {
        let retain = retain.max(1);
        Mainchain {
            blocks: vec![MainchainBlock::genesis()],
            receipts: vec![BlockReceipt::default()],
            snapshots: VecDeque::from([genesis_state.clone()]),
            genesis_state,
            retain,
        }
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn tip(&self) -> &MainchainBlock {
        self.blocks.last().expect("genesis is always present")
    }

    pub fn state(&self) -> &MainchainState {
        self.snapshots.back().expect("at least one snapshot")
    }

    pub fn genesis_state(&self) -> &MainchainState {
        &self.genesis_state
    }

    pub fn blocks(&self) -> &[MainchainBlock] {
        &self.blocks
    }

    pub fn block_at(&self, height: u64) -> Option<&MainchainBlock> {
        self.blocks.get(height as usize)
    }

    pub fn receipt_at(&self, height: u64) -> Option<&BlockReceipt> {
        self.receipts.get(height as usize)
    }

    pub fn height_of(&self, hash: &Hash) -> Option<u64> {
        self.blocks
            .iter()
            .rposition(|b| b.hash() == *hash)
            .map(|i| i as u64)
    }

    /// Snapshot after block `height`, if still retained.
    pub fn state_at(&self, height: u64) -> Option<&MainchainState> {
        let oldest = self.height() + 1 - self.snapshots.len() as u64;
        let idx = height.checked_sub(oldest)?;
        self.snapshots.get(idx as usize)
    }

    /// Mutable access to the tip state, bypassing validation. Exists so
    /// audits can be tested against deliberately corrupted state.
    pub fn tamper_tip_state(&mut self) -> &mut MainchainState {
        self.snapshots.back_mut().expect("at least one snapshot")
    }

    pub fn push_block(&mut self, block: MainchainBlock) -> Result<&BlockReceipt, McError> {
        let mut next = self.state().clone();
        let receipt = next.apply_block(&block)?;
        self.blocks.push(block);
        self.receipts.push(receipt);
        self.snapshots.push_back(next);
        while self.snapshots.len() > self.retain {
            self.snapshots.pop_front();
        }
        Ok(self.receipts.last().expect("just pushed"))
    }

    pub fn mine(&mut self, txs: Vec<McTx>, seed: u64) -> Result<&BlockReceipt, McError> {
        let block = self.state().produce_block(txs, seed)?;
        self.push_block(block)
    }

    /// Replaces the suffix after the fork's parent with `fork` when the fork
    /// carries strictly more cumulative work.
    pub fn apply_reorg(&mut self, fork: Vec<MainchainBlock>) -> Result<ReorgOutcome, McError> {
        let first = fork.first().ok_or(McError::NotHeavier)?;
        let ancestor_height = first
            .header
            .height
            .checked_sub(1)
            .ok_or(McError::UnknownAncestor)?;
        let ancestor = self
            .block_at(ancestor_height)
            .ok_or(McError::UnknownAncestor)?;
        if ancestor.hash() != first.header.parent {
            return Err(McError::UnknownAncestor);
        }
        let base = self
            .state_at(ancestor_height)
            .ok_or(McError::UnknownAncestor)?
            .clone();
        let fork_work = fork.last().map_or(0, |b| b.header.cumulative_work);
        if fork_work <= self.state().tip_work {
            return Err(McError::NotHeavier);
        }

        let mut states = Vec::with_capacity(fork.len());
        let mut receipts = Vec::with_capacity(fork.len());
        let mut state = base;
        for block in &fork {
            receipts.push(state.apply_block(block)?);
            states.push(state.clone());
        }

        let keep = ancestor_height as usize + 1;
        let reverted = self.blocks.split_off(keep);
        self.receipts.truncate(keep);
        let drop = reverted.len().min(self.snapshots.len());
        for _ in 0..drop {
            self.snapshots.pop_back();
        }
        self.blocks.extend(fork);
        self.receipts.extend(receipts.iter().cloned());
        self.snapshots.extend(states);
        while self.snapshots.len() > self.retain {
            self.snapshots.pop_front();
        }
        Ok(ReorgOutcome {
            ancestor_height,
            reverted,
            receipts,
        })
    }
}

/// Independent oracle: applies `blocks` (without genesis) to a fresh state.
pub fn replay_from_genesis(
    genesis: &MainchainState,
    blocks: &[MainchainBlock],
) -> Result<MainchainState, McError> {
    let mut state = genesis.clone();
    for block in blocks {
        state.apply_block(block)?;
    }
    Ok(state)
}
