use serde::{Deserialize, Serialize};

use super::consensus::SlotId;
use crate::chain::{
    merkle_path, Address, Canonical, Coins, Encoder, Hash, KeyPair, MerklePath, PubKey, Signature,
};
use crate::mainchain::{LedgerId, MainchainBlock, McBlockHeader, McTx};

/// A sidechain-related mainchain transaction with its inclusion proof.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncedTx {
    pub tx: McTx,
    pub path: MerklePath,
}

impl Canonical for SyncedTx {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.tx).put(&self.path);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MainchainReference {
    pub hash: Hash,
    pub height: u64,
    /// Needed on every reference so certifier randomness can be replayed.
    pub proof_hash: Hash,
    /// Present exactly when `synced_txs` is non-empty.
    pub header: Option<McBlockHeader>,
    pub synced_txs: Vec<SyncedTx>,
}

impl MainchainReference {
    /// Honest reference to `block` for sidechain `id`.
    pub fn build(block: &MainchainBlock, id: &LedgerId) -> Self {
        let leaves = block.tx_hashes();
        let synced_txs: Vec<SyncedTx> = block
            .transactions
            .iter()
            .enumerate()
            .filter(|(_, tx)| tx.sidechain() == Some(*id))
            .map(|(i, tx)| SyncedTx {
                tx: tx.clone(),
                path: merkle_path(&leaves, i).expect("index comes from the same leaves"),
            })
            .collect();
        MainchainReference {
            hash: block.hash(),
            height: block.height(),
            proof_hash: block.header.proof_hash,
            header: (!synced_txs.is_empty()).then(|| block.header.clone()),
            synced_txs,
        }
    }
}

impl Canonical for MainchainReference {
    fn encode(&self, enc: &mut Encoder) {
        enc.hash(&self.hash)
            .u64(self.height)
            .hash(&self.proof_hash)
            .opt(self.header.as_ref())
            .list(&self.synced_txs);
    }
}

/// Burns `gross` on the sidechain; `gross - fee` is paid out on the mainchain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WithdrawalRequest {
    pub requester: PubKey,
    pub receiver: Address,
    pub gross: Coins,
    pub fee: Coins,
    pub nonce: u64,
    pub sig: Signature,
}

impl WithdrawalRequest {
    pub fn new(key: &KeyPair, receiver: Address, gross: Coins, fee: Coins, nonce: u64) -> Self {
        let requester = key.public();
        let sig = key.sign(Self::payload(&requester, &receiver, gross, fee, nonce));
        WithdrawalRequest {
            requester,
            receiver,
            gross,
            fee,
            nonce,
            sig,
        }
    }

    pub fn payload(
        requester: &PubKey,
        receiver: &Address,
        gross: Coins,
        fee: Coins,
        nonce: u64,
    ) -> Hash {
        let mut enc = Encoder::tagged("withdrawal-request");
        enc.put(requester)
            .put(receiver)
            .u64(gross)
            .u64(fee)
            .u64(nonce);
        enc.finish_hash()
    }

    pub fn id(&self) -> Hash {
        Self::payload(
            &self.requester,
            &self.receiver,
            self.gross,
            self.fee,
            self.nonce,
        )
    }

    pub fn signature_valid(&self) -> bool {
        self.sig.verify(&self.requester, &self.id())
    }
}

impl Canonical for WithdrawalRequest {
    fn encode(&self, enc: &mut Encoder) {
        enc.hash(&self.id()).put(&self.sig);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifierSignature {
    pub epoch: u64,
    pub cert_index: u32,
    pub sig: Signature,
}

impl Canonical for CertifierSignature {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.epoch).u32(self.cert_index).put(&self.sig);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardPayout {
    pub pub_key: PubKey,
    pub amount: Coins,
}

impl Canonical for RewardPayout {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.pub_key).u64(self.amount);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidechainBlock {
    pub slot: SlotId,
    pub height: u64,
    pub parent: Hash,
    pub forger: PubKey,
    pub mc_refs: Vec<MainchainReference>,
    pub withdrawal_requests: Vec<WithdrawalRequest>,
    pub certifier_signatures: Vec<CertifierSignature>,
    pub reward_payouts: Vec<RewardPayout>,
    pub forger_sig: Signature,
}

impl SidechainBlock {
    /// Hash of everything but the forger signature; also the block id.
    pub fn hash(&self) -> Hash {
        let mut enc = Encoder::tagged("sc-block");
        enc.u64(self.slot.epoch)
            .u64(self.slot.index)
            .u64(self.height)
            .hash(&self.parent)
            .put(&self.forger)
            .list(&self.mc_refs)
            .list(&self.withdrawal_requests)
            .list(&self.certifier_signatures)
            .list(&self.reward_payouts);
        enc.finish_hash()
    }

    pub fn sign(&mut self, forger: &KeyPair) {
        self.forger = forger.public();
        self.forger_sig = forger.sign(self.hash());
    }

    pub fn referenced_hashes(&self) -> impl Iterator<Item = Hash> + '_ {
        self.mc_refs.iter().map(|r| r.hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::verify_merkle_path;
    use crate::mainchain::{MainchainState, SendingTx};

    #[test]
    fn reference_carries_header_only_with_synced_txs() {
        let alice = KeyPair::from_name("alice");
        let id = LedgerId::from_name("sc");
        let state = MainchainState::genesis(Default::default(), 0);
        let empty = state.produce_block(vec![], 1).unwrap();
        let r = MainchainReference::build(&empty, &id);
        assert!(r.header.is_none() && r.synced_txs.is_empty());

        let mut block = empty.clone();
        let other = LedgerId::from_name("other");
        block.transactions = vec![
            McTx::Send(SendingTx::new(&alice, other, 0, alice.address(), 5)),
            McTx::Send(SendingTx::new(&alice, id, 1, alice.address(), 7)),
        ];
        block.header.tx_merkle_root = crate::mainchain::tx_root(&block.transactions);
        let r = MainchainReference::build(&block, &id);
        assert_eq!(r.synced_txs.len(), 1);
        let root = r.header.as_ref().unwrap().tx_merkle_root;
        let st = &r.synced_txs[0];
        assert_eq!(st.path.leaf_index, 1);
        assert!(verify_merkle_path(&st.tx.canonical_hash(), &st.path, &root));
    }

    #[test]
    fn withdrawal_signature_binds_fields() {
        let k = KeyPair::from_name("u");
        let w = WithdrawalRequest::new(&k, k.address(), 100, 1, 0);
        assert!(w.signature_valid());
        let mut bad = w.clone();
        bad.gross = 1000;
        assert!(!bad.signature_valid());
    }
}
