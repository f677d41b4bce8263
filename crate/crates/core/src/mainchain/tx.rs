use serde::{Deserialize, Serialize};

use super::params::{LedgerId, SidechainParams};
use crate::cct::CrossChainCertificate;
use crate::chain::{Address, Canonical, Coins, Encoder, Hash, KeyPair, PubKey, Signature};

/// Registers a new sidechain. The fee is burned from the creator's balance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSidechainTx {
    pub params: SidechainParams,
    pub creator: PubKey,
    pub fee: Coins,
    pub sig: Signature,
}

impl CreateSidechainTx {
    pub fn new(creator: &KeyPair, params: SidechainParams, fee: Coins) -> Self {
        let sig = creator.sign(Self::payload(&params, &creator.public(), fee));
        CreateSidechainTx {
            params,
            creator: creator.public(),
            fee,
            sig,
        }
    }

    pub fn payload(params: &SidechainParams, creator: &PubKey, fee: Coins) -> Hash {
        let mut enc = Encoder::tagged("create-sidechain");
        enc.put(params).put(creator).u64(fee);
        enc.finish_hash()
    }

    pub fn signature_valid(&self) -> bool {
        self.sig.verify(
            &self.creator,
            &Self::payload(&self.params, &self.creator, self.fee),
        )
    }
}

/// Burns `amount` on the mainchain for credit to `receive_acc` on the sidechain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SendingTx {
    pub ledger_id: LedgerId,
    pub tx_id: Hash,
    pub send_acc: Address,
    pub receive_acc: Address,
    pub amount: Coins,
    pub sig: Signature,
}

impl SendingTx {
    pub fn new(
        sender: &KeyPair,
        ledger_id: LedgerId,
        nonce: u64,
        receive_acc: Address,
        amount: Coins,
    ) -> Self {
        let mut enc = Encoder::tagged("sending-tx-id");
        enc.put(&sender.public()).put(&ledger_id).u64(nonce);
        let tx_id = enc.finish_hash();
        let send_acc = sender.address();
        let sig = sender.sign(Self::payload(
            &ledger_id,
            &tx_id,
            &send_acc,
            &receive_acc,
            amount,
        ));
        SendingTx {
            ledger_id,
            tx_id,
            send_acc,
            receive_acc,
            amount,
            sig,
        }
    }

    pub fn payload(
        ledger_id: &LedgerId,
        tx_id: &Hash,
        send_acc: &Address,
        receive_acc: &Address,
        amount: Coins,
    ) -> Hash {
        let mut enc = Encoder::tagged("sending-tx");
        enc.put(ledger_id)
            .hash(tx_id)
            .put(send_acc)
            .put(receive_acc)
            .u64(amount);
        enc.finish_hash()
    }

    /// The signer must own `send_acc` and have signed every other field.
    pub fn signature_valid(&self) -> bool {
        let signer = self.sig.signer();
        Address::from_pubkey(&signer) == self.send_acc
            && self.sig.verify(
                &signer,
                &Self::payload(
                    &self.ledger_id,
                    &self.tx_id,
                    &self.send_acc,
                    &self.receive_acc,
                    self.amount,
                ),
            )
    }
}

/// Locks a certifier deposit for one sidechain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifierRegTx {
    pub sidechain: LedgerId,
    pub pub_key: PubKey,
    pub deposit: Coins,
    pub nonce: u64,
    pub sig: Signature,
}

impl CertifierRegTx {
    pub fn new(key: &KeyPair, sidechain: LedgerId, deposit: Coins, nonce: u64) -> Self {
        let sig = key.sign(Self::payload(&sidechain, &key.public(), deposit, nonce));
        CertifierRegTx {
            sidechain,
            pub_key: key.public(),
            deposit,
            nonce,
            sig,
        }
    }

    pub fn payload(sidechain: &LedgerId, pub_key: &PubKey, deposit: Coins, nonce: u64) -> Hash {
        let mut enc = Encoder::tagged("certifier-reg");
        enc.put(sidechain).put(pub_key).u64(deposit).u64(nonce);
        enc.finish_hash()
    }

    pub fn signature_valid(&self) -> bool {
        self.sig.verify(
            &self.pub_key,
            &Self::payload(&self.sidechain, &self.pub_key, self.deposit, self.nonce),
        )
    }
}

/// Starts revocation of a registration. The sidechain and key are carried
/// alongside the registration id so the transaction can be routed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifierWithdrawTx {
    pub sidechain: LedgerId,
    pub pub_key: PubKey,
    pub reg_tx_id: Hash,
    pub sig: Signature,
}

impl CertifierWithdrawTx {
    pub fn new(key: &KeyPair, sidechain: LedgerId, reg_tx_id: Hash) -> Self {
        let sig = key.sign(Self::payload(&sidechain, &reg_tx_id));
        CertifierWithdrawTx {
            sidechain,
            pub_key: key.public(),
            reg_tx_id,
            sig,
        }
    }

    pub fn payload(sidechain: &LedgerId, reg_tx_id: &Hash) -> Hash {
        let mut enc = Encoder::tagged("certifier-withdraw");
        enc.put(sidechain).hash(reg_tx_id);
        enc.finish_hash()
    }

    pub fn signature_valid(&self) -> bool {
        self.sig.verify(
            &self.pub_key,
            &Self::payload(&self.sidechain, &self.reg_tx_id),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum McTx {
    CreateSidechain(CreateSidechainTx),
    Send(SendingTx),
    CertifierReg(CertifierRegTx),
    CertifierWithdraw(CertifierWithdrawTx),
    Certificate(CrossChainCertificate),
}

impl McTx {
    /// The sidechain this transaction concerns, if any.
    pub fn sidechain(&self) -> Option<LedgerId> {
        Some(match self {
            McTx::CreateSidechain(tx) => tx.params.ledger_id,
            McTx::Send(tx) => tx.ledger_id,
            McTx::CertifierReg(tx) => tx.sidechain,
            McTx::CertifierWithdraw(tx) => tx.sidechain,
            McTx::Certificate(cert) => cert.sidechain_id,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            McTx::CreateSidechain(_) => "create_sidechain",
            McTx::Send(_) => "sending_tx",
            McTx::CertifierReg(_) => "certifier_reg",
            McTx::CertifierWithdraw(_) => "certifier_withdraw",
            McTx::Certificate(_) => "certificate",
        }
    }
}

impl Canonical for McTx {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            McTx::CreateSidechain(tx) => {
                enc.u8(0)
                    .put(&tx.params)
                    .put(&tx.creator)
                    .u64(tx.fee)
                    .put(&tx.sig);
            }
            McTx::Send(tx) => {
                enc.u8(1)
                    .put(&tx.ledger_id)
                    .hash(&tx.tx_id)
                    .put(&tx.send_acc)
                    .put(&tx.receive_acc)
                    .u64(tx.amount)
                    .put(&tx.sig);
            }
            McTx::CertifierReg(tx) => {
                enc.u8(2)
                    .put(&tx.sidechain)
                    .put(&tx.pub_key)
                    .u64(tx.deposit)
                    .u64(tx.nonce)
                    .put(&tx.sig);
            }
            McTx::CertifierWithdraw(tx) => {
                enc.u8(3)
                    .put(&tx.sidechain)
                    .put(&tx.pub_key)
                    .hash(&tx.reg_tx_id)
                    .put(&tx.sig);
            }
            McTx::Certificate(cert) => {
                enc.u8(4).put(cert);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sending_tx_signature_binds_every_field() {
        let k = KeyPair::from_name("alice");
        let id = LedgerId::from_name("sc");
        let tx = SendingTx::new(&k, id, 0, k.address(), 50);
        assert!(tx.signature_valid());
        let mut bad = tx.clone();
        bad.amount = 51;
        assert!(!bad.signature_valid());
        let mut bad = tx.clone();
        bad.receive_acc = KeyPair::from_name("mallory").address();
        assert!(!bad.signature_valid());
        let mut bad = tx.clone();
        bad.send_acc = KeyPair::from_name("bob").address();
        assert!(!bad.signature_valid());
    }

    #[test]
    fn tx_hashes_are_distinct_per_nonce() {
        let k = KeyPair::from_name("alice");
        let id = LedgerId::from_name("sc");
        let a = McTx::Send(SendingTx::new(&k, id, 0, k.address(), 50));
        let b = McTx::Send(SendingTx::new(&k, id, 1, k.address(), 50));
        assert_ne!(a.canonical_hash(), b.canonical_hash());
    }

    #[test]
    fn json_round_trip() {
        let k = KeyPair::from_name("c");
        let tx = McTx::CertifierReg(CertifierRegTx::new(&k, LedgerId::from_name("sc"), 100, 0));
        let json = serde_json::to_string(&tx).unwrap();
        assert!(json.contains("\"type\":\"certifier_reg\""));
        assert_eq!(serde_json::from_str::<McTx>(&json).unwrap(), tx);
    }
}
