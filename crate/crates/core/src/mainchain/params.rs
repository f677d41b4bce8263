use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{Canonical, Coins, Encoder, Hash};

/// Identifier of a deployed sidechain.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LedgerId(Hash);

impl LedgerId {
    pub fn from_name(name: &str) -> Self {
        let mut enc = Encoder::tagged("ledger-id");
        enc.str(name);
        LedgerId(enc.finish_hash())
    }

    pub fn as_hash(&self) -> &Hash {
        &self.0
    }
}

impl fmt::Debug for LedgerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LedgerId({})", self.0.short())
    }
}

impl Canonical for LedgerId {
    fn encode(&self, enc: &mut Encoder) {
        enc.hash(&self.0);
    }
}

/// Immutable per-sidechain configuration, fixed by the creation transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidechainParams {
    pub ledger_id: LedgerId,
    /// Mainchain height at which withdrawal epoch 0 begins.
    pub start_block: u64,
    pub epoch_len: u64,
    pub prep_len: u64,
    pub cert_depo: Coins,
    /// Certifier group size N.
    pub cert_group_size: u32,
    /// Certifier fee, percent of each backward transfer.
    pub cert_fee: u32,
    pub min_transfer_amount: Coins,
    /// Number of withdrawal epochs after a certificate's own epoch during
    /// which it can be disputed.
    pub dispute_len: u64,
}

impl Canonical for SidechainParams {
    fn encode(&self, enc: &mut Encoder) {
        enc.str("sidechain-params")
            .put(&self.ledger_id)
            .u64(self.start_block)
            .u64(self.epoch_len)
            .u64(self.prep_len)
            .u64(self.cert_depo)
            .u32(self.cert_group_size)
            .u32(self.cert_fee)
            .u64(self.min_transfer_amount)
            .u64(self.dispute_len);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Preparation,
    Signing,
}

/// Position of a mainchain height inside the withdrawal schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochPosition {
    pub epoch: u64,
    pub offset: u64,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamsError {
    #[error("height {height} precedes start block {start_block}")]
    BeforeStart { height: u64, start_block: u64 },
    #[error("invalid sidechain parameters: {0}")]
    Invalid(&'static str),
}

impl SidechainParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.prep_len == 0 || self.prep_len >= self.epoch_len {
            return Err(ParamsError::Invalid("require 0 < prep_len < epoch_len"));
        }
        if self.cert_group_size == 0 {
            return Err(ParamsError::Invalid("cert_group_size must be at least 1"));
        }
        if self.cert_fee >= 100 {
            return Err(ParamsError::Invalid("cert_fee must be below 100 percent"));
        }
        if self.min_transfer_amount == 0 {
            return Err(ParamsError::Invalid("min_transfer_amount must be positive"));
        }
        if self.dispute_len == 0 {
            return Err(ParamsError::Invalid("dispute_len must be at least 1"));
        }
        Ok(())
    }

    pub fn withdrawal_epoch_of(&self, height: u64) -> Result<EpochPosition, ParamsError> {
        if height < self.start_block {
            return Err(ParamsError::BeforeStart {
                height,
                start_block: self.start_block,
            });
        }
        let rel = height - self.start_block;
        let epoch = rel / self.epoch_len;
        let offset = rel % self.epoch_len;
        let stage = if offset < self.prep_len {
            Stage::Preparation
        } else {
            Stage::Signing
        };
        Ok(EpochPosition {
            epoch,
            offset,
            stage,
        })
    }

    /// First mainchain height of `epoch`.
    pub fn epoch_start(&self, epoch: u64) -> u64 {
        self.start_block + epoch * self.epoch_len
    }

    /// First height of the signing stage of `epoch`.
    pub fn signing_start(&self, epoch: u64) -> u64 {
        self.epoch_start(epoch) + self.prep_len
    }

    /// Last height of `epoch`.
    pub fn epoch_end(&self, epoch: u64) -> u64 {
        self.epoch_start(epoch + 1) - 1
    }

    /// Maximum total of one certificate: half the deposits of a full group.
    pub fn max_cert_amount(&self) -> Coins {
        u64::from(self.cert_group_size) * self.cert_depo / 2
    }

    /// Signatures required on a certificate: floor(N/2) + 1.
    pub fn quorum(&self) -> usize {
        quorum_for(self.cert_group_size as usize)
    }

    /// Certifier fee charged on a gross withdrawal amount.
    pub fn fee_for(&self, gross: Coins) -> Coins {
        gross * u64::from(self.cert_fee) / 100
    }

    /// Whether a certificate of `cert_epoch` may still be accepted at `height`.
    pub fn in_acceptance_window(&self, cert_epoch: u64, height: u64) -> bool {
        match self.withdrawal_epoch_of(height) {
            Ok(pos) => pos.epoch > cert_epoch && pos.epoch <= cert_epoch + self.dispute_len,
            Err(_) => false,
        }
    }
}

pub fn quorum_for(group_size: usize) -> usize {
    group_size / 2 + 1
}

#[cfg(test)]
pub(crate) fn sample_params(name: &str) -> SidechainParams {
    SidechainParams {
        ledger_id: LedgerId::from_name(name),
        start_block: 0,
        epoch_len: 720,
        prep_len: 10,
        cert_depo: 100,
        cert_group_size: 5,
        cert_fee: 1,
        min_transfer_amount: 10,
        dispute_len: 2,
    }
}
