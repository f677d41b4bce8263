use super::params::{LedgerId, ParamsError};
use crate::chain::{Coins, Hash};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum McError {
    #[error("sidechain {0:?} is already registered")]
    DuplicateLedgerId(LedgerId),
    #[error(transparent)]
    InvalidParams(#[from] ParamsError),
    #[error("start block {start_block} is not after current height {height}")]
    StartInPast { start_block: u64, height: u64 },
    #[error("deployment fee {paid} is below the required {required}")]
    InsufficientDeploymentFee { paid: Coins, required: Coins },
    #[error("unknown sidechain {0:?}")]
    UnknownSidechain(LedgerId),
    #[error("sidechain activates at height {start_block}")]
    SidechainNotStarted { start_block: u64 },
    #[error("balance {available} is below required {needed}")]
    InsufficientBalance { needed: Coins, available: Coins },
    #[error("signature does not verify")]
    BadSignature,
    #[error("transaction {0} was already included")]
    DuplicateTx(Hash),
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("deposit {paid} differs from required {required}")]
    WrongDepositAmount { paid: Coins, required: Coins },
    #[error("certifier is already registered for this sidechain")]
    AlreadyRegistered,
    #[error("no matching certifier registration")]
    UnknownCertifier,
    #[error("certifier was punished")]
    AlreadyPunished,
    #[error("certifier already requested withdrawal")]
    AlreadyRequested,
    #[error("certificate ({epoch}, {index}) was already accepted")]
    DuplicateCertificate { epoch: u64, index: u32 },
    #[error("certificate for epoch {epoch} is outside its acceptance window")]
    OutsideAcceptanceWindow { epoch: u64 },
    #[error("no certifier group ({epoch}, {index})")]
    UnknownCertifierGroup { epoch: u64, index: u32 },
    #[error("aggregated signature does not reach quorum of the certifier group")]
    QuorumNotMet,
    #[error("certificate total {total} exceeds MAX_CERT_AMOUNT {max}")]
    ExceedsMaxCertAmount { total: Coins, max: Coins },
    #[error("certificate total {total} exceeds safeguard {safeguard}")]
    ExceedsSafeguard { total: Coins, safeguard: Coins },
    #[error("transfer of {amount} is below the minimum {min}")]
    BelowMinTransfer { amount: Coins, min: Coins },
    #[error("fraud report does not match an accepted certificate in its window")]
    InvalidFraudReport,
    #[error("transaction {index} is invalid: {source}")]
    InvalidTx { index: usize, source: Box<McError> },
    #[error("block does not extend the tip: {0}")]
    BadBlock(&'static str),
    #[error("fork does not carry more cumulative work")]
    NotHeavier,
    #[error("fork does not attach to a known block")]
    UnknownAncestor,
}
