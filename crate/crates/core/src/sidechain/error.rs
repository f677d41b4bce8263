use crate::cct::{CctError, SigningError};
use crate::chain::Coins;
use crate::mainchain::McError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScError {
    #[error("block does not extend the tip")]
    BadParent,
    #[error("slot does not advance past the parent's slot")]
    SlotNotIncreasing,
    #[error("slot index exceeds the consensus epoch length")]
    BadSlot,
    #[error("forger is not the slot leader")]
    WrongLeader,
    #[error("forger signature does not verify")]
    BadForgerSignature,
    #[error("local key is not the slot leader")]
    NotLeader,
    #[error("reference to height {got} but the cursor is at {expected}")]
    ReferenceGap { expected: u64, got: u64 },
    #[error("reference to height {height} is beyond the block's slot")]
    FutureReference { height: u64 },
    #[error("referenced mainchain block at height {height} is not on the active chain")]
    UnknownMcBlock { height: u64 },
    #[error("reference header or proof hash does not match the mainchain block")]
    BadHeader,
    #[error("a sidechain-related transaction of the referenced block is missing")]
    MissingSyncedTx,
    #[error("synced transaction is not part of the referenced block for this sidechain")]
    UnexpectedSyncedTx,
    #[error("merkle path does not verify")]
    BadMerklePath,
    #[error("balance {available} below {needed}")]
    InsufficientBalance { needed: Coins, available: Coins },
    #[error("net amount {amount} is below the minimum {min}")]
    BelowMinTransfer { amount: Coins, min: Coins },
    #[error("net amount {amount} exceeds MAX_CERT_AMOUNT {max}")]
    ExceedsMaxCertAmount { amount: Coins, max: Coins },
    #[error("fee {got} differs from the required {expected}")]
    WrongFee { expected: Coins, got: Coins },
    #[error("request signature does not verify")]
    BadSignature,
    #[error("withdrawal request was already included")]
    DuplicateRequest,
    #[error("no signing round open for epoch {epoch}")]
    NoOpenRound { epoch: u64 },
    #[error(transparent)]
    Signing(#[from] SigningError),
    #[error("reward payouts differ from the recomputed ones")]
    RewardMismatch,
    #[error("replicated peg state rejected a mainchain transaction: {0}")]
    ReplicaDivergence(McError),
    #[error("reverted mainchain blocks are not a suffix of the referenced history")]
    NotASuffix,
    #[error(transparent)]
    Cct(#[from] CctError),
    #[error("stake distribution has zero total stake")]
    ZeroStake,
}
