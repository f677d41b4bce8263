//! Cross-chain certification: backward-transfer grouping, certifier
//! lottery, signing rounds, rewards and fraud detection.
//!
//! Everything here is a pure function of its inputs. The mainchain uses the
//! lottery to recompute who may sign a certificate; the sidechain runs the
//! whole pipeline at withdrawal-epoch stage boundaries.

pub mod cert;
pub mod fraud;
pub mod grouping;
pub mod lottery;
pub mod pipeline;
pub mod rewards;
pub mod signing;

pub use cert::{BTList, BackwardTransfer, CrossChainCertificate, FraudReport};
pub use fraud::{detect_fraud, report_against};
pub use grouping::{
    group_backward_transfers, group_by_cap, max_cert_amount, max_transfers_per_cert, GroupingError,
};
pub use lottery::{
    build_certifier_groups, eligible_certifiers, epoch_randomness, lottery_ticket, min_proof_hash,
    CertifierGroup,
};
pub use pipeline::{build_certificates, collect_backward_transfers, QueuedTransfer};
pub use rewards::{compute_rewards, RewardPlan};
pub use signing::{Finalized, PlannedCert, SigningError, SigningRound};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CctError {
    #[error("no preparation-stage blocks to draw randomness from")]
    EmptyRange,
    #[error("preparation stage of epoch {epoch} has not closed")]
    EpochNotClosed { epoch: u64 },
    #[error("certificate was not accepted as planned")]
    CertNotAccepted,
    #[error(transparent)]
    Grouping(#[from] GroupingError),
}
