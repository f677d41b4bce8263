//! The proof-of-stake sidechain: slot-leader consensus, mainchain
//! referencing with deterministic transaction sync, withdrawal requests and
//! the sidechain half of the certificate pipeline.

pub mod block;
pub mod chain;
pub mod consensus;
pub mod error;
pub mod forge;
pub mod state;

pub use block::{
    CertifierSignature, MainchainReference, RewardPayout, SidechainBlock, SyncedTx,
    WithdrawalRequest,
};
pub use chain::{check_references, replay_from_genesis, SidechainChain};
pub use consensus::{select_slot_leaders, slot_leader, SlotId, ZeroStake};
pub use error::ScError;
pub use forge::{forge_block, ForgePolicy, Mempool};
pub use state::{AwaitingCert, ScEvent, ScTotals, SidechainState};
