//! The mainchain ledger: account balances, sidechain registry, the safeguard
//! balance that caps withdrawals, certifier deposits and certificate
//! acceptance. Mining is simulated; reorganizations restore snapshots.

pub mod block;
pub mod certifier;
pub mod error;
pub mod ledger;
pub mod params;
pub mod peg;
pub mod state;
pub mod tx;

pub use block::{proof_hash_for, tx_root, MainchainBlock, McBlockHeader};
pub use certifier::{CertifierRecord, ParticipationEntry, RevocationRequest};
pub use error::McError;
pub use ledger::{replay_from_genesis, Mainchain, ReorgOutcome};
pub use params::{quorum_for, EpochPosition, LedgerId, ParamsError, SidechainParams, Stage};
pub use peg::{AcceptedCert, CertEffects, EpochCommittee, PegBlockEffects, PegState};
pub use state::{BlockReceipt, CreatedOutput, MainchainState, SupplyLedger, TxEffect};
pub use tx::{CertifierRegTx, CertifierWithdrawTx, CreateSidechainTx, McTx, SendingTx};
