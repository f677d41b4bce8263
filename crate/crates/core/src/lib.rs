//! A two-way peg between a proof-of-work mainchain and a proof-of-stake
//! sidechain, with certifier-signed withdrawal certificates, a safeguard
//! balance and fraud disputes, plus a deterministic simulator to drive both
//! ledgers.

pub mod cct;
pub mod chain;
pub mod mainchain;
pub mod sidechain;
pub mod sim;
