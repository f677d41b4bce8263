use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chain::Coins;
use crate::mainchain::{LedgerId, SidechainParams};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn default_deployment_fee() -> Coins {
    10
}

fn default_slots_per_epoch() -> u64 {
    10
}

fn default_count() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub mc_blocks: u64,
    #[serde(default = "default_deployment_fee")]
    pub deployment_fee: Coins,
    pub sidechains: Vec<SidechainSpec>,
    #[serde(default)]
    pub actors: Vec<ActorSpec>,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidechainSpec {
    pub name: String,
    pub create_at: u64,
    pub start_block: u64,
    pub epoch_len: u64,
    pub prep_len: u64,
    pub cert_depo: Coins,
    pub cert_group_size: u32,
    pub cert_fee: u32,
    pub min_transfer_amount: Coins,
    pub dispute_len: u64,
    #[serde(default = "default_slots_per_epoch")]
    pub slots_per_epoch: u64,
}

impl SidechainSpec {
    pub fn ledger_id(&self) -> LedgerId {
        LedgerId::from_name(&self.name)
    }

    pub fn params(&self) -> SidechainParams {
        SidechainParams {
            ledger_id: self.ledger_id(),
            start_block: self.start_block,
            epoch_len: self.epoch_len,
            prep_len: self.prep_len,
            cert_depo: self.cert_depo,
            cert_group_size: self.cert_group_size,
            cert_fee: self.cert_fee,
            min_transfer_amount: self.min_transfer_amount,
            dispute_len: self.dispute_len,
        }
    }

    pub fn creator_name(&self) -> String {
        format!("creator:{}", self.name)
    }
}

/// An amount scheduled at `at`, optionally repeating every `every` blocks
/// up to `until` (inclusive; defaults to the end of the run).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub at: u64,
    pub amount: Coins,
    #[serde(default)]
    pub every: Option<u64>,
    #[serde(default)]
    pub until: Option<u64>,
}

impl Schedule {
    pub fn fires_at(&self, height: u64, mc_blocks: u64) -> bool {
        if height < self.at || height > self.until.unwrap_or(mc_blocks) {
            return false;
        }
        match self.every {
            Some(every) if every > 0 => (height - self.at).is_multiple_of(every),
            _ => height == self.at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub name: String,
    #[serde(default = "default_count")]
    pub count: u32,
    pub sidechain: String,
    pub funds: Coins,
    #[serde(default)]
    pub deposits: Vec<Schedule>,
    /// Gross sidechain withdrawal amounts.
    #[serde(default)]
    pub withdrawals: Vec<Schedule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForgerPolicySpec {
    #[default]
    Honest,
    OmitReferences,
    /// Skips every slot whose global index is a multiple of `every`.
    SkipSlots {
        every: u64,
    },
    DropSyncedTxs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForgerSpec {
    pub name: String,
    #[serde(default = "default_count")]
    pub count: u32,
    pub sidechain: String,
    pub stake: u64,
    #[serde(default)]
    pub policy: ForgerPolicySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FraudMode {
    /// Same amounts as the honest certificate, all paid to a colluder.
    Redirect,
    /// One transfer of MAX_CERT_AMOUNT to a colluder.
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertifierPolicySpec {
    #[default]
    Honest,
    WithholdSignatures,
    SignFraudulent {
        mode: FraudMode,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifierSpec {
    pub name: String,
    #[serde(default = "default_count")]
    pub count: u32,
    pub sidechain: String,
    pub register_at: u64,
    #[serde(default)]
    pub withdraw_at: Option<u64>,
    #[serde(default)]
    pub policy: CertifierPolicySpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum ActorSpec {
    User(UserSpec),
    Forger(ForgerSpec),
    Certifier(CertifierSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultSpec {
    /// The block at `at` is mined on a fork replacing the last `depth` blocks.
    McReorg { at: u64, depth: u64 },
    /// Certificates headed for block `at` are lost.
    DropCertificate { at: u64 },
    /// No certificate submissions for blocks `at .. at + blocks`.
    DelaySubmission { at: u64, blocks: u64 },
    /// The miner of block `at` tries `attempts` nonces and keeps the one with
    /// the smallest proof hash, biasing epoch randomness.
    GrindProof { at: u64, attempts: u32 },
}

impl FaultSpec {
    pub fn at(&self) -> u64 {
        match *self {
            FaultSpec::McReorg { at, .. }
            | FaultSpec::DropCertificate { at }
            | FaultSpec::DelaySubmission { at, .. }
            | FaultSpec::GrindProof { at, .. } => at,
        }
    }
}

/// Expands `count` into distinct names: `name` alone, or `name-0 .. name-(n-1)`.
pub fn expand_names(name: &str, count: u32) -> Vec<String> {
    if count == 1 {
        vec![name.to_string()]
    } else {
        (0..count).map(|i| format!("{name}-{i}")).collect()
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sidechain_index(&self, name: &str) -> Option<usize> {
        self.sidechains.iter().position(|s| s.name == name)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mc_blocks == 0 {
            return Err(invalid("mc_blocks must be positive"));
        }
        if self.sidechains.is_empty() {
            return Err(invalid("at least one sidechain is required"));
        }
        let mut names = BTreeSet::new();
        for sc in &self.sidechains {
            if !names.insert(sc.name.clone()) {
                return Err(invalid(format!("duplicate sidechain name {}", sc.name)));
            }
            sc.params()
                .validate()
                .map_err(|e| invalid(format!("sidechain {}: {e}", sc.name)))?;
            if sc.create_at == 0 || sc.create_at >= sc.start_block {
                return Err(invalid(format!(
                    "sidechain {}: require 0 < create_at < start_block",
                    sc.name
                )));
            }
            if sc.slots_per_epoch == 0 {
                return Err(invalid(format!(
                    "sidechain {}: slots_per_epoch must be positive",
                    sc.name
                )));
            }
        }
        let mut actor_names = BTreeSet::new();
        for actor in &self.actors {
            let (name, count, sc) = match actor {
                ActorSpec::User(u) => (&u.name, u.count, &u.sidechain),
                ActorSpec::Forger(f) => (&f.name, f.count, &f.sidechain),
                ActorSpec::Certifier(c) => (&c.name, c.count, &c.sidechain),
            };
            if count == 0 {
                return Err(invalid(format!("actor {name}: count must be positive")));
            }
            if self.sidechain_index(sc).is_none() {
                return Err(invalid(format!("actor {name}: unknown sidechain {sc}")));
            }
            for n in expand_names(name, count) {
                if n.starts_with("creator:") || !actor_names.insert(n.clone()) {
                    return Err(invalid(format!("duplicate or reserved actor name {n}")));
                }
            }
        }
        for sc in &self.sidechains {
            let stake: u64 = self
                .actors
                .iter()
                .filter_map(|a| match a {
                    ActorSpec::Forger(f) if f.sidechain == sc.name => {
                        Some(f.stake * u64::from(f.count))
                    }
                    _ => None,
                })
                .sum();
            if stake == 0 {
                return Err(invalid(format!(
                    "sidechain {} has no forger stake",
                    sc.name
                )));
            }
        }
        for fault in &self.faults {
            if fault.at() == 0 || fault.at() > self.mc_blocks {
                return Err(invalid(format!(
                    "fault at {} is outside the run",
                    fault.at()
                )));
            }
            if let FaultSpec::McReorg { at, depth } = *fault {
                if depth == 0 || depth >= at {
                    return Err(invalid(format!("reorg at {at}: depth must be in 1..{at}")));
                }
                let lo = at - depth;
                if self
                    .sidechains
                    .iter()
                    .any(|s| s.create_at >= lo && s.create_at < at)
                {
                    return Err(invalid(format!(
                        "reorg at {at} would revert a sidechain creation"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
seed = 1
mc_blocks = 50

[[sidechains]]
name = "alpha"
create_at = 1
start_block = 5
epoch_len = 20
prep_len = 5
cert_depo = 100
cert_group_size = 5
cert_fee = 1
min_transfer_amount = 10
dispute_len = 2

[[actors]]
role = "forger"
name = "f"
sidechain = "alpha"
stake = 10

[[actors]]
role = "certifier"
name = "c"
count = 3
sidechain = "alpha"
register_at = 2
policy = { kind = "sign_fraudulent", mode = "redirect" }

[[actors]]
role = "user"
name = "u"
sidechain = "alpha"
funds = 1000
deposits = [{ at = 6, amount = 100 }]
withdrawals = [{ at = 8, amount = 50, every = 20 }]

[[faults]]
kind = "mc_reorg"
at = 30
depth = 2
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.deployment_fee, 10);
        assert_eq!(cfg.sidechains[0].slots_per_epoch, 10);
        assert_eq!(cfg.actors.len(), 3);
        match &cfg.actors[1] {
            ActorSpec::Certifier(c) => {
                assert_eq!(
                    c.policy,
                    CertifierPolicySpec::SignFraudulent {
                        mode: FraudMode::Redirect
                    }
                );
                assert_eq!(expand_names(&c.name, c.count), vec!["c-0", "c-1", "c-2"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(cfg.faults, vec![FaultSpec::McReorg { at: 30, depth: 2 }]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("seed = 1", "seed = 1\nbogus = 3");
        assert!(matches!(
            ScenarioConfig::from_toml(&text),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn semantic_errors() {
        let bad_sc = MINIMAL.replace(
            "sidechain = \"alpha\"\nstake",
            "sidechain = \"beta\"\nstake",
        );
        assert!(matches!(
            ScenarioConfig::from_toml(&bad_sc),
            Err(ConfigError::Invalid(_))
        ));
        let early = MINIMAL.replace("start_block = 5", "start_block = 1");
        assert!(matches!(
            ScenarioConfig::from_toml(&early),
            Err(ConfigError::Invalid(_))
        ));
        let deep = MINIMAL.replace("depth = 2", "depth = 30");
        assert!(matches!(
            ScenarioConfig::from_toml(&deep),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn schedules() {
        let s = Schedule {
            at: 8,
            amount: 1,
            every: Some(20),
            until: None,
        };
        let fired: Vec<u64> = (0..=60).filter(|&h| s.fires_at(h, 60)).collect();
        assert_eq!(fired, vec![8, 28, 48]);
        let once = Schedule {
            at: 3,
            amount: 1,
            every: None,
            until: None,
        };
        assert_eq!((0..10).filter(|&h| once.fires_at(h, 10)).count(), 1);
    }
}
