//! Run summary computed purely from the event log, so anyone holding the log
//! can recompute it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::events::Event;
use crate::chain::{Coins, Hash};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScReport {
    pub name: String,
    pub forward_total: Coins,
    pub withdrawn_total: Coins,
    pub certificates_accepted: u64,
    pub certificates_insufficient: u64,
    pub certificates_expired: u64,
    pub frauds_submitted: u64,
    pub frauds_detected: u64,
    pub certifiers_punished: u64,
    pub deposits_destroyed: Coins,
    pub rewards_paid: Coins,
    pub rewards_burned: Coins,
    pub withdrawals_queued: u64,
    pub withdrawals_paid: u64,
    pub sc_blocks: u64,
    pub slots_skipped: u64,
    pub sc_blocks_rejected: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: String,
    pub seed: u64,
    pub mc_height: u64,
    pub events: u64,
    pub mc_blocks_reverted: u64,
    pub sc_blocks_reverted: u64,
    pub txs_rejected: u64,
    pub audits_run: u64,
    pub sidechains: Vec<ScReport>,
}

/// Tallies every event that still counts: events produced by a block that
/// was later reverted are skipped.
pub fn fold_report(config: &ScenarioConfig, events: &[Event], audits_run: u64) -> SimReport {
    let reverted: BTreeSet<Hash> = events
        .iter()
        .filter(|e| e.kind == "mc_block_reverted" || e.kind == "sc_block_reverted")
        .filter_map(|e| e.payload)
        .collect();
    let mut per_sc: BTreeMap<&str, ScReport> = config
        .sidechains
        .iter()
        .map(|s| {
            (
                s.name.as_str(),
                ScReport {
                    name: s.name.clone(),
                    ..ScReport::default()
                },
            )
        })
        .collect();
    let mut report = SimReport {
        scenario: config.name.clone(),
        seed: config.seed,
        events: events.len() as u64,
        audits_run,
        ..SimReport::default()
    };

    for e in events {
        if e.block.is_some_and(|b| reverted.contains(&b)) {
            continue;
        }
        let amount = e.amount.unwrap_or(0);
        match e.kind.as_str() {
            "mc_block" => report.mc_height += 1,
            "mc_block_reverted" => report.mc_blocks_reverted += 1,
            "sc_block_reverted" => report.sc_blocks_reverted += 1,
            "tx_rejected" => report.txs_rejected += 1,
            _ => {}
        }
        let Some(sc) = e.sidechain.as_deref().and_then(|n| per_sc.get_mut(n)) else {
            continue;
        };
        match e.kind.as_str() {
            "forward_transfer" => sc.forward_total += amount,
            "certificate_accepted" => {
                sc.certificates_accepted += 1;
                sc.withdrawn_total += amount;
            }
            "certificate_insufficient" => sc.certificates_insufficient += 1,
            "certificate_expired" => sc.certificates_expired += 1,
            "fraud_submitted" => sc.frauds_submitted += 1,
            "fraud_detected" => sc.frauds_detected += 1,
            "certifier_punished" => {
                sc.certifiers_punished += 1;
                sc.deposits_destroyed += amount;
            }
            "rewards_paid" => sc.rewards_paid += amount,
            "rewards_burned" => sc.rewards_burned += amount,
            "withdrawal_queued" => sc.withdrawals_queued += 1,
            "withdrawal_paid" => sc.withdrawals_paid += 1,
            "sc_block" => sc.sc_blocks += 1,
            "slot_skipped" => sc.slots_skipped += 1,
            "sc_block_rejected" => sc.sc_blocks_rejected += 1,
            _ => {}
        }
    }
    report.sidechains = config
        .sidechains
        .iter()
        .filter_map(|s| per_sc.remove(s.name.as_str()))
        .collect();
    report
}
