//! The scenario corpus end to end: clean audits, tallies that agree with
//! ledger state, liveness and the expected fault outcomes.

mod common;

use std::collections::BTreeMap;

use sidepeg::chain::Hash;
use sidepeg::sim::{fold_report, run_scenario, Event, World};

fn counted(world: &World) -> Vec<&Event> {
    let reverted: Vec<Hash> = world
        .log
        .events
        .iter()
        .filter(|e| e.kind.ends_with("_block_reverted"))
        .filter_map(|e| e.payload)
        .collect();
    world
        .log
        .events
        .iter()
        .filter(|e| !e.block.is_some_and(|b| reverted.contains(&b)))
        .collect()
}

#[test]
fn corpus_runs_clean_and_tallies_match_state() {
    for cfg in common::corpus() {
        let world = run_scenario(cfg.clone()).unwrap_or_else(|e| panic!("{}: {e}", cfg.name));
        let report = world.report();
        assert_eq!(
            report,
            fold_report(&cfg, &world.log.events, world.audits_run)
        );
        assert_eq!(report.mc_height, cfg.mc_blocks, "{}", cfg.name);
        for (inst, sc) in world.sidechains.iter().zip(&report.sidechains) {
            let peg = world.mc.state().peg(&inst.id()).unwrap();
            assert_eq!(
                sc.forward_total, peg.forward_total,
                "{}/{}",
                cfg.name, sc.name
            );
            assert_eq!(
                sc.withdrawn_total, peg.withdrawn_total,
                "{}/{}",
                cfg.name, sc.name
            );
            assert_eq!(
                sc.certificates_accepted,
                peg.accepted.len() as u64,
                "{}/{}",
                cfg.name,
                sc.name
            );
            assert_eq!(
                sc.deposits_destroyed, peg.destroyed_deposits,
                "{}/{}",
                cfg.name, sc.name
            );
            let state = inst.chain.as_ref().unwrap().state();
            assert_eq!(
                sc.rewards_paid, state.totals.rewards_paid,
                "{}/{}",
                cfg.name, sc.name
            );
            assert_eq!(sc.sc_blocks, state.height, "{}/{}", cfg.name, sc.name);
        }
    }
}

#[test]
fn honest_withdrawals_are_paid_within_dispute_window() {
    let world = run_scenario(common::load("honest_baseline")).unwrap();
    let params = &world.sidechains[0].params;
    let events = counted(&world);
    let paid: BTreeMap<Hash, u64> = events
        .iter()
        .filter(|e| e.kind == "withdrawal_paid")
        .map(|e| (e.payload.unwrap(), e.step))
        .collect();
    let mut checked = 0;
    for q in events.iter().filter(|e| e.kind == "withdrawal_queued") {
        let origin = q.epoch.unwrap();
        let deadline = params.epoch_start(origin + params.dispute_len + 2);
        if deadline > world.config.mc_blocks {
            continue;
        }
        let id = q.payload.unwrap();
        let at = paid.get(&id).copied();
        assert!(
            at.is_some_and(|s| s < deadline),
            "withdrawal {id:?} from epoch {origin} paid at {at:?}"
        );
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} withdrawals checked");
}

#[test]
fn fraud_is_punished() {
    let world = run_scenario(common::load("fraud_collusion")).unwrap();
    let sc = &world.report().sidechains[0];
    assert_eq!(sc.frauds_submitted, 1);
    assert_eq!(sc.frauds_detected, 1);
    assert_eq!(sc.certifiers_punished, 3);
    assert_eq!(sc.deposits_destroyed, 300);
}

#[test]
fn faults_leave_visible_traces() {
    let report = run_scenario(common::load("omitted_refs")).unwrap().report();
    let sc = &report.sidechains[0];
    assert!(sc.slots_skipped > 0 && sc.sc_blocks_rejected > 0, "{sc:?}");
    assert!(sc.withdrawals_paid > 0);

    let report = run_scenario(common::load("withholding")).unwrap().report();
    let sc = &report.sidechains[0];
    assert!(sc.certificates_insufficient > 0, "{sc:?}");
    assert!(sc.withdrawals_paid > 0);

    let world = run_scenario(common::load("drop_delay")).unwrap();
    let sc = &world.report().sidechains[0];
    assert!(sc.certificates_expired > 0, "{sc:?}");
    assert_eq!(
        sc.withdrawals_paid, sc.withdrawals_queued,
        "expired transfers must be paid later"
    );
    assert!(world
        .log
        .events
        .iter()
        .any(|e| e.kind == "certificate_dropped"));

    let report = run_scenario(common::load("mc_reorg")).unwrap().report();
    assert!(
        report.mc_blocks_reverted >= 11 && report.sc_blocks_reverted > 0,
        "{report:?}"
    );
}

#[test]
fn seed_override_changes_the_run() {
    let mut cfg = common::load("honest_baseline");
    let a = run_scenario(cfg.clone()).unwrap();
    cfg.seed += 1;
    let b = run_scenario(cfg).unwrap();
    assert_ne!(a.log, b.log);
}
