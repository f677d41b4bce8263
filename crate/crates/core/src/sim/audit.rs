//! Invariant checks run after every simulated block. Each check recomputes
//! its quantity from raw blocks rather than trusting running totals.

use std::collections::BTreeMap;

use super::world::World;
use crate::chain::{verify_aggregate, Coins};
use crate::mainchain::{LedgerId, Mainchain, McTx};

/// Forward and withdrawn totals for `id` summed over the active chain up to
/// and including `max_height`.
fn recount(mc: &Mainchain, id: &LedgerId, max_height: u64) -> (Coins, Coins) {
    let (mut forward, mut withdrawn) = (0, 0);
    for block in mc.blocks().iter().take(max_height as usize + 1) {
        for tx in &block.transactions {
            match tx {
                McTx::Send(s) if s.ledger_id == *id => forward += s.amount,
                McTx::Certificate(c) if c.sidechain_id == *id => withdrawn += c.total_amount(),
                _ => {}
            }
        }
    }
    (forward, withdrawn)
}

/// Every violated invariant, as a human-readable line.
pub fn audit_world(world: &World) -> Vec<String> {
    let mut out = Vec::new();
    let mc = &world.mc;
    let st = mc.state();

    let s = &st.supply;
    let lhs = st.circulating_supply() as i128;
    let rhs = s.genesis as i128 - s.fees_burned as i128 - s.forward_burned as i128
        + s.outputs_created as i128
        - s.deposits_destroyed as i128;
    if lhs != rhs {
        out.push(format!(
            "mainchain supply: circulating {lhs} != accounted {rhs}"
        ));
    }

    for inst in &world.sidechains {
        let id = inst.id();
        let name = &inst.name;
        let Some(peg) = st.peg(&id) else { continue };

        let (f, o) = recount(mc, &id, mc.height());
        if peg.forward_total != f || peg.withdrawn_total != o {
            out.push(format!(
                "{name}: peg totals F={} O={} but blocks give F={f} O={o}",
                peg.forward_total, peg.withdrawn_total
            ));
        }
        if o > f {
            out.push(format!(
                "{name}: withdrawn {o} exceeds forward deposits {f}"
            ));
        } else if peg.safeguard != f - o {
            out.push(format!(
                "{name}: safeguard {} != F - O = {}",
                peg.safeguard,
                f - o
            ));
        }
        let outputs: Coins = st
            .created_outputs
            .iter()
            .filter(|c| c.sidechain == id)
            .map(|c| c.amount)
            .sum();
        if outputs != o {
            out.push(format!(
                "{name}: created outputs {outputs} != certified {o}"
            ));
        }

        let mut per_epoch: BTreeMap<u64, usize> = BTreeMap::new();
        for ((epoch, index), acc) in &peg.accepted {
            *per_epoch.entry(*epoch).or_default() += 1;
            let ok = peg.group(*epoch, *index).is_some_and(|g| {
                verify_aggregate(
                    &acc.cert.agg_sig,
                    &acc.payload,
                    &g.member_set(),
                    peg.params.quorum(),
                )
            });
            if !ok {
                out.push(format!(
                    "{name}: accepted certificate ({epoch},{index}) lacks a group quorum"
                ));
            }
        }
        for (epoch, count) in per_epoch {
            let cap = peg.committee(epoch).map_or(0, |c| {
                c.eligible.len() / peg.params.cert_group_size as usize
            });
            if count > cap {
                out.push(format!(
                    "{name}: epoch {epoch} has {count} certificates, cap {cap}"
                ));
            }
        }

        let Some(chain) = inst.chain.as_ref() else {
            continue;
        };
        let sc = chain.state();
        let first = peg.created_at + 1;
        let referenced = chain.referenced_hashes();
        if sc.cursor != first + referenced.len() as u64 {
            out.push(format!(
                "{name}: cursor {} does not follow {} references",
                sc.cursor,
                referenced.len()
            ));
        }
        for (i, hash) in referenced.iter().enumerate() {
            let height = first + i as u64;
            if mc.block_at(height).map(|b| b.hash()) != Some(*hash) {
                out.push(format!(
                    "{name}: reference to height {height} is not on the active mainchain"
                ));
                break;
            }
        }

        let credited_oracle = if sc.cursor > first {
            recount(mc, &id, sc.cursor - 1).0
        } else {
            0
        };
        if sc.totals.credited != credited_oracle {
            out.push(format!(
                "{name}: sidechain credited {} but referenced blocks send {credited_oracle}",
                sc.totals.credited
            ));
        }
        if sc.totals.credited > f {
            out.push(format!(
                "{name}: sidechain credited {} beyond forward deposits {f}",
                sc.totals.credited
            ));
        }

        let t = &sc.totals;
        let held = sc.circulating() + sc.pending_gross() + t.paid_net + t.fee_burned + t.lost;
        if held != t.credited {
            out.push(format!(
                "{name}: sidechain conservation: held {held} != credited {}",
                t.credited
            ));
        }

        if let Some(mc_view) = mc.state_at(sc.cursor - 1).and_then(|s| s.peg(&id)) {
            if *mc_view != sc.replica {
                out.push(format!(
                    "{name}: certifier replica diverges from mainchain at height {}",
                    sc.cursor - 1
                ));
            }
        }
    }
    out
}
