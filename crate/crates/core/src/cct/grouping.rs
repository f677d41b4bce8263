//! Greedy grouping of the ordered backward-transfer queue into lists whose
//! totals stay within the per-certificate cap.

use std::ops::Range;

use super::cert::{BTList, BackwardTransfer};
use crate::chain::Coins;
use crate::mainchain::SidechainParams;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupingError {
    #[error("transfer #{index} of {amount} exceeds the certificate cap {cap}")]
    OversizedTransfer {
        index: usize,
        amount: Coins,
        cap: Coins,
    },
}

pub fn max_cert_amount(params: &SidechainParams) -> Coins {
    params.max_cert_amount()
}

/// Upper bound on transfers per certificate, `MAX_CERT_AMOUNT / MIN_TRANSFER_AMOUNT`.
pub fn max_transfers_per_cert(params: &SidechainParams) -> u64 {
    params.max_cert_amount() / params.min_transfer_amount
}

/// Splits `items` into maximal consecutive runs whose amounts sum to at most
/// `cap`. Returns index ranges into `items`.
pub fn group_by_cap<T>(
    items: &[T],
    cap: Coins,
    amount: impl Fn(&T) -> Coins,
) -> Result<Vec<Range<usize>>, GroupingError> {
    let mut ranges = Vec::new();
    let mut start = 0;
    let mut running: Coins = 0;
    for (index, item) in items.iter().enumerate() {
        let a = amount(item);
        if a > cap {
            return Err(GroupingError::OversizedTransfer {
                index,
                amount: a,
                cap,
            });
        }
        if running + a > cap {
            ranges.push(start..index);
            start = index;
            running = 0;
        }
        running += a;
    }
    if start < items.len() {
        ranges.push(start..items.len());
    }
    Ok(ranges)
}

pub fn group_backward_transfers(
    bts: &[BackwardTransfer],
    max_cert_amount: Coins,
    epoch: u64,
) -> Result<Vec<BTList>, GroupingError> {
    let ranges = group_by_cap(bts, max_cert_amount, |t| t.amount)?;
    Ok(ranges
        .into_iter()
        .enumerate()
        .map(|(i, r)| BTList {
            transfers: bts[r].to_vec(),
            epoch,
            list_index: i as u32,
        })
        .collect())
}
