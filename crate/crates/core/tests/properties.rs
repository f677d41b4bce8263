//! Property tests over the primitives, each checked against an independent
//! oracle written here.

use std::collections::BTreeSet;

use proptest::prelude::*;
use sha2::{Digest, Sha256};
use sidepeg::cct::{build_certifier_groups, group_by_cap, lottery_ticket, min_proof_hash};
use sidepeg::chain::{
    aggregate_signatures, hash_bytes, merkle_path, merkle_root, verify_aggregate,
    verify_merkle_path, Hash, KeyPair, PubKey,
};

fn leaf(i: u64) -> Hash {
    hash_bytes(&i.to_le_bytes())
}

/// Root computed with raw SHA-256 over the pairing rule, independent of the
/// library's level builder.
fn oracle_root(leaves: &[Hash]) -> Hash {
    let mut level: Vec<[u8; 32]> = leaves.iter().map(|h| *h.as_bytes()).collect();
    loop {
        let mut next = Vec::new();
        for pair in level.chunks(2) {
            let right = pair.get(1).unwrap_or(&pair[0]);
            let mut hasher = Sha256::new();
            hasher.update(pair[0]);
            hasher.update(right);
            next.push(hasher.finalize().into());
        }
        level = next;
        if level.len() == 1 {
            return Hash::from(level[0]);
        }
    }
}

/// Prefix-sum oracle for greedy grouping: a new list starts exactly where
/// the running sum since the current list start would pass the cap.
fn oracle_groups(amounts: &[u64], cap: u64) -> Vec<Vec<u64>> {
    let prefix: Vec<u64> = std::iter::once(0)
        .chain(amounts.iter().scan(0u64, |acc, a| {
            *acc += a;
            Some(*acc)
        }))
        .collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < amounts.len() {
        let mut end = start + 1;
        while end < amounts.len() && prefix[end + 1] - prefix[start] <= cap {
            end += 1;
        }
        out.push(amounts[start..end].to_vec());
        start = end;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn merkle_paths_round_trip(n in 1u64..40, pick in any::<prop::sample::Index>()) {
        let leaves: Vec<Hash> = (0..n).map(leaf).collect();
        let root = merkle_root(&leaves).unwrap();
        prop_assert_eq!(root, oracle_root(&leaves));
        let i = pick.index(leaves.len());
        let path = merkle_path(&leaves, i).unwrap();
        prop_assert!(verify_merkle_path(&leaves[i], &path, &root));
        prop_assert!(!verify_merkle_path(&leaf(n + 7), &path, &root));
    }

    #[test]
    fn grouping_matches_prefix_sum_oracle(amounts in prop::collection::vec(10u64..=250, 0..50)) {
        let ranges = group_by_cap(&amounts, 250, |a| *a).unwrap();
        let got: Vec<Vec<u64>> = ranges.iter().map(|r| amounts[r.clone()].to_vec()).collect();
        prop_assert_eq!(&got, &oracle_groups(&amounts, 250));
        let flat: Vec<u64> = got.iter().flatten().copied().collect();
        prop_assert_eq!(flat, amounts.clone());
        for (i, g) in got.iter().enumerate() {
            prop_assert!(g.iter().sum::<u64>() <= 250);
            if let Some(next) = got.get(i + 1) {
                prop_assert!(g.iter().sum::<u64>() + next[0] > 250, "group {} is not maximal", i);
            }
        }
    }

    #[test]
    fn aggregate_verifies_iff_quorum_of_members(
        n_signers in 0usize..=5,
        outsider in any::<bool>(),
        msg in any::<u64>(),
    ) {
        let members: Vec<KeyPair> = (0..5).map(|i| KeyPair::from_name(&format!("m{i}"))).collect();
        let allowed: BTreeSet<PubKey> = members.iter().map(KeyPair::public).collect();
        let message = leaf(msg);
        let mut sigs: Vec<_> = members[..n_signers].iter().map(|k| k.sign(message)).collect();
        if outsider {
            sigs.push(KeyPair::from_name("outsider").sign(message));
        }
        let agg = aggregate_signatures(&sigs).unwrap();
        let expected = !outsider && n_signers >= 3;
        prop_assert_eq!(verify_aggregate(&agg, &message, &allowed, 3), expected);
        prop_assert!(!verify_aggregate(&agg, &leaf(msg ^ 1), &allowed, 3));
    }

    #[test]
    fn lottery_is_order_free_and_disjoint(n in 0usize..40, seed in any::<u64>(), epoch in 0u64..100) {
        let keys: Vec<PubKey> = (0..n).map(|i| KeyPair::from_name(&format!("c{seed}-{i}")).public()).collect();
        let ec: BTreeSet<PubKey> = keys.iter().copied().collect();
        let rand = leaf(seed);
        let groups = build_certifier_groups(&ec, &rand, epoch, 5);
        prop_assert_eq!(groups.len(), n / 5);

        // independent ranking: selection sort on raw ticket bytes
        let mut pool: Vec<([u8; 32], PubKey)> =
            keys.iter().rev().map(|pk| (*lottery_ticket(&rand, epoch, pk).as_bytes(), *pk)).collect();
        let mut ranked = Vec::new();
        while !pool.is_empty() {
            let best = (0..pool.len()).min_by(|&a, &b| pool[a].cmp(&pool[b])).unwrap();
            ranked.push(pool.swap_remove(best).1);
        }
        let flat: Vec<PubKey> = groups.iter().flat_map(|g| g.members.clone()).collect();
        prop_assert_eq!(&flat[..], &ranked[..flat.len()]);
        let distinct: BTreeSet<PubKey> = flat.iter().copied().collect();
        prop_assert_eq!(distinct.len(), flat.len());
    }

    #[test]
    fn hash_order_is_bytewise(a in any::<[u8; 32]>(), b in any::<[u8; 32]>()) {
        let (ha, hb) = (Hash::from(a), Hash::from(b));
        prop_assert_eq!(ha.cmp(&hb), a.cmp(&b));
        let min = min_proof_hash([ha, hb]).unwrap();
        prop_assert_eq!(*min.as_bytes(), a.min(b));
    }
}

#[test]
fn hashing_is_plain_sha256() {
    let data = b"sidepeg";
    let expected: [u8; 32] = Sha256::digest(data).into();
    assert_eq!(*hash_bytes(data).as_bytes(), expected);
}
