use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::{derive_seed_tagged, SplitMix64};

/// Random undersampling: every label keeps as many items as the rarest
/// label has, chosen without replacement. Labels are visited in ascending
/// order on one seeded stream; the kept items stay in input order.
pub fn balance_by_undersampling<T: Clone, K: Ord + Copy>(items: &[T], label: impl Fn(&T) -> K, seed: u64) -> Result<Vec<T>> {
    balanced_indices(items, label, seed).map(|idx| idx.into_iter().map(|i| items[i].clone()).collect())
}

/// Positions kept by [`balance_by_undersampling`], ascending.
pub fn balanced_indices<T, K: Ord + Copy>(items: &[T], label: impl Fn(&T) -> K, seed: u64) -> Result<Vec<usize>> {
    if items.is_empty() {
        return Err(Error::Empty("items to balance"));
    }
    let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        groups.entry(label(it)).or_default().push(i);
    }
    let keep = groups.values().map(Vec::len).min().expect("non-empty");
    let mut rng = SplitMix64::new(derive_seed_tagged(seed, "balance"));
    let mut out: Vec<usize> = groups
        .values()
        .flat_map(|g| rng.sample_indices(g.len(), keep).into_iter().map(|j| g[j]).collect::<Vec<_>>())
        .collect();
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_and_three() {
        let items: Vec<char> = "AAAAAAAAAABBB".chars().collect();
        let out = balance_by_undersampling(&items, |c| *c, 5).unwrap();
        assert_eq!(out.iter().filter(|&&c| c == 'A').count(), 3);
        assert_eq!(out.iter().filter(|&&c| c == 'B').count(), 3);
        assert!(balance_by_undersampling::<char, char>(&[], |c| *c, 5).is_err());
    }

    #[test]
    fn already_balanced_is_unchanged() {
        let items = vec![1, 2, 3, 1, 2, 3];
        assert_eq!(balance_by_undersampling(&items, |v| *v, 9).unwrap(), items);
    }

    proptest! {
        #[test]
        fn balanced_sub_multiset(labels in prop::collection::vec(0u8..4, 1..300), seed in any::<u64>()) {
            let idx = balanced_indices(&labels, |l| *l, seed).unwrap();
            prop_assert_eq!(&idx, &balanced_indices(&labels, |l| *l, seed).unwrap());
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            let mut counts = BTreeMap::new();
            for &l in &labels { *counts.entry(l).or_insert(0usize) += 1; }
            let min = *counts.values().min().unwrap();
            let mut kept = BTreeMap::new();
            for &i in &idx { *kept.entry(labels[i]).or_insert(0usize) += 1; }
            prop_assert_eq!(kept.len(), counts.len());
            prop_assert!(kept.values().all(|&c| c == min));
        }
    }
}
