use crate::error::{Error, Result};
use crate::manifest::{Manifest, SplitTag};
use crate::rng::{derive_seed_tagged, SplitMix64};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Number of test entries for `n` entries: `n * fraction` rounded half-up.
pub fn test_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction) + 0.5).floor() as usize
}

/// Seeded random train/test partition.
///
/// The entries are permuted with a Fisher-Yates shuffle driven by
/// `derive_seed_tagged(seed, "split")`; the first [`test_count`] positions
/// of the permutation form the test set. Both outputs keep the input order.
pub fn split_dataset(manifest: &Manifest, test_fraction: f64, seed: u64) -> Result<(Manifest, Manifest)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if manifest.split != SplitTag::Unsplit {
        return Err(Error::InvalidArgument(format!(
            "manifest is already a {:?} split",
            manifest.split
        )));
    }
    if manifest.is_empty() {
        return Err(Error::Empty("manifest"));
    }
    let n = manifest.len();
    let k = test_count(n, test_fraction);
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(derive_seed_tagged(seed, "split")).shuffle(&mut order);
    let mut is_test = vec![false; n];
    for &i in &order[..k] {
        is_test[i] = true;
    }
    let (test, train): (Vec<_>, Vec<_>) = manifest
        .entries
        .iter()
        .cloned()
        .zip(is_test)
        .partition(|(_, t)| *t);
    Ok((
        Manifest {
            entries: train.into_iter().map(|(e, _)| e).collect(),
            split: SplitTag::Train,
        },
        Manifest {
            entries: test.into_iter().map(|(e, _)| e).collect(),
            split: SplitTag::Test,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::ManifestEntry;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn synthetic(n: usize) -> Manifest {
        let entries = (0..n).map(|i| ManifestEntry::new(format!("e{i:05}"), format!("rgb/{i}.png"))).collect();
        Manifest::new(entries, SplitTag::Unsplit).unwrap()
    }

    #[test]
    fn full_scale_counts() {
        let (train, test) = split_dataset(&synthetic(3804), 0.2, 11).unwrap();
        assert_eq!((train.len(), test.len()), (3043, 761));
    }

    #[test]
    fn ten_entries() {
        for seed in 0..20 {
            let (train, test) = split_dataset(&synthetic(10), 0.2, seed).unwrap();
            assert_eq!((train.len(), test.len()), (8, 2));
        }
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(test_count(5, 0.5), 3);
        assert_eq!(test_count(3804, 0.2), 761);
        assert_eq!(test_count(7, 0.2), 1);
        assert_eq!(test_count(8, 0.2), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(split_dataset(&synthetic(0), 0.2, 1), Err(Error::Empty(_))));
        assert!(split_dataset(&synthetic(4), 0.0, 1).is_err());
        assert!(split_dataset(&synthetic(4), 1.0, 1).is_err());
        let (train, _) = split_dataset(&synthetic(4), 0.5, 1).unwrap();
        assert!(split_dataset(&train, 0.5, 1).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_determinism(n in 1usize..200, f in 0.01f64..0.99, seed in any::<u64>()) {
            let m = synthetic(n);
            let (train, test) = split_dataset(&m, f, seed).unwrap();
            let (train2, test2) = split_dataset(&m, f, seed).unwrap();
            prop_assert_eq!(&train, &train2);
            prop_assert_eq!(&test, &test2);
            prop_assert_eq!(test.len(), test_count(n, f));
            let a: BTreeSet<&str> = train.ids().collect();
            let b: BTreeSet<&str> = test.ids().collect();
            prop_assert!(a.is_disjoint(&b));
            let all: BTreeSet<&str> = m.ids().collect();
            prop_assert_eq!(a.union(&b).copied().collect::<BTreeSet<_>>(), all);
        }
    }
}
