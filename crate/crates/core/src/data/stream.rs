use std::collections::BTreeSet;

use super::dataset::Dataset;
use crate::rng::{derive_seed, Rng};

/// One test sample as seen by the adaptation loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRecord {
    /// Position of the record in its dataset.
    pub id: usize,
    pub text: String,
    pub label: Option<usize>,
    pub groups: BTreeSet<usize>,
    /// `stream_seed ⊕ id`; seeds this sample's augmentation rng.
    pub seed: u64,
}

/// The dataset in a seed-determined shuffled order.
pub fn stream(ds: &Dataset, seed: u64) -> Vec<StreamRecord> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    Rng::new(seed).shuffle(&mut order);
    order
        .into_iter()
        .map(|id| {
            let r = &ds.records[id];
            StreamRecord {
                id,
                text: r.text.clone(),
                label: Some(r.label),
                groups: r.groups.clone(),
                seed: derive_seed(seed, id as u64),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;

    fn ds(n: usize) -> Dataset {
        let recs = (0..n)
            .map(|i| Record {
                text: format!("t{i}"),
                label: i % 2,
                groups: BTreeSet::new(),
            })
            .collect();
        Dataset::new(recs, 2, 8).unwrap()
    }

    #[test]
    fn same_seed_same_order() {
        assert_eq!(stream(&ds(30), 5), stream(&ds(30), 5));
    }

    #[test]
    fn seeds_change_order() {
        let orders: Vec<Vec<usize>> = (0..5)
            .map(|s| stream(&ds(10), s).iter().map(|r| r.id).collect())
            .collect();
        assert!(orders.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn stream_is_a_permutation() {
        let d = ds(40);
        let s = stream(&d, 9);
        let mut ids: Vec<usize> = s.iter().map(|r| r.id).collect();
        ids.sort();
        assert_eq!(ids, (0..40).collect::<Vec<_>>());
        for r in &s {
            assert_eq!(r.text, d.records[r.id].text);
            assert_eq!(r.seed, 9 ^ r.id as u64);
        }
    }
}
