use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::FeatureVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
    pub seed: u64,
}

/// Per-class seeded shuffle; `floor(ratio * n_class)` of each class goes to
/// train and the rest to test. Both parts keep the input order.
pub fn stratified_split(vectors: &[FeatureVector], ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; vectors.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..vectors.len())
            .filter(|&i| vectors[i].label == class)
            .collect();
        if members.is_empty() {
            return Err(Error::MissingClass(class));
        }
        members.shuffle(&mut rng);
        // The small offset keeps products like 0.8 * 5 from flooring to 3.
        let n_train = (ratio * members.len() as f64 + 1e-9).floor() as usize;
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = vectors
        .iter()
        .zip(&in_train)
        .partition(|(_, &t)| t);
    Ok(DatasetSplit {
        train: train.into_iter().map(|(v, _)| v.clone()).collect(),
        test: test.into_iter().map(|(v, _)| v.clone()).collect(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::class_counts;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn cohort(n0: usize, n1: usize) -> Vec<FeatureVector> {
        (0..n0 + n1)
            .map(|i| FeatureVector {
                id: format!("s{i}"),
                values: vec![i as f32],
                label: u8::from(i >= n0),
            })
            .collect()
    }

    #[test]
    fn sizes_for_reference_cohort() {
        let s = stratified_split(&cohort(2313, 1154), 0.8, 7).unwrap();
        assert_eq!(s.test.len(), 694);
        assert_eq!(class_counts(&s.test), [463, 231]);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = cohort(30, 12);
        let a = stratified_split(&data, 0.8, 3).unwrap();
        let b = stratified_split(&data, 0.8, 3).unwrap();
        assert_eq!(a, b);
        let c = stratified_split(&data, 0.8, 4).unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn errors() {
        assert!(matches!(stratified_split(&cohort(5, 0), 0.8, 1), Err(Error::MissingClass(1))));
        assert!(stratified_split(&cohort(5, 5), 1.0, 1).is_err());
        assert!(stratified_split(&cohort(5, 5), 0.0, 1).is_err());
    }

    #[test]
    fn exact_products_are_not_under_counted() {
        let s = stratified_split(&cohort(5, 10), 0.8, 1).unwrap();
        assert_eq!(class_counts(&s.train), [4, 8]);
    }

    proptest! {
        // Exhaustive over small cohorts: class proportions of each part stay
        // within one sample of the full-cohort proportion.
        #[test]
        fn stratification_and_partition(n0 in 1usize..40, n1 in 1usize..40, ratio in 0.05f64..0.95, seed in 0u64..1000) {
            let data = cohort(n0, n1);
            let s = stratified_split(&data, ratio, seed).unwrap();
            let total = n0 + n1;
            prop_assert_eq!(s.train.len() + s.test.len(), total);
            let train_ids: HashSet<_> = s.train.iter().map(|v| v.id.clone()).collect();
            let test_ids: HashSet<_> = s.test.iter().map(|v| v.id.clone()).collect();
            prop_assert!(train_ids.is_disjoint(&test_ids));
            prop_assert_eq!(train_ids.len() + test_ids.len(), total);
            for part in [&s.train, &s.test] {
                let counts = class_counts(part);
                for (class, n) in [n0, n1].into_iter().enumerate() {
                    let expected = n as f64 * part.len() as f64 / total as f64;
                    prop_assert!((counts[class] as f64 - expected).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
