use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{class_counts, FeatureVector};
use crate::error::{Error, Result};

pub const DEFAULT_SMOTE_K: usize = 5;

fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum()
}

/// Indices (into `points`) of the `k` nearest other points to each point,
/// Euclidean distance, ties broken by index.
fn nearest_neighbors(points: &[&FeatureVector], k: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| (squared_distance(&points[i].values, &points[j].values), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Oversamples the minority class until both classes have the majority
/// count. Original vectors are returned unchanged and in order, followed by
/// the synthetic ones (ids `smote-<n>`). `k` is capped at minority size - 1.
pub fn smote(train: &[FeatureVector], k: usize, seed: u64) -> Result<Vec<FeatureVector>> {
    if k == 0 {
        return Err(Error::invalid("SMOTE k must be >= 1"));
    }
    let counts = class_counts(train);
    let mut out = train.to_vec();
    if counts[0] == counts[1] {
        return Ok(out);
    }
    let minority_label = if counts[1] < counts[0] { 1u8 } else { 0 };
    let minority: Vec<&FeatureVector> = train.iter().filter(|v| v.label == minority_label).collect();
    if minority.len() < 2 {
        return Err(Error::SmoteMinority(minority.len()));
    }
    let k = k.min(minority.len() - 1);
    let neighbors = nearest_neighbors(&minority, k);
    let needed = counts[0].max(counts[1]) - minority.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.reserve(needed);
    for n in 0..needed {
        let i = rng.random_range(0..minority.len());
        let j = neighbors[i][rng.random_range(0..k)];
        let gap: f64 = rng.random();
        let (x, z) = (&minority[i].values, &minority[j].values);
        let values = x
            .iter()
            .zip(z)
            .map(|(&a, &b)| (f64::from(a) + gap * (f64::from(b) - f64::from(a))) as f32)
            .collect();
        out.push(FeatureVector {
            id: format!("smote-{n}"),
            values,
            label: minority_label,
        });
    }
    Ok(out)
}
