//! Isotropic Gaussian cluster corpora.
//!
//! Each checkpoint is one cluster. Centroids are drawn coordinate-wise from
//! `N(0, spread^2)` and redrawn until they are at least `min_separation`
//! (in units of the within-class standard deviation) from every earlier
//! centroid. Checkpoints are dealt round-robin over datasets and acoustic
//! model groups.

use crate::rng::SplitRng;
use crate::store::{EmbeddingSet, SampleRecord};

#[derive(Debug, Clone)]
pub struct ClusterSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Within-class standard deviation.
    pub sigma: f64,
    /// Centroid coordinate standard deviation, in units of `sigma`.
    pub spread: f64,
    /// Minimum centroid distance, in units of `sigma`.
    pub min_separation: f64,
    pub datasets: usize,
    pub acoustic_models: usize,
    pub seed: u64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            classes: 40,
            per_class: 200,
            dim: 32,
            sigma: 1.0,
            spread: 2.0,
            min_separation: 8.0,
            datasets: 1,
            acoustic_models: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub records: Vec<SampleRecord>,
    pub embeddings: EmbeddingSet,
    pub centroids: Vec<Vec<f64>>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

const MAX_REDRAWS: usize = 10_000;

/// Draws the fixture. Panics if centroids cannot be placed, which only
/// happens when `min_separation` is large relative to `spread`.
pub fn gaussian_clusters(spec: &ClusterSpec) -> Fixture {
    let mut rng = SplitRng::new(spec.seed);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(spec.classes);
    for c in 0..spec.classes {
        let mut tries = 0;
        loop {
            let cand: Vec<f64> = (0..spec.dim)
                .map(|_| rng.normal() * spec.spread * spec.sigma)
                .collect();
            if centroids
                .iter()
                .all(|o| dist(o, &cand) >= spec.min_separation * spec.sigma)
            {
                centroids.push(cand);
                break;
            }
            tries += 1;
            assert!(tries < MAX_REDRAWS, "could not place centroid {c}");
        }
    }

    let mut records = Vec::with_capacity(spec.classes * spec.per_class);
    let mut data = Vec::with_capacity(spec.classes * spec.per_class * spec.dim);
    for (c, centre) in centroids.iter().enumerate() {
        for i in 0..spec.per_class {
            let mut r = SampleRecord::new(
                format!("c{c:03}-{i:04}"),
                format!("ds{}", c % spec.datasets.max(1)),
                format!("ckpt{c:03}"),
            );
            r.acoustic_model = Some(format!("arch{}", c % spec.acoustic_models.max(1)));
            records.push(r);
            data.extend(
                centre
                    .iter()
                    .map(|m| (m + rng.normal() * spec.sigma) as f32),
            );
        }
    }
    let embeddings = EmbeddingSet::new("synthetic", 0, spec.dim, data).expect("finite fixture");
    Fixture {
        records,
        embeddings,
        centroids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_separation() {
        let spec = ClusterSpec {
            classes: 10,
            per_class: 5,
            dim: 8,
            datasets: 3,
            ..Default::default()
        };
        let f = gaussian_clusters(&spec);
        assert_eq!(f.records.len(), 50);
        assert_eq!(f.embeddings.count(), 50);
        assert_eq!(f.records[7].dataset, "ds1");
        for i in 0..10 {
            for j in 0..i {
                assert!(dist(&f.centroids[i], &f.centroids[j]) >= 8.0);
            }
        }
        let again = gaussian_clusters(&spec);
        assert_eq!(again.embeddings, f.embeddings);
    }
}
