#![allow(dead_code)]

use hydrolim::environment::{Edge, Environment};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Connected graph: random spanning tree plus extra edges, conductances in
/// `[0.5, 2]`, sites laid out on a line.
pub fn random_graph(sites: usize, extra: usize, seed: u64) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for k in 1..sites {
        let j = rng.random_range(0..k);
        edges.push(Edge {
            i: j,
            j: k,
            rate: rng.random_range(0.5..2.0),
        });
    }
    for _ in 0..extra {
        let i = rng.random_range(0..sites);
        let j = rng.random_range(0..sites);
        if i != j {
            edges.push(Edge {
                i,
                j,
                rate: rng.random_range(0.5..2.0),
            });
        }
    }
    let coords = (0..sites).map(|k| [k as f64 / sites as f64, 0.0]).collect();
    Environment::explicit(1.0, coords, edges).unwrap()
}

/// Pearson χ² of observed counts against probabilities, after pooling cells
/// with expected count below 5. Returns `(z, df)` where `z` is the standard
/// normal quantile of the exact χ²(df) upper tail probability.
pub fn chi_square_z(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let mut cells: Vec<(f64, f64)> = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (p * total as f64, c as f64))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (e, o) in cells {
        acc.0 += e;
        acc.1 += o;
        if acc.0 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match pooled.first_mut() {
            Some(first) => {
                first.0 += acc.0;
                first.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let chi2: f64 = pooled.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let df = pooled.len().saturating_sub(1).max(1);
    let tail = ChiSquared::new(df as f64).unwrap().sf(chi2);
    (Normal::standard().inverse_cdf(1.0 - tail), df)
}
