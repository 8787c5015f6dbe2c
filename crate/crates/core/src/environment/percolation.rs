use petgraph::unionfind::UnionFind;
use rand::Rng;

use super::lattice::{torus_bonds, torus_coords};
use super::{Edge, Environment, FamilyKind, FamilyTag, Geometry};
use crate::error::{Error, Result};
use crate::rng::{lane, seeded};

const MIN_CLUSTER_FRACTION: f64 = 0.10;

/// Bond percolation on the two-dimensional torus, restricted to its largest
/// open cluster. Kept bonds carry `ω = n²`; the scaling stays `a_n = n^d`
/// so the realised cluster density plays the role of `θ(p)`.
pub fn gen_percolation(dim: usize, n: usize, p: f64, seed: u64) -> Result<Environment> {
    if dim != 2 {
        return Err(Error::invalid(format!("percolation implemented for d = 2, got {dim}")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("torus side n = {n} must be >= 2")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p = {p} not in (0, 1)")));
    }
    let sites = n * n;
    let mut rng = seeded(seed, lane::ENVIRONMENT);
    let open: Vec<_> = torus_bonds(dim, n)
        .into_iter()
        .filter(|_| rng.random::<f64>() < p)
        .collect();

    let mut uf = UnionFind::<usize>::new(sites);
    for b in &open {
        uf.union(b.from, b.to);
    }
    let labels = uf.into_labeling();
    let mut size = vec![0usize; sites];
    for &l in &labels {
        size[l] += 1;
    }
    // Ties go to the cluster whose root label is smallest.
    let (root, &largest) = size
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty torus");
    let fraction = largest as f64 / sites as f64;
    if fraction < MIN_CLUSTER_FRACTION {
        return Err(Error::ClusterTooSmall { fraction });
    }

    let mut new_index = vec![usize::MAX; sites];
    let all_coords = torus_coords(dim, n);
    let mut coords = Vec::with_capacity(largest);
    for s in 0..sites {
        if labels[s] == root {
            new_index[s] = coords.len();
            coords.push(all_coords[s]);
        }
    }
    let n2 = (n as f64).powi(2);
    let edges = open
        .iter()
        .filter(|b| labels[b.from] == root)
        .map(|b| Edge {
            i: new_index[b.from],
            j: new_index[b.to],
            rate: n2,
        })
        .collect();
    let tag = FamilyTag::new(FamilyKind::Percolation)
        .with_seed(seed)
        .param("p", p)
        .param("cluster_density", fraction);
    Environment::new(
        dim,
        n as u32,
        (n as f64).powi(dim as i32),
        Geometry::Torus { n },
        coords,
        edges,
        tag,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_retention_keeps_whole_torus() {
        let env = gen_percolation(2, 8, 1.0 - 1e-9, 1).unwrap();
        assert_eq!(env.site_count(), 64);
        assert_eq!(env.edges().len(), 128);
    }

    #[test]
    fn deep_subcritical_rejected() {
        match gen_percolation(2, 16, 0.05, 1) {
            Err(Error::ClusterTooSmall { fraction }) => assert!(fraction < 0.1),
            other => panic!("expected ClusterTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn only_2d() {
        assert!(gen_percolation(1, 16, 0.7, 1).is_err());
        assert!(gen_percolation(2, 16, 1.0, 1).is_err());
    }
}
