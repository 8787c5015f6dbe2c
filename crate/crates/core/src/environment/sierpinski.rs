use std::collections::HashMap;

use super::{Edge, Environment, FamilyKind, FamilyTag, Geometry};
use crate::error::{Error, Result};

pub const MAX_GASKET_LEVEL: u32 = 8;

/// `|V_m| = 3 (3^m + 1) / 2`.
pub fn gasket_vertex_count(level: u32) -> usize {
    3 * (3usize.pow(level) + 1) / 2
}

/// Level-`m` approximation of the Sierpinski gasket spanned by
/// `a₀ = (0,0)`, `a₁ = (1/2, √3/2)`, `a₂ = (1,0)`.
///
/// Vertices are tracked in integer coordinates `(u, v)` meaning
/// `(u a₂ + v a₁) / 2^m`, so the maps `φ_i(x) = (x + a_i)/2` are exact
/// translations. Edges are the images of the triangle under all level-`m`
/// compositions of the `φ_i`, each carrying `ω = 5^m`; `a_n = 3^m`.
pub fn gen_sierpinski(level: u32) -> Result<Environment> {
    if level > MAX_GASKET_LEVEL {
        return Err(Error::invalid(format!(
            "gasket level {level} exceeds {MAX_GASKET_LEVEL}"
        )));
    }
    let mut edges: Vec<[(u64, u64); 2]> = vec![
        [(0, 0), (1, 0)],
        [(0, 0), (0, 1)],
        [(1, 0), (0, 1)],
    ];
    for m in 0..level {
        let shift = 1u64 << m;
        let offsets = [(0, 0), (0, shift), (shift, 0)];
        edges = offsets
            .iter()
            .flat_map(|&(du, dv)| {
                edges
                    .iter()
                    .map(move |[p, q]| [(p.0 + du, p.1 + dv), (q.0 + du, q.1 + dv)])
            })
            .collect();
    }

    let mut vertices: Vec<(u64, u64)> = edges.iter().flatten().copied().collect();
    vertices.sort_by_key(|&(u, v)| (v, u));
    vertices.dedup();
    let index: HashMap<(u64, u64), usize> =
        vertices.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    let scale = 0.5f64.powi(level as i32);
    let height = 3f64.sqrt() / 2.0;
    let coords = vertices
        .iter()
        .map(|&(u, v)| [(u as f64 + 0.5 * v as f64) * scale, v as f64 * height * scale])
        .collect();
    let rate = 5f64.powi(level as i32);
    let edges = edges
        .iter()
        .map(|[p, q]| Edge {
            i: index[p],
            j: index[q],
            rate,
        })
        .collect();
    Environment::new(
        2,
        level,
        3f64.powi(level as i32),
        Geometry::Pointwise,
        coords,
        edges,
        FamilyTag::new(FamilyKind::Sierpinski),
    )
}
