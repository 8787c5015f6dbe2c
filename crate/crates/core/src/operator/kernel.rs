//! Dense brute-force oracles for small graphs.

use nalgebra::{DMatrix, DVector};

use super::SparseGenerator;
use crate::error::{Error, Result};

pub const DENSE_SITE_LIMIT: usize = 512;

/// `p_t = exp(t L_n)` by scaling and squaring on the dense matrix.
pub fn heat_kernel_small(gen: &SparseGenerator, t: f64) -> Result<DMatrix<f64>> {
    let n = gen.site_count();
    if n > DENSE_SITE_LIMIT {
        return Err(Error::TooLarge {
            sites: n,
            limit: DENSE_SITE_LIMIT,
        });
    }
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time t = {t} must be >= 0")));
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    Ok((gen.to_dense() * t).exp())
}

/// `∫₀^∞ e^{−λt} Σ_y p_t(x,y) g(y) dt` by 4-point Gauss–Legendre panels,
/// stepping the heat kernel between panels. Independent of the conjugate
/// gradient path, so it serves as a check on resolvent solves.
pub fn resolvent_by_kernel(gen: &SparseGenerator, lambda: f64, g: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("λ = {lambda} must be > 0")));
    }
    let max_rate = gen.diagonal().iter().map(|d| -d).fold(0.0, f64::max);
    let h = (0.25 / lambda).min(0.25 / max_rate.max(1e-300));
    let horizon = 36.0 / lambda;
    let panels = (horizon / h).ceil() as usize;

    const NODES: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const WEIGHTS: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    let offsets: Vec<f64> = NODES.iter().map(|x| 0.5 * h * (1.0 + x)).collect();
    let node_kernels: Vec<DMatrix<f64>> = offsets
        .iter()
        .map(|&t| heat_kernel_small(gen, t))
        .collect::<Result<_>>()?;
    let step = heat_kernel_small(gen, h)?;

    let mut v = DVector::from_column_slice(g);
    let mut acc = DVector::zeros(g.len());
    for j in 0..panels {
        let start = j as f64 * h;
        for k in 0..4 {
            let weight = 0.5 * h * WEIGHTS[k] * (-lambda * (start + offsets[k])).exp();
            acc += (&node_kernels[k] * &v) * weight;
        }
        v = &step * v;
    }
    Ok(acc.iter().copied().collect())
}
