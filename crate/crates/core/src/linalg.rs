//! Preconditioned conjugate gradient for symmetric positive (semi-)definite
//! operators given as closures.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Stop when `‖b − A x‖₂ ≤ tol · ‖b‖₂`.
    pub tol: f64,
    /// Defaults to `50 · √N`.
    pub max_iter: Option<usize>,
    /// Project iterates onto zero-sum vectors (for singular graph Laplacians
    /// with a zero-sum right-hand side).
    pub zero_mean: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            zero_mean: false,
        }
    }
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Solves `A x = b` in place starting from the given `x`, with Jacobi
/// preconditioning by `diag` (the diagonal of `A`).
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgOutcome> {
    let n = b.len();
    assert_eq!(x.len(), n);
    assert_eq!(diag.len(), n);
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| ((50.0 * (n as f64).sqrt()).ceil() as usize).max(50));
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    if opts.zero_mean {
        remove_mean(x);
    }
    apply(x, &mut ax);
    for i in 0..n {
        r[i] = b[i] - ax[i];
    }
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        if opts.zero_mean {
            remove_mean(z);
        }
    };
    precondition(&r, &mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();

    for it in 0..=max_iter {
        let rel = norm2(&r) / b_norm;
        history.push(rel);
        if rel <= opts.tol {
            // Confirm against the true residual; recurrences drift.
            apply(x, &mut ax);
            let true_rel = b
                .iter()
                .zip(&ax)
                .map(|(bi, ai)| (bi - ai).powi(2))
                .sum::<f64>()
                .sqrt()
                / b_norm;
            if true_rel <= opts.tol {
                return Ok(CgOutcome {
                    iterations: it,
                    relative_residual: true_rel,
                });
            }
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            precondition(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
        }
        if it == max_iter {
            break;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        last: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}
