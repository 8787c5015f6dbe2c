use crate::environment::{Environment, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CgOptions};
use crate::operator::{assemble_generator, SparseGenerator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    CellProblem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCoefficients {
    pub dim: usize,
    /// Only the leading `dim × dim` block is meaningful.
    pub matrix: [[f64; 2]; 2],
    pub provenance: Provenance,
    /// Largest relative residual of the corrector solves.
    pub residual: f64,
}

impl EffectiveCoefficients {
    pub fn scalar(d: f64) -> Self {
        Self {
            dim: 1,
            matrix: [[d, 0.0], [0.0, 0.0]],
            provenance: Provenance::ClosedForm,
            residual: 0.0,
        }
    }

    /// Mean of the diagonal.
    pub fn isotropic_part(&self) -> f64 {
        (0..self.dim).map(|i| self.matrix[i][i]).sum::<f64>() / self.dim as f64
    }

    pub fn asymmetry(&self) -> f64 {
        (self.matrix[0][1] - self.matrix[1][0]).abs()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.matrix[0][0]];
        }
        let [[a, b], [c, d]] = self.matrix;
        let off = 0.5 * (b + c);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        vec![mean - r, mean + r]
    }
}

fn displacement(p: f64, q: f64) -> f64 {
    let d = q - p;
    d - d.round()
}

/// Homogenized matrix of a periodic torus environment by the corrector
/// problem `L_N(χ_i + x_i) = 0`:
/// `A_ij = a_N⁻¹ Σ_edges ω (Δx_i + Δχ_i)(Δx_j + Δχ_j)`,
/// with displacements taken as minimal periodic differences.
pub fn effective_diffusivity(env: &Environment) -> Result<EffectiveCoefficients> {
    let n = match env.geometry() {
        Geometry::Torus { n } => n,
        Geometry::Pointwise => {
            return Err(Error::invalid("the corrector problem needs a periodic lattice"))
        }
    };
    if n < 3 {
        return Err(Error::invalid("corrector problem needs N >= 3"));
    }
    let dim = env.dim();
    let gen = assemble_generator(env);
    let coords = env.coords();
    let edges = env.edges();

    let mut residual = 0.0f64;
    let mut correctors = Vec::with_capacity(dim);
    for axis in 0..dim {
        let chi = solve_corrector(&gen, coords, axis, &mut residual)?;
        correctors.push(chi);
    }

    let mut matrix = [[0.0; 2]; 2];
    for e in edges {
        let (p, q) = (coords[e.i], coords[e.j]);
        let grad: Vec<f64> = (0..dim)
            .map(|k| displacement(p[k], q[k]) + correctors[k][e.j] - correctors[k][e.i])
            .collect();
        for i in 0..dim {
            for j in 0..dim {
                matrix[i][j] += e.rate * grad[i] * grad[j];
            }
        }
    }
    for row in matrix.iter_mut() {
        for v in row.iter_mut() {
            *v /= env.scaling();
        }
    }
    Ok(EffectiveCoefficients {
        dim,
        matrix,
        provenance: Provenance::CellProblem,
        residual,
    })
}

fn solve_corrector(
    gen: &SparseGenerator,
    coords: &[[f64; 2]],
    axis: usize,
    residual: &mut f64,
) -> Result<Vec<f64>> {
    let sites = gen.site_count();
    // b = L_N x_i, zero-sum by antisymmetry of the displacement.
    let mut b = vec![0.0; sites];
    for e in gen.edges() {
        let d = displacement(coords[e.i][axis], coords[e.j][axis]);
        b[e.i] += e.rate * d;
        b[e.j] -= e.rate * d;
    }
    let diag: Vec<f64> = gen.diagonal().iter().map(|d| -d).collect();
    let mut chi = vec![0.0; sites];
    let outcome = conjugate_gradient(
        |v, out| {
            gen.apply(v, out);
            out.iter_mut().for_each(|o| *o = -*o);
        },
        &diag,
        &b,
        &mut chi,
        CgOptions {
            tol: 1e-10,
            max_iter: Some(20 * sites.max(50)),
            zero_mean: true,
        },
    )?;
    *residual = residual.max(outcome.relative_residual);
    Ok(chi)
}
