//! The discrete generator `L_n F(x) = Σ_y ω_{x,y} (F(y) − F(x))`, its
//! Dirichlet form, projections, resolvent solves and corrected test
//! functions.

mod corrected;
mod kernel;

pub use corrected::{
    corrected_test_function, gamma_energy_curve, write_corrected, CorrectedFunction, GammaCurve,
    GammaPoint, LimitOperator,
};
pub use kernel::{heat_kernel_small, resolvent_by_kernel, DENSE_SITE_LIMIT};

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::environment::{Edge, Environment, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CgOptions};
use crate::testfn::{Point, Tabulated, TestFunction};

/// Sparse symmetric `L_n` in compressed rows. Off-diagonal entries are the
/// conductances, the diagonal is minus the row sum.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    scaling: f64,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    edges: Vec<Edge>,
}

pub fn assemble_generator(env: &Environment) -> SparseGenerator {
    let n = env.site_count();
    let mut degree = vec![0usize; n];
    for e in env.edges() {
        degree[e.i] += 1;
        degree[e.j] += 1;
    }
    let mut row_ptr = vec![0usize; n + 1];
    for i in 0..n {
        row_ptr[i + 1] = row_ptr[i] + degree[i];
    }
    let mut fill = row_ptr.clone();
    let mut cols = vec![0usize; row_ptr[n]];
    let mut vals = vec![0.0; row_ptr[n]];
    let mut diag = vec![0.0; n];
    for e in env.edges() {
        for (a, b) in [(e.i, e.j), (e.j, e.i)] {
            cols[fill[a]] = b;
            vals[fill[a]] = e.rate;
            fill[a] += 1;
            diag[a] -= e.rate;
        }
    }
    SparseGenerator {
        scaling: env.scaling(),
        row_ptr,
        cols,
        vals,
        diag,
        edges: env.edges().to_vec(),
    }
}

impl SparseGenerator {
    pub fn site_count(&self) -> usize {
        self.diag.len()
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    pub fn off_diagonal_count(&self) -> usize {
        self.cols.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// `out = L_n f`, evaluated as `Σ_y ω (f(y) − f(x))` so constants map to
    /// exactly zero.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            let fx = f[x];
            *o = self.row(x).map(|(y, w)| w * (f[y] - fx)).sum();
        }
    }

    pub fn apply_vec(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.apply(f, &mut out);
        out
    }

    /// `out = (λ − L_n) f`.
    pub fn apply_shifted(&self, lambda: f64, f: &[f64], out: &mut [f64]) {
        self.apply(f, out);
        for (o, fx) in out.iter_mut().zip(f) {
            *o = lambda * fx - *o;
        }
    }

    /// `⟨f, g⟩_n = a_n⁻¹ Σ f g`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        crate::linalg::dot(f, g) / self.scaling
    }

    /// `a_n⁻¹ Σ_x f(x)`.
    pub fn integral(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / self.scaling
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.site_count();
        let mut m = DMatrix::zeros(n, n);
        for x in 0..n {
            m[(x, x)] = self.diag[x];
            for (y, w) in self.row(x) {
                m[(x, y)] += w;
            }
        }
        m
    }
}

/// `E_n(F) = (2 a_n)⁻¹ Σ_{x,y} ω_{x,y} (F(y) − F(x))²`, summed once per edge.
pub fn dirichlet_form(gen: &SparseGenerator, f: &[f64]) -> f64 {
    dirichlet_bilinear(gen, f, f)
}

/// Polarised form `E_n(F, G) = ⟨F, −L_n G⟩_n`.
pub fn dirichlet_bilinear(gen: &SparseGenerator, f: &[f64], g: &[f64]) -> f64 {
    gen.edges
        .iter()
        .map(|e| e.rate * (f[e.j] - f[e.i]) * (g[e.j] - g[e.i]))
        .sum::<f64>()
        / gen.scaling
}

/// 3-point rule for the hat weight on `[−h, h]`, exact for cubics.
const HAT_NODES: [(f64, f64); 3] = [(-1.0, 1.0 / 12.0), (0.0, 10.0 / 12.0), (1.0, 1.0 / 12.0)];

/// `(S_n G)(x) = a_n ∫ G U_x dμ`.
///
/// On torus geometries `U_x` is the tensor-product hat of width `1/n` and the
/// integral uses the 3-point rule per axis; otherwise `S_n G(x) = G(x)`.
pub fn project_test_function(env: &Environment, g: impl Fn(&Point) -> f64) -> Vec<f64> {
    match env.geometry() {
        Geometry::Pointwise => env.coords().iter().map(g).collect(),
        Geometry::Torus { n } => {
            let h = 1.0 / n as f64;
            let wrap = |v: f64| v.rem_euclid(1.0);
            env.coords()
                .iter()
                .map(|p| {
                    if env.dim() == 1 {
                        HAT_NODES
                            .iter()
                            .map(|&(o, w)| w * g(&[wrap(p[0] + o * h), 0.0]))
                            .sum()
                    } else {
                        let mut acc = 0.0;
                        for &(ox, wx) in &HAT_NODES {
                            for &(oy, wy) in &HAT_NODES {
                                acc += wx * wy * g(&[wrap(p[0] + ox * h), wrap(p[1] + oy * h)]);
                            }
                        }
                        acc
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub f: Vec<f64>,
    /// `E_n(f) + λ⟨f,f⟩_n − 2⟨f,g⟩_n`, the minimised functional.
    pub functional: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `(λ − L_n) f = g` by Jacobi-preconditioned conjugate gradient.
pub fn resolvent_solve(
    gen: &SparseGenerator,
    lambda: f64,
    g: &[f64],
    opts: CgOptions,
) -> Result<ResolventSolution> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("resolvent parameter λ = {lambda} must be > 0")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("solver tolerance must be > 0"));
    }
    if g.len() != gen.site_count() {
        return Err(Error::invalid("right-hand side length does not match site count"));
    }
    let diag: Vec<f64> = gen.diag.iter().map(|d| lambda - d).collect();
    // g / λ already has the exact total mass of the solution.
    let mut f: Vec<f64> = g.iter().map(|v| v / lambda).collect();
    let outcome = conjugate_gradient(
        |v, out| gen.apply_shifted(lambda, v, out),
        &diag,
        g,
        &mut f,
        opts,
    )?;
    let functional =
        dirichlet_form(gen, &f) + lambda * gen.inner(&f, &f) - 2.0 * gen.inner(&f, g);
    Ok(ResolventSolution {
        f,
        functional,
        iterations: outcome.iterations,
        relative_residual: outcome.relative_residual,
    })
}

/// `κ(κ − L)⁻¹ S f` tabulated on the sites of `env`: a function in the
/// domain of the graph's own operator, whatever the regularity of `f`.
pub fn smoothed_test_function(
    env: &Environment,
    gen: &SparseGenerator,
    f: &TestFunction,
    kappa: f64,
) -> Result<TestFunction> {
    let sf = project_test_function(env, |p| f.value(p));
    let rhs: Vec<f64> = sf.iter().map(|v| kappa * v).collect();
    let sol = resolvent_solve(gen, kappa, &rhs, CgOptions::with_tol(1e-12))?;
    Ok(TestFunction::Tabulated(Arc::new(Tabulated::new(
        format!("resolvent:{kappa}:{f}"),
        CoordIndex::new(env),
        sol.f,
    ))))
}

/// Exact-coordinate lookup of sites, wrapping on the torus.
#[derive(Debug, Clone)]
pub struct CoordIndex {
    wrap: bool,
    map: HashMap<(i64, i64), usize>,
}

const COORD_KEY_SCALE: f64 = 1e9;

impl CoordIndex {
    pub fn new(env: &Environment) -> Self {
        let wrap = matches!(env.geometry(), Geometry::Torus { .. });
        let mut index = Self {
            wrap,
            map: HashMap::with_capacity(env.site_count()),
        };
        for (i, p) in env.coords().iter().enumerate() {
            let key = index.key(p);
            index.map.insert(key, i);
        }
        index
    }

    fn key(&self, p: &Point) -> (i64, i64) {
        let norm = |v: f64| {
            let v = if self.wrap { v.rem_euclid(1.0) } else { v };
            let k = (v * COORD_KEY_SCALE).round() as i64;
            if self.wrap && k == COORD_KEY_SCALE as i64 {
                0
            } else {
                k
            }
        };
        (norm(p[0]), norm(p[1]))
    }

    pub fn lookup(&self, p: &Point) -> Option<usize> {
        self.map.get(&self.key(p)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{build_torus_lattice, gen_sierpinski};
    use std::f64::consts::PI;

    fn two_site(rate: f64) -> Environment {
        Environment::explicit(
            1.0,
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![Edge { i: 0, j: 1, rate }],
        )
        .unwrap()
    }

    #[test]
    fn two_site_matrix() {
        let gen = assemble_generator(&two_site(3.0));
        let m = gen.to_dense();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[-3.0, 3.0, 3.0, -3.0]));
        assert_eq!(gen.off_diagonal_count(), 2);
    }

    #[test]
    fn homogeneous_ring_rows() {
        let env = build_torus_lattice(1, 4, |_| 16.0).unwrap();
        let gen = assemble_generator(&env);
        let m = gen.to_dense();
        for x in 0..4 {
            assert_eq!(m[(x, x)], -32.0);
            assert_eq!(m[(x, (x + 1) % 4)], 16.0);
            assert_eq!(m[(x, (x + 3) % 4)], 16.0);
            assert_eq!(m[(x, (x + 2) % 4)], 0.0);
        }
        assert_eq!(gen.off_diagonal_count(), 2 * env.edges().len());
    }

    #[test]
    fn constants_are_harmonic() {
        let env = gen_sierpinski(3).unwrap();
        let gen = assemble_generator(&env);
        let ones = vec![1.0; env.site_count()];
        assert!(gen.apply_vec(&ones).iter().all(|&v| v == 0.0));
        assert_eq!(dirichlet_form(&gen, &ones), 0.0);
    }

    #[test]
    fn two_site_dirichlet_form() {
        let gen = assemble_generator(&two_site(3.0));
        assert_eq!(dirichlet_form(&gen, &[0.0, 1.0]), 3.0);
    }

    #[test]
    fn projection_constants_and_affine() {
        let env = build_torus_lattice(1, 16, |_| 1.0).unwrap();
        let c = project_test_function(&env, |_| 2.5);
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-15));
        // Affine on the interior cells: hat average equals the centre value.
        let lin = project_test_function(&env, |p| 3.0 * p[0] + 1.0);
        for (x, v) in lin.iter().enumerate().skip(1).take(14) {
            let centre = 3.0 * x as f64 / 16.0 + 1.0;
            assert!((v - centre).abs() < 1e-12);
        }
        let env2 = build_torus_lattice(2, 8, |_| 1.0).unwrap();
        let c2 = project_test_function(&env2, |_| -1.0);
        assert!(c2.iter().all(|v| (v + 1.0).abs() < 1e-15));
    }

    #[test]
    fn projection_second_order() {
        let n = 32;
        let env = build_torus_lattice(1, n, |_| 1.0).unwrap();
        let sg = project_test_function(&env, |p| (2.0 * PI * p[0]).cos());
        let bound = (2.0 * PI / n as f64).powi(2);
        for (x, v) in sg.iter().enumerate() {
            let g = (2.0 * PI * x as f64 / n as f64).cos();
            assert!((v - g).abs() <= bound);
        }
    }

    #[test]
    fn gasket_projection_is_pointwise() {
        let env = gen_sierpinski(2).unwrap();
        let sg = project_test_function(&env, |p| p[0] + 2.0 * p[1]);
        for (v, p) in sg.iter().zip(env.coords()) {
            assert_eq!(*v, p[0] + 2.0 * p[1]);
        }
    }

    #[test]
    fn resolvent_examples() {
        let gen = assemble_generator(&two_site(3.0));
        let sol = resolvent_solve(&gen, 1.0, &[1.0, 0.0], CgOptions::with_tol(1e-14)).unwrap();
        assert!((sol.f[0] - 4.0 / 7.0).abs() < 1e-12);
        assert!((sol.f[1] - 3.0 / 7.0).abs() < 1e-12);

        let env = build_torus_lattice(2, 6, |_| 36.0).unwrap();
        let gen = assemble_generator(&env);
        let g = vec![2.0; env.site_count()];
        let sol = resolvent_solve(&gen, 0.5, &g, CgOptions::default()).unwrap();
        assert!(sol.f.iter().all(|v| (v - 4.0).abs() < 1e-12));
        assert!(resolvent_solve(&gen, 0.0, &g, CgOptions::default()).is_err());
    }

    #[test]
    fn coordinate_index_wraps_on_torus() {
        let env = build_torus_lattice(1, 8, |_| 1.0).unwrap();
        let idx = CoordIndex::new(&env);
        assert_eq!(idx.lookup(&[0.125, 0.0]), Some(1));
        assert_eq!(idx.lookup(&[1.0, 0.0]), Some(0));
        assert_eq!(idx.lookup(&[-0.125, 0.0]), Some(7));
        assert_eq!(idx.lookup(&[0.1, 0.0]), None);
    }
}
