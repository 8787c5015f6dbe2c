//! Resolvent-corrected test functions.
//!
//! For `G` with known `LG`, set `H = (λ − L) G` and solve
//! `(λ − L_n) S_n G_n = S_n H`. The corrected pairing `a_n⁻¹ Σ η S_n G_n`
//! evolves with drift `π(L_n S_n G_n)`, and `L_n S_n G_n = λ S_n G_n − S_n H`.

use std::io::Write;
use std::sync::Arc;

use super::{
    assemble_generator, dirichlet_form, project_test_function, resolvent_solve, CoordIndex,
    SparseGenerator,
};
use crate::environment::{Environment, EnvironmentSpec, WMeasure};
use crate::error::{Error, Result};
use crate::linalg::{norm2, CgOptions};
use crate::testfn::{Point, TestFunction};

/// Source of `LG` for the limit operator.
#[derive(Debug, Clone)]
pub enum LimitOperator {
    /// `div(A ∇G)` with a constant symmetric matrix (homogeneous and
    /// homogenised lattices).
    Diffusion { matrix: [[f64; 2]; 2] },
    /// `d/dx d/dW` for a W-measure with constant density plus atoms. Valid for
    /// test functions whose derivative vanishes at every atom.
    Stieltjes { measure: WMeasure },
    /// `L_N S_N G` on a finer environment whose sites contain the coarse
    /// quadrature nodes.
    FineGrid {
        env: Arc<Environment>,
        generator: Arc<SparseGenerator>,
    },
}

impl LimitOperator {
    pub fn isotropic(diffusivity: f64) -> Self {
        LimitOperator::Diffusion {
            matrix: [[diffusivity, 0.0], [0.0, diffusivity]],
        }
    }

    pub fn fine_grid(env: Environment) -> Self {
        let generator = assemble_generator(&env);
        LimitOperator::FineGrid {
            env: Arc::new(env),
            generator: Arc::new(generator),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LimitOperator::Diffusion { matrix } => format!(
                "closed-form div(A grad) A=[[{}, {}], [{}, {}]]",
                matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]
            ),
            LimitOperator::Stieltjes { measure } => {
                format!("closed-form d/dx d/dW ({})", measure.describe())
            }
            LimitOperator::FineGrid { env, .. } => format!(
                "fine-grid L_N ({} level {})",
                env.family(),
                env.level()
            ),
        }
    }

    /// Evaluates `LG` on arbitrary points. Fine-grid operators answer only on
    /// their own sites.
    pub fn evaluator(&self, g: &TestFunction) -> Result<Box<dyn Fn(&Point) -> f64 + Send + Sync>> {
        match self {
            LimitOperator::Diffusion { matrix } => {
                let (g, a) = (g.clone(), *matrix);
                Ok(Box::new(move |p| g.divergence_form(&a, p)))
            }
            LimitOperator::Stieltjes { measure } => {
                for atom in &measure.atoms {
                    let slope = g.gradient(&[atom.location, 0.0])[0];
                    if slope.abs() > 1e-9 {
                        return Err(Error::invalid(format!(
                            "{g} is not W-differentiable at the atom {} (slope {slope:.3e})",
                            atom.location
                        )));
                    }
                }
                let (g, density) = (g.clone(), measure.density);
                Ok(Box::new(move |p| g.hessian(p)[0][0] / density))
            }
            LimitOperator::FineGrid { env, generator } => {
                let sg = project_test_function(env, |p| g.value(p));
                let lg = generator.apply_vec(&sg);
                let index = CoordIndex::new(env);
                Ok(Box::new(move |p| match index.lookup(p) {
                    Some(i) => lg[i],
                    None => f64::NAN,
                }))
            }
        }
    }

    /// `E(G)` when the limit form is known in closed form.
    pub fn reference_energy(&self, g: &TestFunction, dim: usize) -> Option<f64> {
        let quad = |integrand: &dyn Fn(&Point) -> f64| -> f64 {
            if dim == 1 {
                let m = 4096;
                (0..m)
                    .map(|i| integrand(&[(i as f64 + 0.5) / m as f64, 0.0]))
                    .sum::<f64>()
                    / m as f64
            } else {
                let m = 512;
                let mut acc = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        acc += integrand(&[(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64]);
                    }
                }
                acc / (m * m) as f64
            }
        };
        match self {
            LimitOperator::Diffusion { matrix } => Some(quad(&|p| {
                let d = g.gradient(p);
                let mut acc = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        acc += d[i] * matrix[i][j] * d[j];
                    }
                }
                acc
            })),
            LimitOperator::Stieltjes { measure } if dim == 1 => {
                Some(quad(&|p| g.gradient(p)[0].powi(2)) / measure.density)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrectedFunction {
    pub function: TestFunction,
    pub lambda: f64,
    pub operator: String,
    pub scaling: f64,
    /// `S_n G`
    pub projected: Vec<f64>,
    /// `S_n H`, `H = (λ − L) G`
    pub source: Vec<f64>,
    /// `S_n G_n`
    pub corrected: Vec<f64>,
    /// `L_n S_n G_n`
    pub drift: Vec<f64>,
    /// `E_n(G_n)`
    pub energy: f64,
    /// `⟨S_n G_n, S_n G_n⟩_n`
    pub norm_sq: f64,
    /// `‖(λ − L_n) S_n G_n − S_n H‖₂ / ‖S_n H‖₂`
    pub residual: f64,
    /// `‖S_n G_n − S_n G‖_n`
    pub distance: f64,
    /// `a_n⁻¹ Σ S_n G_n`
    pub mass: f64,
    /// `λ⁻¹ ∫ H dμ_n`
    pub mass_expected: f64,
    pub iterations: usize,
}

impl CorrectedFunction {
    /// Per-site `(λ − L_n) S_n G_n − S_n H`.
    pub fn residual_vector(&self, gen: &SparseGenerator) -> Vec<f64> {
        let mut out = vec![0.0; self.corrected.len()];
        gen.apply_shifted(self.lambda, &self.corrected, &mut out);
        out.iter_mut().zip(&self.source).for_each(|(o, s)| *o -= s);
        out
    }

    /// `|a⁻¹ΣS_nG_n − λ⁻¹a⁻¹ΣS_nH|`, relative to `λ⁻¹a⁻¹Σ|S_nH|` so that
    /// zero-mean functions are measured on their own scale.
    pub fn mass_error(&self) -> f64 {
        let scale = self.source.iter().map(|v| v.abs()).sum::<f64>() / (self.scaling * self.lambda);
        (self.mass - self.mass_expected).abs() / scale.max(f64::MIN_POSITIVE)
    }
}

pub fn corrected_test_function(
    env: &Environment,
    gen: &SparseGenerator,
    g: &TestFunction,
    lambda: f64,
    operator: &LimitOperator,
    opts: CgOptions,
) -> Result<CorrectedFunction> {
    let lg = operator.evaluator(g)?;
    let projected = project_test_function(env, |p| g.value(p));
    let projected_lg = project_test_function(env, |p| lg(p));
    if let Some(site) = (0..projected.len()).find(|&i| projected[i].is_nan() || projected_lg[i].is_nan()) {
        return Err(Error::UnmatchedCoordinate {
            site,
            coords: env.coords()[site],
        });
    }
    let source: Vec<f64> = projected
        .iter()
        .zip(&projected_lg)
        .map(|(sg, slg)| lambda * sg - slg)
        .collect();
    let sol = resolvent_solve(gen, lambda, &source, opts)?;
    let corrected = sol.f;
    let drift = gen.apply_vec(&corrected);

    let mut resid = vec![0.0; corrected.len()];
    gen.apply_shifted(lambda, &corrected, &mut resid);
    resid.iter_mut().zip(&source).for_each(|(r, s)| *r -= s);
    let source_norm = norm2(&source);
    let residual = if source_norm > 0.0 {
        norm2(&resid) / source_norm
    } else {
        norm2(&resid)
    };
    let diff: Vec<f64> = corrected.iter().zip(&projected).map(|(a, b)| a - b).collect();
    Ok(CorrectedFunction {
        function: g.clone(),
        lambda,
        operator: operator.label(),
        scaling: gen.scaling(),
        energy: dirichlet_form(gen, &corrected),
        norm_sq: gen.inner(&corrected, &corrected),
        residual,
        distance: gen.inner(&diff, &diff).sqrt(),
        mass: gen.integral(&corrected),
        mass_expected: gen.integral(&source) / lambda,
        iterations: sol.iterations,
        projected,
        source,
        corrected,
        drift,
    })
}

/// Dump as whitespace-separated columns
/// `site SnG SnH SnGn residual`, preceded by `#` header lines.
pub fn write_corrected<W: Write>(
    cf: &CorrectedFunction,
    gen: &SparseGenerator,
    mut out: W,
) -> Result<()> {
    writeln!(out, "# function = {}", cf.function)?;
    writeln!(out, "# lambda = {}", cf.lambda)?;
    writeln!(out, "# operator = {}", cf.operator)?;
    writeln!(out, "# energy = {:.16e}", cf.energy)?;
    writeln!(out, "# distance = {:.16e}", cf.distance)?;
    writeln!(out, "# relative_residual = {:.16e}", cf.residual)?;
    writeln!(out, "# mass = {:.16e}", cf.mass)?;
    writeln!(out, "# mass_expected = {:.16e}", cf.mass_expected)?;
    writeln!(out, "site SnG SnH SnGn residual")?;
    let resid = cf.residual_vector(gen);
    for x in 0..cf.corrected.len() {
        writeln!(
            out,
            "{x} {:.16e} {:.16e} {:.16e} {:.16e}",
            cf.projected[x], cf.source[x], cf.corrected[x], resid[x]
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPoint {
    pub level: usize,
    pub energy: f64,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct GammaCurve {
    pub points: Vec<GammaPoint>,
    /// `E(G)` when the limit form is known.
    pub reference: Option<f64>,
}

impl GammaCurve {
    /// `|E_n(G_n) − E(G)|` along the curve.
    pub fn energy_gaps(&self) -> Option<Vec<f64>> {
        let e = self.reference?;
        Some(self.points.iter().map(|p| (p.energy - e).abs()).collect())
    }
}

/// Corrected energies `E_n(G_n)` and distances `‖S_n G_n − S_n G‖_n` across
/// levels of one family.
pub fn gamma_energy_curve(
    spec: &EnvironmentSpec,
    g: &TestFunction,
    lambda: f64,
    levels: &[usize],
    operator: &LimitOperator,
    opts: CgOptions,
) -> Result<GammaCurve> {
    if levels.len() < 2 {
        return Err(Error::invalid("Γ-energy curve needs at least two levels"));
    }
    let mut points = Vec::with_capacity(levels.len());
    for &level in levels {
        let env = spec.at_level(level).build()?;
        let gen = assemble_generator(&env);
        let cf = corrected_test_function(&env, &gen, g, lambda, operator, opts)?;
        points.push(GammaPoint {
            level,
            energy: cf.energy,
            distance: cf.distance,
        });
    }
    Ok(GammaCurve {
        points,
        reference: operator.reference_energy(g, spec.dim()),
    })
}
