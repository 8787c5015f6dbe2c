//! Reference solutions of `∂_t u = L u` on a fine graph, and weak-form
//! residuals.

mod homogenize;

pub use homogenize::{effective_diffusivity, EffectiveCoefficients, Provenance};

use std::io::Write;
use std::sync::Arc;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::linalg::CgOptions;
use crate::operator::{dirichlet_bilinear, resolvent_solve, CoordIndex, SparseGenerator};
use crate::testfn::Point;

/// Tolerance for the maximum principle `0 ≤ u ≤ 1`.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-10;

/// Densities `u(t_k, x)` on a reference graph.
#[derive(Debug, Clone)]
pub struct HydroSolution {
    pub env: Arc<Environment>,
    pub times: Vec<f64>,
    /// `values[k][x]` is `u(times[k], x)`.
    pub values: Vec<Vec<f64>>,
    /// Which `L` produced the solution.
    pub operator: String,
    /// `Some(θ)` for a time-stepped solution, `None` for a closed form.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || steps == 0 {
            return Err(Error::invalid("time grid needs T > 0 and at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.horizon * k as f64 / self.steps as f64)
            .collect()
    }
}

impl HydroSolution {
    /// Samples a known solution `u(t, x)` on the sites of `env`.
    pub fn closed_form(
        env: Arc<Environment>,
        times: Vec<f64>,
        u: impl Fn(f64, &Point) -> f64,
        operator: impl Into<String>,
    ) -> Self {
        let values = times
            .iter()
            .map(|&t| env.coords().iter().map(|p| u(t, p)).collect())
            .collect();
        Self {
            env,
            times,
            values,
            operator: operator.into(),
            theta: None,
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// `∫ u_t dμ_N` at step `k`.
    pub fn mass(&self, k: usize) -> f64 {
        self.values[k].iter().sum::<f64>() / self.env.scaling()
    }

    /// Linear interpolation in time; `t` is clamped to the grid.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0].clone();
        }
        if k == self.times.len() {
            return self.values[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1]
            .iter()
            .zip(&self.values[k])
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect()
    }

    /// CSV `time,site,u` preceded by `#` metadata lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# operator = {}", self.operator)?;
        writeln!(out, "# family = {}", self.env.family())?;
        writeln!(out, "# level = {}", self.env.level())?;
        match self.theta {
            Some(th) => writeln!(out, "# scheme = theta:{th}")?,
            None => writeln!(out, "# scheme = closed-form")?,
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "site", "u"])?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, u) in row.iter().enumerate() {
                w.write_record([t.to_string(), x.to_string(), u.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// θ-scheme for `u' = L u`: `θ = 1` is backward Euler, `θ = 1/2`
/// Crank–Nicolson. Each step solves `(1/(θ dt) − L) u_{k+1} = r_k / (θ dt)`.
pub fn solve_heat_backward_euler(
    env: Arc<Environment>,
    gen: &SparseGenerator,
    u0: Vec<f64>,
    grid: TimeGrid,
    theta: f64,
) -> Result<HydroSolution> {
    if theta != 1.0 && theta != 0.5 {
        return Err(Error::invalid(format!("θ = {theta}; expected 1 or 1/2")));
    }
    if u0.len() != gen.site_count() || env.site_count() != gen.site_count() {
        return Err(Error::invalid("initial profile does not match the generator"));
    }
    if let Some((x, v)) = u0
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
    {
        return Err(Error::invalid(format!("u0 = {v} at site {x} outside [0, 1]")));
    }
    let dt = grid.dt();
    let lambda = 1.0 / (theta * dt);
    let opts = CgOptions::with_tol(1e-13);
    let mass0: f64 = u0.iter().sum();

    let mut values = Vec::with_capacity(grid.steps + 1);
    values.push(u0);
    let mut lu = vec![0.0; gen.site_count()];
    for step in 1..=grid.steps {
        let prev = values.last().unwrap();
        let rhs: Vec<f64> = if theta == 1.0 {
            prev.iter().map(|v| v * lambda).collect()
        } else {
            gen.apply(prev, &mut lu);
            prev.iter()
                .zip(&lu)
                .map(|(v, l)| (v + (1.0 - theta) * dt * l) * lambda)
                .collect()
        };
        let next = resolvent_solve(gen, lambda, &rhs, opts)?.f;
        if let Some(&bad) = next
            .iter()
            .find(|&&v| v < -MAX_PRINCIPLE_SLACK || v > 1.0 + MAX_PRINCIPLE_SLACK)
        {
            return Err(Error::MaximumPrinciple { step, value: bad });
        }
        let mass: f64 = next.iter().sum();
        if (mass - mass0).abs() > 1e-8 * mass0.abs().max(1e-300) {
            return Err(Error::invalid(format!(
                "mass drift {:.3e} at step {step}",
                (mass - mass0) / mass0
            )));
        }
        values.push(next);
    }
    Ok(HydroSolution {
        operator: format!("fine-grid L_N ({}, level {})", env.family(), env.level()),
        env,
        times: grid.times(),
        values,
        theta: Some(theta),
    })
}

/// Reads the solution off at the sites of a coarser graph whose coordinates
/// are a subset of the reference graph's.
pub fn restrict_solution(sol: &HydroSolution, coarse: &Environment) -> Result<Vec<Vec<f64>>> {
    let map = restriction_map(&sol.env, coarse)?;
    Ok(sol
        .values
        .iter()
        .map(|row| map.iter().map(|&i| row[i]).collect())
        .collect())
}

/// Index of each coarse site in the fine graph.
pub fn restriction_map(fine: &Environment, coarse: &Environment) -> Result<Vec<usize>> {
    let index = CoordIndex::new(fine);
    coarse
        .coords()
        .iter()
        .enumerate()
        .map(|(x, p)| {
            index
                .lookup(p)
                .ok_or(Error::UnmatchedCoordinate { site: x, coords: *p })
        })
        .collect()
}

/// For each `(G⁰, G¹)`, with `G_t = G⁰ + t G¹` on the reference graph, the
/// magnitude of
/// `⟨u_0, G_0⟩ − ⟨u_T, G_T⟩ + ∫₀^T {⟨G¹, u_t⟩ − E_N(G_t, u_t)} dt`
/// by the trapezoid rule on the solution's time grid.
pub fn weak_solution_residual(
    sol: &HydroSolution,
    gen: &SparseGenerator,
    paths: &[(Vec<f64>, Vec<f64>)],
) -> Vec<f64> {
    let last = sol.times.len() - 1;
    paths
        .iter()
        .map(|(g0, g1)| {
            let g_at = |t: f64| -> Vec<f64> { g0.iter().zip(g1).map(|(a, b)| a + t * b).collect() };
            let integrand = |k: usize| {
                let t = sol.times[k];
                let u = &sol.values[k];
                gen.inner(g1, u) - dirichlet_bilinear(gen, &g_at(t), u)
            };
            let mut integral = 0.0;
            let mut f_prev = integrand(0);
            for k in 1..=last {
                let f = integrand(k);
                integral += 0.5 * (sol.times[k] - sol.times[k - 1]) * (f_prev + f);
                f_prev = f;
            }
            let start = gen.inner(&sol.values[0], g0);
            let end = gen.inner(&sol.values[last], &g_at(sol.times[last]));
            (start - end + integral).abs()
        })
        .collect()
}

/// `sup_t ‖u_t − v_t‖_N` over the times of `a`, reading `b` by interpolation.
pub fn sup_norm_difference(gen: &SparseGenerator, a: &HydroSolution, b: &HydroSolution) -> f64 {
    a.times
        .iter()
        .zip(&a.values)
        .map(|(&t, u)| {
            let v = b.at(t);
            let d: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x - y).collect();
            gen.inner(&d, &d).sqrt()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{build_torus_lattice, gen_sierpinski};
    use crate::operator::{assemble_generator, heat_kernel_small};
    use crate::testfn::Profile;
    use std::f64::consts::PI;

    fn ring(n: usize) -> (Arc<Environment>, SparseGenerator) {
        let env = build_torus_lattice(1, n, |_| (n * n) as f64).unwrap();
        let gen = assemble_generator(&env);
        (Arc::new(env), gen)
    }

    fn cosine_u0(env: &Environment) -> Vec<f64> {
        let p = Profile::cosine();
        env.coords().iter().map(|x| p.value(x)).collect()
    }

    #[test]
    fn constant_stays_constant() {
        let (env, gen) = ring(64);
        let sol =
            solve_heat_backward_euler(env, &gen, vec![0.3; 64], TimeGrid::new(0.1, 50).unwrap(), 1.0)
                .unwrap();
        for row in &sol.values {
            assert!(row.iter().all(|v| (v - 0.3).abs() < 1e-12));
        }
    }

    #[test]
    fn matches_fourier_closed_form() {
        let (env, gen) = ring(512);
        let u0 = cosine_u0(&env);
        let sol = solve_heat_backward_euler(env.clone(), &gen, u0, TimeGrid::new(0.05, 500).unwrap(), 1.0)
            .unwrap();
        let t = 0.05;
        let exact = |x: f64| 0.5 * (1.0 + (-4.0 * PI * PI * t).exp() * (2.0 * PI * x).cos());
        let last = sol.values.last().unwrap();
        let err = env
            .coords()
            .iter()
            .zip(last)
            .map(|(p, u)| (u - exact(p[0])).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        let m0 = sol.mass(0);
        assert!((0..sol.times.len()).all(|k| (sol.mass(k) - m0).abs() < 1e-10 * m0));
    }

    #[test]
    fn crank_nicolson_is_second_order() {
        let (env, gen) = ring(128);
        let u0 = cosine_u0(&env);
        let err = |steps: usize, theta: f64| {
            let s = solve_heat_backward_euler(env.clone(), &gen, u0.clone(), TimeGrid::new(0.02, steps).unwrap(), theta)
                .unwrap();
            let k2 = 2.0 * 128.0f64.powi(2) * (1.0 - (2.0 * PI / 128.0).cos());
            let decay = (-k2 * 0.02).exp();
            env.coords()
                .iter()
                .zip(s.values.last().unwrap())
                .map(|(p, u)| (u - 0.5 * (1.0 + decay * (2.0 * PI * p[0]).cos())).abs())
                .fold(0.0, f64::max)
        };
        let (be1, be2) = (err(40, 1.0), err(80, 1.0));
        let (cn1, cn2) = (err(40, 0.5), err(80, 0.5));
        assert!((be1 / be2 - 2.0).abs() < 0.3, "{be1} {be2}");
        assert!((cn1 / cn2 - 4.0).abs() < 0.5, "{cn1} {cn2}");
    }

    #[test]
    fn crank_nicolson_overshoot_is_reported() {
        let (env, gen) = ring(64);
        let mut u0 = vec![0.0; 64];
        u0[0] = 1.0;
        let r = solve_heat_backward_euler(env, &gen, u0, TimeGrid::new(0.1, 2).unwrap(), 0.5);
        assert!(matches!(r, Err(Error::MaximumPrinciple { .. })));
    }

    #[test]
    fn semigroup_and_energy_decay() {
        let (env, gen) = ring(64);
        let u0 = cosine_u0(&env);
        let full = solve_heat_backward_euler(env.clone(), &gen, u0.clone(), TimeGrid::new(0.02, 40).unwrap(), 1.0)
            .unwrap();
        let half = solve_heat_backward_euler(env.clone(), &gen, u0, TimeGrid::new(0.01, 20).unwrap(), 1.0)
            .unwrap();
        let rest = solve_heat_backward_euler(
            env,
            &gen,
            half.values.last().unwrap().clone(),
            TimeGrid::new(0.01, 20).unwrap(),
            1.0,
        )
        .unwrap();
        for (a, b) in full.values.last().unwrap().iter().zip(rest.values.last().unwrap()) {
            assert!((a - b).abs() < 1e-8);
        }
        let norms: Vec<f64> = full.values.iter().map(|u| gen.inner(u, u)).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }

    #[test]
    fn agrees_with_dense_kernel() {
        let env = gen_sierpinski(3).unwrap();
        let gen = assemble_generator(&env);
        let u0: Vec<f64> = env.coords().iter().map(|p| (-(p[0] * p[0] + p[1] * p[1]) * 4.0).exp()).collect();
        let dt = 1e-5;
        let t = 0.002;
        let sol = solve_heat_backward_euler(Arc::new(env), &gen, u0.clone(), TimeGrid::new(t, 200).unwrap(), 1.0)
            .unwrap();
        let p = heat_kernel_small(&gen, t).unwrap();
        let exact = &p * nalgebra::DVector::from_vec(u0.clone());
        let lu = gen.apply_vec(&u0);
        let bound = 10.0 * dt * lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in sol.values.last().unwrap().iter().zip(exact.iter()) {
            assert!((a - b).abs() <= bound, "{a} {b} {bound}");
        }
    }

    #[test]
    fn dt_halving_differences_shrink() {
        let (env, gen) = ring(128);
        let u0 = cosine_u0(&env);
        let sols: Vec<HydroSolution> = [10, 20, 40, 80]
            .iter()
            .map(|&s| solve_heat_backward_euler(env.clone(), &gen, u0.clone(), TimeGrid::new(0.02, s).unwrap(), 1.0).unwrap())
            .collect();
        let d: Vec<f64> = sols
            .windows(2)
            .map(|w| sup_norm_difference(&gen, &w[0], &w[1]))
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn restriction_on_nested_grids() {
        let (fine, _) = ring(128);
        let (coarse, _) = ring(32);
        let sol = HydroSolution::closed_form(fine, vec![0.0, 1.0], |t, p| t + p[0], "test");
        let r = restrict_solution(&sol, &coarse).unwrap();
        for (x, p) in coarse.coords().iter().enumerate() {
            assert_eq!(r[1][x], 1.0 + p[0]);
        }
        let g3 = gen_sierpinski(3).unwrap();
        let g5 = Arc::new(gen_sierpinski(5).unwrap());
        let sol = HydroSolution::closed_form(g5, vec![0.0], |_, _| 0.25, "const");
        assert!(restrict_solution(&sol, &g3).unwrap()[0].iter().all(|&v| v == 0.25));
        let (odd, _) = ring(7);
        assert!(matches!(
            restrict_solution(&sol, &odd),
            Err(Error::UnmatchedCoordinate { .. })
        ));
    }

    #[test]
    fn weak_residuals() {
        let (env, gen) = ring(512);
        let t_end = 0.05;
        let g0: Vec<f64> = env.coords().iter().map(|p| (2.0 * PI * p[0]).cos()).collect();
        let g1: Vec<f64> = g0.iter().map(|v| -v / t_end).collect();
        let paths = vec![(g0, g1)];
        let times: Vec<f64> = (0..=500).map(|k| t_end * k as f64 / 500.0).collect();

        let flat = HydroSolution::closed_form(env.clone(), times.clone(), |_, _| 0.7, "const");
        assert!(weak_solution_residual(&flat, &gen, &paths)[0] < 1e-12);

        let exact = HydroSolution::closed_form(
            env,
            times,
            |t, p| 0.5 * (1.0 + (-4.0 * PI * PI * t).exp() * (2.0 * PI * p[0]).cos()),
            "fourier",
        );
        let r = weak_solution_residual(&exact, &gen, &paths)[0];
        assert!(r < 1e-3, "{r}");
    }

    #[test]
    fn csv_header() {
        let (env, _) = ring(4);
        let sol = HydroSolution::closed_form(env, vec![0.0], |_, _| 0.5, "unit");
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# operator = unit\n"));
        assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 5);
    }
}
