use std::f64::consts::PI;
use std::sync::Arc;

use hydrolim::environment::build_torus_lattice;
use hydrolim::hydro::{solve_heat_backward_euler, TimeGrid};
use hydrolim::operator::assemble_generator;

fn main() -> hydrolim::Result<()> {
    let n = 256;
    let env = Arc::new(build_torus_lattice(1, n, |_| (n * n) as f64)?);
    let gen = assemble_generator(&env);
    let u0: Vec<f64> = env.coords().iter().map(|p| 0.5 + 0.5 * (2.0 * PI * p[0]).cos()).collect();
    let horizon = 0.05;
    println!("steps  theta  sup error vs closed form");
    for steps in [50, 100, 200, 400] {
        for theta in [1.0, 0.5] {
            let grid = TimeGrid::new(horizon, steps)?;
            let sol = solve_heat_backward_euler(env.clone(), &gen, u0.clone(), grid, theta)?;
            let last = sol.values.last().unwrap();
            // exact decay of the discrete mode on the ring
            let lambda = 2.0 * (n * n) as f64 * (1.0 - (2.0 * PI / n as f64).cos());
            let err = env
                .coords()
                .iter()
                .zip(last)
                .map(|(p, u)| (0.5 + 0.5 * (-lambda * horizon).exp() * (2.0 * PI * p[0]).cos() - u).abs())
                .fold(0.0, f64::max);
            println!("{steps:>5}  {theta:>5}  {err:.3e}");
        }
    }
    Ok(())
}
