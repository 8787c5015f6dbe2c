use std::sync::Arc;

use hydrolim::environment::{gen_w_measure_1d, WMeasure};
use hydrolim::hydro::{solve_heat_backward_euler, TimeGrid};
use hydrolim::operator::assemble_generator;
use hydrolim::testfn::Profile;

fn main() -> hydrolim::Result<()> {
    let measure = WMeasure::lebesgue().with_atom(0.5, 1.0);
    println!("{}", measure.describe());
    let profile = Profile::cosine();
    for n in [32, 64, 128] {
        let env = Arc::new(gen_w_measure_1d(n, &measure)?);
        let gen = assemble_generator(&env);
        let u0: Vec<f64> = env.coords().iter().map(|p| profile.value(p)).collect();
        let sol = solve_heat_backward_euler(env.clone(), &gen, u0, TimeGrid::new(0.05, 500)?, 1.0)?;
        let slowest = env.edges().iter().map(|e| e.rate).fold(f64::INFINITY, f64::min);
        let mid = sol.values.last().unwrap()[n / 2];
        println!(
            "n={n:<4} slowest bond {slowest:.1}  mass drift {:.1e}  u(T, 1/2) = {mid:.4}",
            (sol.mass(sol.times.len() - 1) - sol.mass(0)).abs()
        );
    }
    Ok(())
}
