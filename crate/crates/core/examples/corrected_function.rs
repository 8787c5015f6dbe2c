use hydrolim::environment::build_torus_lattice;
use hydrolim::linalg::CgOptions;
use hydrolim::operator::{assemble_generator, corrected_test_function, LimitOperator};
use hydrolim::testfn::TestFunction;

fn main() -> hydrolim::Result<()> {
    let g = TestFunction::Cosine { k: 1, axis: 0 };
    let limit = LimitOperator::isotropic(1.0);
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    println!("n      E_n(G_n)   E(G)       distance   mass error");
    for n in [16, 32, 64, 128, 256] {
        let env = build_torus_lattice(1, n, |_| (n * n) as f64)?;
        let gen = assemble_generator(&env);
        let cf = corrected_test_function(&env, &gen, &g, 1.0, &limit, CgOptions::default())?;
        println!(
            "{n:<6} {:.6}  {exact:.6}  {:.3e}  {:.1e}",
            cf.energy,
            cf.distance,
            cf.mass_error()
        );
    }
    Ok(())
}
