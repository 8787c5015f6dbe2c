use hydrolim::dynamics::{sample_bernoulli_profile, simulate_kmc, Observable, ObservablePlan};
use hydrolim::environment::build_torus_lattice;
use hydrolim::operator::project_test_function;
use hydrolim::rng::StreamKey;
use hydrolim::testfn::{Profile, TestFunction};

fn main() -> hydrolim::Result<()> {
    let n = 128;
    let env = build_torus_lattice(1, n, |_| (n * n) as f64)?;
    let profile = Profile::cosine();
    let g = TestFunction::Cosine { k: 1, axis: 0 };
    let obs = Observable::plain("cos1", project_test_function(&env, |p| g.value(p)));
    let times: Vec<f64> = (0..=10).map(|k| 0.005 * k as f64).collect();
    let plan = ObservablePlan::new(vec![obs], times)?;
    let key = StreamKey::new(1, n as u64, 0);
    let eta0 = sample_bernoulli_profile(&env, |p| profile.value(p), key)?;
    let rec = simulate_kmc(&env, &eta0, &plan, key)?;
    eprintln!("{} particles, {} events, {} swaps", eta0.count(), rec.events, rec.swaps);
    for (t, s) in rec.times.iter().zip(&rec.samples) {
        let decay = 0.25 * (-4.0 * std::f64::consts::PI.powi(2) * t).exp();
        println!("t={t:.3}  pi_t(cos1)={:+.4}  hydrodynamic={:+.4}", s[0].plain, decay);
    }
    Ok(())
}
