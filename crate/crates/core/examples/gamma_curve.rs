use hydrolim::environment::{ConductanceLaw, EnvironmentSpec};
use hydrolim::linalg::CgOptions;
use hydrolim::operator::{gamma_energy_curve, LimitOperator};
use hydrolim::testfn::TestFunction;

fn main() -> hydrolim::Result<()> {
    let law: ConductanceLaw = "discrete:0.5,2".parse()?;
    let g = TestFunction::Cosine { k: 1, axis: 0 };
    let limit = LimitOperator::isotropic(law.harmonic_mean());
    for seed in 1..=4 {
        let spec = EnvironmentSpec::EllipticRandom { dim: 1, level: 32, law: law.clone(), seed };
        let curve = gamma_energy_curve(&spec, &g, 1.0, &[32, 64, 128, 256, 512], &limit, CgOptions::default())?;
        let gaps = curve.energy_gaps().unwrap_or_default();
        let line: Vec<String> = gaps.iter().map(|v| format!("{v:.4}")).collect();
        println!("seed {seed}: |E_n(G_n) - E(G)| = [{}]", line.join(", "));
    }
    Ok(())
}
