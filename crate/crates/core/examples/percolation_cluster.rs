use hydrolim::environment::gen_percolation;

fn main() -> hydrolim::Result<()> {
    for p in [0.55, 0.6, 0.7, 0.8, 0.9] {
        let n = 64;
        let env = gen_percolation(2, n, p, 3)?;
        println!(
            "p={p:.2}  largest cluster {:>5} of {} sites ({:.3}), {} bonds",
            env.site_count(),
            n * n,
            env.site_count() as f64 / (n * n) as f64,
            env.edges().len()
        );
    }
    Ok(())
}
