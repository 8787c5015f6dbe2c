use hydrolim::harness::{martingale_check, StudyConfig};

fn main() -> hydrolim::Result<()> {
    let sets = ["family=\"torus-lattice\"", "n_list=[16, 32, 64]", "seeds=200"].map(String::from);
    let cfg = StudyConfig::from_toml_str("", &sets)?;
    let (rows, criteria) = martingale_check(&cfg)?;
    for r in &rows {
        println!("{r:?}");
    }
    for c in &criteria {
        println!("{} {} {:.4} / {:.4} {}", c.criterion, c.subject, c.value, c.limit, c.passed);
    }
    Ok(())
}
