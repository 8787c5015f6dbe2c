use hydrolim::harness::{convergence_study, StudyConfig};

fn main() -> hydrolim::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "homogeneous_1d".into());
    let path = format!("{}/configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).expect("config");
    let cfg = StudyConfig::from_toml_str(&text, &[])?;
    let report = convergence_study(&cfg)?;
    for line in report.summary_lines() {
        println!("{line}");
    }
    for c in &report.criteria {
        println!("{:<22} {:<28} {}", c.criterion, c.subject, if c.passed { "pass" } else { "FAIL" });
    }
    Ok(())
}
