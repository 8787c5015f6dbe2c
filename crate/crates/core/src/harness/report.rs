use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub n: usize,
    pub function: String,
    pub mean: f64,
    pub sd: f64,
    pub ci: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRow {
    pub n: usize,
    pub function: String,
    pub mean: f64,
    pub sd: f64,
    pub variance: f64,
    /// `T · a_n⁻¹ · E_n(G_n)`
    pub bound: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub n: usize,
    pub function: String,
    pub mean: f64,
    pub sd: f64,
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySupRow {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub n: usize,
    pub function: String,
    /// `E_n(G_n)` on the study's own environment.
    pub energy: f64,
    pub reference: Option<f64>,
    /// `|E_n(G_n) − E(G)|`, averaged over realizations for random families.
    pub energy_gap: Option<f64>,
    /// `‖S_n G_n − S_n G‖_n`, averaged likewise.
    pub distance: f64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub criterion: String,
    pub subject: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Runtime {
    pub seconds: f64,
    pub workers: usize,
    pub events: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyReport {
    pub config_hash: String,
    pub family: String,
    /// Reference solution used at each level.
    pub oracles: Vec<(usize, String)>,
    pub deviation: Vec<DeviationRow>,
    pub martingale: Vec<MartingaleRow>,
    pub energy: Vec<EnergyRow>,
    pub energy_sup: Vec<EnergySupRow>,
    pub gamma: Vec<GammaRow>,
    pub criteria: Vec<CriterionRow>,
    pub runtime: Runtime,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CriterionRow> {
        self.criteria.iter().filter(|c| !c.passed)
    }

    /// One line per (level, function, check).
    pub fn summary_lines(&self) -> Vec<String> {
        let verdict = |criteria: &[&str], subject: &str| {
            let hits: Vec<&CriterionRow> = self
                .criteria
                .iter()
                .filter(|c| criteria.contains(&c.criterion.as_str()) && c.subject == subject)
                .collect();
            if hits.is_empty() {
                "-"
            } else if hits.iter().all(|c| c.passed) {
                "PASS"
            } else {
                "FAIL"
            }
        };
        let mut lines = Vec::new();
        for d in &self.deviation {
            let subject = format!("{} n={}", d.function, d.n);
            lines.push(format!(
                "n={} G={} deviation mean={:.6} ci={:.6} {}",
                d.n,
                d.function,
                d.mean,
                d.ci,
                verdict(&["deviation-threshold"], &subject)
            ));
            if let Some(m) = self
                .martingale
                .iter()
                .find(|m| m.n == d.n && m.function == d.function)
            {
                lines.push(format!(
                    "n={} G={} martingale mean={:.6e} var={:.6e} bound={:.6e} {}",
                    m.n,
                    m.function,
                    m.mean,
                    m.variance,
                    m.bound,
                    verdict(&["martingale-mean", "martingale-variance"], &subject)
                ));
            }
            if let Some(e) = self
                .energy
                .iter()
                .find(|e| e.n == d.n && e.function == d.function)
            {
                lines.push(format!(
                    "n={} G={} energy mean={:.6} ci={:.6} -",
                    e.n, e.function, e.mean, e.ci
                ));
            }
        }
        lines
    }
}

const DEVIATION: &[&str] = &["n", "function", "mean", "sd", "ci", "seeds"];
const MARTINGALE: &[&str] = &["n", "function", "mean", "sd", "variance", "bound", "seeds"];
const ENERGY: &[&str] = &["n", "function", "mean", "sd", "ci"];
const ENERGY_SUP: &[&str] = &["n", "mean", "sd", "ci"];
const GAMMA: &[&str] = &[
    "n",
    "function",
    "energy",
    "reference",
    "energy_gap",
    "distance",
    "realizations",
];
const CRITERIA: &[&str] = &["criterion", "subject", "passed", "value", "limit"];

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

fn write_table<T: Serialize>(dir: &Path, name: &str, header: &[&str], rows: &[T]) -> Result<()> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(file_err(&path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(file_err(&path))?;
    Ok(())
}

fn read_table<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>> {
    let path = dir.join(name);
    let file = fs::File::open(&path).map_err(file_err(&path))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

/// Writes one CSV per check, `criteria.csv`, `summary.txt`, `study.txt`
/// (config hash and oracles) and `runtime.txt`. Everything except
/// `runtime.txt` is a deterministic function of the report values.
pub fn emit_report(report: &StudyReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    write_table(dir, "deviation.csv", DEVIATION, &report.deviation)?;
    write_table(dir, "martingale.csv", MARTINGALE, &report.martingale)?;
    write_table(dir, "energy.csv", ENERGY, &report.energy)?;
    write_table(dir, "energy_sup.csv", ENERGY_SUP, &report.energy_sup)?;
    write_table(dir, "gamma.csv", GAMMA, &report.gamma)?;
    write_table(dir, "criteria.csv", CRITERIA, &report.criteria)?;

    let text = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(file_err(&path))?;
        f.write_all(body.as_bytes()).map_err(file_err(&path))?;
        Ok(())
    };
    let mut summary = report.summary_lines().join("\n");
    if !summary.is_empty() {
        summary.push('\n');
    }
    text("summary.txt", summary)?;
    let mut study = format!("config_hash = {}\nfamily = {}\n", report.config_hash, report.family);
    for (n, oracle) in &report.oracles {
        study.push_str(&format!("oracle.{n} = {oracle}\n"));
    }
    text("study.txt", study)?;
    text(
        "runtime.txt",
        format!(
            "seconds = {}\nworkers = {}\nevents = {}\n",
            report.runtime.seconds, report.runtime.workers, report.runtime.events
        ),
    )
}

/// Parses the deterministic part of an emitted report.
pub fn read_report(dir: &Path) -> Result<StudyReport> {
    let path = dir.join("study.txt");
    let study = fs::read_to_string(&path).map_err(file_err(&path))?;
    let mut report = StudyReport::default();
    for line in study.lines() {
        let Some((k, v)) = line.split_once(" = ") else {
            continue;
        };
        match k {
            "config_hash" => report.config_hash = v.to_string(),
            "family" => report.family = v.to_string(),
            _ => {
                if let Some(n) = k.strip_prefix("oracle.").and_then(|n| n.parse().ok()) {
                    report.oracles.push((n, v.to_string()));
                }
            }
        }
    }
    report.deviation = read_table(dir, "deviation.csv")?;
    report.martingale = read_table(dir, "martingale.csv")?;
    report.energy = read_table(dir, "energy.csv")?;
    report.energy_sup = read_table(dir, "energy_sup.csv")?;
    report.gamma = read_table(dir, "gamma.csv")?;
    report.criteria = read_table(dir, "criteria.csv")?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StudyReport {
        let mut r = StudyReport {
            config_hash: "00ff".into(),
            family: "torus-lattice".into(),
            oracles: vec![(32, "closed form".into()), (64, "closed form".into())],
            ..Default::default()
        };
        for n in [32, 64] {
            for g in ["cos1", "sin1"] {
                r.deviation.push(DeviationRow {
                    n,
                    function: g.into(),
                    mean: 0.1 / n as f64,
                    sd: 1.0 / 3.0,
                    ci: 1e-17,
                    seeds: 30,
                });
                r.martingale.push(MartingaleRow {
                    n,
                    function: g.into(),
                    mean: -2.5e-5,
                    sd: 0.1,
                    variance: 0.01,
                    bound: 0.0123456789012345,
                    seeds: 30,
                });
                r.energy.push(EnergyRow {
                    n,
                    function: g.into(),
                    mean: -0.98,
                    sd: 0.01,
                    ci: 0.002,
                });
                r.gamma.push(GammaRow {
                    n,
                    function: g.into(),
                    energy: 19.7,
                    reference: if g == "cos1" { Some(19.739) } else { None },
                    energy_gap: None,
                    distance: 0.01,
                    realizations: 1,
                });
            }
            r.energy_sup.push(EnergySupRow {
                n,
                mean: -0.5,
                sd: 0.1,
                ci: 0.01,
            });
        }
        r.criteria.push(CriterionRow {
            criterion: "deviation-threshold".into(),
            subject: "cos1 n=64".into(),
            passed: true,
            value: 0.003,
            limit: 0.05,
        });
        r
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        emit_report(&r, dir.path()).unwrap();
        let back = read_report(dir.path()).unwrap();
        assert_eq!(back, StudyReport { runtime: Runtime::default(), ..r.clone() });
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert_eq!(summary.lines().count(), 2 * 2 * 3);
        assert!(summary.contains("deviation") && summary.contains("PASS"));
    }

    #[test]
    fn empty_report_has_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&StudyReport::default(), dir.path()).unwrap();
        let dev = fs::read_to_string(dir.path().join("deviation.csv")).unwrap();
        assert_eq!(dev, "n,function,mean,sd,ci,seeds\n");
        assert_eq!(fs::read_to_string(dir.path().join("summary.txt")).unwrap(), "");
        assert_eq!(read_report(dir.path()).unwrap(), StudyReport::default());
    }
}
