//! Command-line dispatcher. Every subcommand is a pure function of the
//! config file, the overrides and the seed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dynamics::{sample_bernoulli_profile, simulate_kmc, Observable, ObservablePlan};
use crate::environment::write_environment;
use crate::error::{Error, Result};
use crate::harness::{
    convergence_study, emit_report, limit_operator, preflight, reference_solution, StudyConfig,
};
use crate::linalg::CgOptions;
use crate::operator::{assemble_generator, corrected_test_function, write_corrected};
use crate::rng::StreamKey;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hydrolim", version, about = "Exclusion process in inhomogeneous media")]
pub struct CommandInvocation {
    #[command(subcommand)]
    pub command: Command,
    /// Study file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to the config's `out_dir`, then `out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set seeds=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, global = true, env = "HYDROLIM_WORKERS")]
    pub workers: Option<usize>,
    /// Replaces the config's `study_id`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write the environment at one level.
    GenEnv {
        #[arg(long)]
        level: Option<usize>,
    },
    /// One exclusion trajectory with the battery observables.
    Simulate {
        #[arg(long)]
        level: Option<usize>,
    },
    /// Reference solution paired with one level.
    Hydro {
        #[arg(long)]
        level: Option<usize>,
    },
    /// Corrected battery functions at one level.
    Corrected {
        #[arg(long)]
        level: Option<usize>,
    },
    /// Full quenched convergence study.
    Study,
    /// Validate the config and build every level without simulating.
    Check,
}

impl CommandInvocation {
    fn load(&self) -> Result<StudyConfig> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path).map_err(|source| Error::File {
                path: path.clone(),
                source,
            })?,
            None => String::new(),
        };
        let mut cfg = StudyConfig::from_toml_str(&text, &self.overrides)?;
        if let Some(seed) = self.seed {
            cfg.study_id = seed;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &StudyConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::UnknownKey(_) | Error::Parse { .. } | Error::InvalidParameter(_) => {
            EXIT_USAGE
        }
        Error::Stage { source, .. } => exit_code(source),
        _ => EXIT_ASSERTION,
    }
}

/// The requested level; it becomes the whole ladder when `n_list` is unset.
fn level_of(cfg: &mut StudyConfig, level: Option<usize>) -> Result<usize> {
    let n = level
        .or_else(|| cfg.n_list.first().copied())
        .ok_or_else(|| Error::Config("no level: pass --level or set n_list".into()))?;
    if cfg.n_list.is_empty() {
        cfg.n_list = vec![n];
    }
    Ok(n)
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::File::create(&path).map_err(|source| Error::File { path, source })
}

/// Runs one subcommand, printing one summary line per stage to `out`.
/// Returns `Ok(false)` when a study or check assertion fails.
fn dispatch(inv: &CommandInvocation, out: &mut dyn Write) -> Result<bool> {
    let mut cfg = inv.load()?;
    let dir = inv.out_dir(&cfg);
    match &inv.command {
        Command::GenEnv { level } => {
            let n = level_of(&mut cfg, *level)?;
            let env = cfg.spec_at(n)?.build()?;
            write_environment(&env, create(&dir, "environment.txt")?)?;
            writeln!(
                out,
                "gen-env: {} level {n}: {} sites, {} edges -> {}",
                env.family(),
                env.site_count(),
                env.edges().len(),
                dir.join("environment.txt").display()
            )?;
        }
        Command::Simulate { level } => {
            let n = level_of(&mut cfg, *level)?;
            let env = cfg.spec_at(n)?.build()?;
            let gen = assemble_generator(&env);
            let operator = limit_operator(&cfg)?;
            let observables = cfg
                .functions()?
                .iter()
                .map(|g| {
                    corrected_test_function(&env, &gen, g, cfg.lambda, &operator, CgOptions::default())
                        .map(|cf| Observable::from_corrected(&cf))
                })
                .collect::<Result<Vec<_>>>()?;
            let plan = ObservablePlan::new(observables, cfg.times())?;
            let profile = cfg.profile()?;
            let key = StreamKey::new(cfg.study_id, n as u64, 0);
            let eta0 = sample_bernoulli_profile(&env, |p| profile.value(p), key)?;
            let rec = simulate_kmc(&env, &eta0, &plan, key)?;
            rec.write_csv(create(&dir, "trajectory.csv")?)?;
            writeln!(
                out,
                "simulate: level {n}: {} particles, {} events, {} swaps, stream {:016x}",
                eta0.count(),
                rec.events,
                rec.swaps,
                rec.stream_id
            )?;
        }
        Command::Hydro { level } => {
            let n = level_of(&mut cfg, *level)?;
            let env = cfg.spec_at(n)?.build()?;
            let sol = reference_solution(&cfg, &env, &limit_operator(&cfg)?)?;
            sol.write_csv(create(&dir, "hydro.csv")?)?;
            writeln!(
                out,
                "hydro: level {n}: {} on {} sites, {} time points",
                sol.operator,
                sol.env.site_count(),
                sol.times.len()
            )?;
        }
        Command::Corrected { level } => {
            let n = level_of(&mut cfg, *level)?;
            let env = cfg.spec_at(n)?.build()?;
            let gen = assemble_generator(&env);
            let operator = limit_operator(&cfg)?;
            for g in cfg.functions()? {
                let cf = corrected_test_function(&env, &gen, &g, cfg.lambda, &operator, CgOptions::default())?;
                let name = format!("corrected_{g}.txt").replace([':', ','], "_");
                write_corrected(&cf, &gen, create(&dir, &name)?)?;
                writeln!(
                    out,
                    "corrected: {g} level {n}: E_n = {:.6e}, distance = {:.3e}, mass error = {:.1e}",
                    cf.energy,
                    cf.distance,
                    cf.mass_error()
                )?;
            }
        }
        Command::Study => {
            let report = convergence_study(&cfg)?;
            emit_report(&report, &dir)?;
            for c in &report.criteria {
                writeln!(
                    out,
                    "{} {} [{}]: {} vs {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.criterion,
                    c.subject,
                    c.value,
                    c.limit
                )?;
            }
            writeln!(
                out,
                "study: {} criteria, {} failed, report in {}",
                report.criteria.len(),
                report.failures().count(),
                dir.display()
            )?;
            return Ok(report.passed());
        }
        Command::Check => {
            for line in preflight(&cfg)? {
                writeln!(out, "check: {line}")?;
            }
            writeln!(out, "check: ok")?;
        }
    }
    Ok(true)
}

/// Parses arguments and runs the subcommand: 0 on success, 1 on a failed
/// assertion or runtime error, 2 on a usage or config error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match CommandInvocation::try_parse_from(args) {
        Ok(inv) => inv,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = inv.workers {
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    let (result, buf) = pool.install(|| {
        let mut buf = Vec::new();
        (dispatch(&inv, &mut buf), buf)
    });
    let _ = out.write_all(&buf);
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_ASSERTION,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
