use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::environment::{ConductanceLaw, EnvironmentSpec, FamilyKind, WMeasure};
use crate::error::{Error, Result};
use crate::environment::sample_alpha_stable_w;
use crate::operator::{assemble_generator, smoothed_test_function};
use crate::testfn::{Profile, TestFunction};

/// Documented top-level keys of a study file.
pub const KNOWN_KEYS: &[&str] = &[
    "family",
    "d",
    "n_list",
    "seeds",
    "T",
    "sample_times",
    "lambda",
    "battery",
    "u0",
    "tolerances",
    "out_dir",
    "study_id",
    "env_seed",
    "p",
    "law",
    "eps0",
    "atoms",
    "density",
    "alpha",
    "jumps",
    "fine_factor",
    "fine_n",
    "fine_level",
    "dt_steps",
    "gamma_envs",
];

pub const TOLERANCE_KEYS: &[&str] = &[
    "deviation",
    "ci_z",
    "martingale_sigma",
    "variance_slack",
    "slope_min",
    "slope_max",
    "energy_factor",
    "gamma_slack",
];

pub const MIN_LEVELS: usize = 2;
pub const MIN_SEEDS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Threshold for the deviation at the finest level.
    pub deviation: f64,
    /// Normal quantile for confidence intervals.
    pub ci_z: f64,
    pub martingale_sigma: f64,
    pub variance_slack: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    pub energy_factor: f64,
    pub gamma_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            deviation: 0.05,
            ci_z: 1.96,
            martingale_sigma: 3.0,
            variance_slack: 1.1,
            slope_min: -1.3,
            slope_max: -0.7,
            energy_factor: 2.0,
            gamma_slack: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub family: String,
    #[serde(default = "one")]
    pub d: usize,
    /// Side lengths, or gasket levels for `sierpinski`.
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub sample_times: Option<Vec<f64>>,
    #[serde(default = "unit")]
    pub lambda: f64,
    #[serde(default = "default_battery")]
    pub battery: Vec<String>,
    #[serde(default = "default_u0")]
    pub u0: String,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "one_u64")]
    pub study_id: u64,
    #[serde(default = "one_u64")]
    pub env_seed: u64,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub law: Option<String>,
    #[serde(default)]
    pub eps0: Option<f64>,
    /// `[location, mass]` pairs.
    #[serde(default)]
    pub atoms: Vec<[f64; 2]>,
    #[serde(default = "unit")]
    pub density: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_jumps")]
    pub jumps: usize,
    #[serde(default = "default_fine_factor")]
    pub fine_factor: usize,
    #[serde(default)]
    pub fine_n: Option<usize>,
    #[serde(default = "default_fine_level")]
    pub fine_level: usize,
    #[serde(default = "default_dt_steps")]
    pub dt_steps: usize,
    /// Environment realizations averaged in the Γ-energy curve of random
    /// families.
    #[serde(default = "default_gamma_envs")]
    pub gamma_envs: usize,
}

fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn unit() -> f64 {
    1.0
}
fn default_seeds() -> usize {
    100
}
fn default_horizon() -> f64 {
    0.05
}
fn default_battery() -> Vec<String> {
    vec!["cos1".into()]
}
fn default_u0() -> String {
    "cosine".into()
}
fn default_jumps() -> usize {
    64
}
fn default_fine_factor() -> usize {
    4
}
fn default_fine_level() -> usize {
    2
}
fn default_dt_steps() -> usize {
    2000
}
fn default_gamma_envs() -> usize {
    64
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl StudyConfig {
    /// Parses a study file and applies `key=value` overrides (values in TOML
    /// syntax, bare words taken as strings; `tolerances.x` reaches the nested
    /// table).
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let key = key.trim();
            let value = parse_value(raw.trim());
            match key.split_once('.') {
                Some(("tolerances", sub)) => {
                    let entry = table
                        .entry("tolerances")
                        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                    match entry {
                        toml::Value::Table(t) => {
                            t.insert(sub.to_string(), value);
                        }
                        _ => return Err(Error::Config("`tolerances` must be a table".into())),
                    }
                }
                Some(_) => return Err(Error::UnknownKey(key.to_string())),
                None => {
                    table.insert(key.to_string(), value);
                }
            }
        }
        for key in table.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::UnknownKey(key.clone()));
            }
        }
        if let Some(toml::Value::Table(t)) = table.get("tolerances") {
            for key in t.keys() {
                if !TOLERANCE_KEYS.contains(&key.as_str()) {
                    return Err(Error::UnknownKey(format!("tolerances.{key}")));
                }
            }
        }
        let cfg: StudyConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// FNV-1a of the canonical serialization.
    pub fn hash(&self) -> u64 {
        self.to_toml().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }

    pub fn kind(&self) -> Result<FamilyKind> {
        self.family.parse()
    }

    /// Structural checks that do not build anything.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        let cfg = |m: String| Err(Error::Config(m));
        if self.n_list.len() < MIN_LEVELS {
            return cfg(format!("n_list needs at least {MIN_LEVELS} levels"));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return cfg("n_list must be strictly increasing".into());
        }
        if self.seeds < MIN_SEEDS {
            return cfg(format!("seeds = {} but CI checks need at least {MIN_SEEDS}", self.seeds));
        }
        if !(self.horizon > 0.0) {
            return cfg("T must be > 0".into());
        }
        if !(self.lambda > 0.0) {
            return cfg("lambda must be > 0".into());
        }
        let times = self.times();
        if times.windows(2).any(|w| w[1] <= w[0])
            || times.iter().any(|t| *t < 0.0 || *t > self.horizon)
            || times.last() != Some(&self.horizon)
        {
            return cfg("sample_times must increase within [0, T] and end at T".into());
        }
        if self.battery.is_empty() {
            return cfg("battery is empty".into());
        }
        self.functions()?;
        self.profile()?;
        if self.dt_steps == 0 || self.fine_factor < 1 {
            return cfg("dt_steps and fine_factor must be positive".into());
        }
        if kind == FamilyKind::Explicit {
            return cfg("studies need a generated family".into());
        }
        if !(1..=2).contains(&self.d) {
            return cfg(format!("d = {} not in {{1, 2}}", self.d));
        }
        self.spec_at(self.n_list[0])?;
        Ok(())
    }

    /// Sample times; default is `0` plus ten uniform points up to `T`.
    pub fn times(&self) -> Vec<f64> {
        match &self.sample_times {
            Some(t) => t.clone(),
            None => (0..=10).map(|k| self.horizon * k as f64 / 10.0).collect(),
        }
    }

    /// Battery entries are analytic test functions, or
    /// `resolvent:<κ>:<fn>` for `κ(κ − L_M)⁻¹ S_M fn` tabulated on the
    /// reference level `M` paired with the finest study level.
    pub fn functions(&self) -> Result<Vec<TestFunction>> {
        let mut reference = None;
        self.battery
            .iter()
            .map(|s| match s.strip_prefix("resolvent:") {
                None => s.parse(),
                Some(rest) => {
                    let bad = || Error::Config(format!("cannot parse battery entry `{s}`"));
                    let (kappa, inner) = rest.split_once(':').ok_or_else(bad)?;
                    let kappa: f64 = kappa.parse().map_err(|_| bad())?;
                    if !(kappa > 0.0) {
                        return Err(bad());
                    }
                    let f: TestFunction = inner.parse()?;
                    if reference.is_none() {
                        let n_max = *self.n_list.last().ok_or_else(bad)?;
                        let env = self.spec_at(self.fine_level_for(n_max))?.build()?;
                        let gen = assemble_generator(&env);
                        reference = Some((env, gen));
                    }
                    let (env, gen) = reference.as_ref().unwrap();
                    smoothed_test_function(env, gen, &f, kappa)
                }
            })
            .collect()
    }

    pub fn profile(&self) -> Result<Profile> {
        self.u0.parse()
    }

    pub fn conductance_law(&self) -> Result<ConductanceLaw> {
        let raw = self
            .law
            .as_deref()
            .ok_or_else(|| Error::Config("elliptic-random needs `law`".into()))?;
        let mut law: ConductanceLaw = raw.parse()?;
        if let Some(e) = self.eps0 {
            law.eps0 = e;
            law.validate()?;
        }
        Ok(law)
    }

    pub fn w_measure(&self) -> Result<WMeasure> {
        let mut w = match self.alpha {
            Some(alpha) => sample_alpha_stable_w(alpha, self.env_seed, self.jumps)?,
            None => WMeasure {
                density: self.density,
                atoms: Vec::new(),
            },
        };
        for &[location, mass] in &self.atoms {
            w = w.with_atom(location, mass);
        }
        w.validate()?;
        Ok(w)
    }

    /// Environment description at level `n`.
    pub fn spec_at(&self, n: usize) -> Result<EnvironmentSpec> {
        Ok(match self.kind()? {
            FamilyKind::TorusLattice => EnvironmentSpec::TorusLattice { dim: self.d, level: n },
            FamilyKind::EllipticRandom => EnvironmentSpec::EllipticRandom {
                dim: self.d,
                level: n,
                law: self.conductance_law()?,
                seed: self.env_seed,
            },
            FamilyKind::Percolation => EnvironmentSpec::Percolation {
                dim: self.d,
                level: n,
                p: self
                    .p
                    .ok_or_else(|| Error::Config("percolation needs `p`".into()))?,
                seed: self.env_seed,
            },
            FamilyKind::WMeasure1d => EnvironmentSpec::WMeasure {
                level: n,
                measure: self.w_measure()?,
            },
            FamilyKind::Sierpinski => EnvironmentSpec::Sierpinski { level: n as u32 },
            FamilyKind::Explicit => {
                return Err(Error::Config("studies need a generated family".into()))
            }
        })
    }

    /// Level of the reference graph paired with level `n`.
    pub fn fine_level_for(&self, n: usize) -> usize {
        match self.kind() {
            Ok(FamilyKind::Sierpinski) => n + self.fine_level,
            _ => self.fine_n.unwrap_or(self.fine_factor * n),
        }
    }
}
