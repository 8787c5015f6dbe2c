//! Exclusion dynamics: configurations, observable plans and kinetic Monte
//! Carlo trajectories.

mod kmc;
mod martingale;
mod record;

pub use kmc::{simulate_kmc, Kmc, KmcOptions};
pub use martingale::{martingale_series, MartingaleSeries};
pub use record::{ObservableState, TrajectoryRecord};

use rand::Rng;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::operator::CorrectedFunction;
use crate::rng::{lane, StreamKey};
use crate::testfn::Point;

/// Occupancies `η ∈ {0,1}^{X_n}` with a cached particle count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    occupied: Vec<bool>,
    count: usize,
}

impl Configuration {
    pub fn new(occupied: Vec<bool>) -> Self {
        let count = occupied.iter().filter(|&&o| o).count();
        Self { occupied, count }
    }

    pub fn empty(sites: usize) -> Self {
        Self::new(vec![false; sites])
    }

    pub fn full(sites: usize) -> Self {
        Self::new(vec![true; sites])
    }

    pub fn from_sites(sites: usize, particles: &[usize]) -> Self {
        let mut occupied = vec![false; sites];
        for &p in particles {
            occupied[p] = true;
        }
        Self::new(occupied)
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_occupied(&self, x: usize) -> bool {
        self.occupied[x]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.occupied
    }

    pub fn particles(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
    }

    /// `η ↦ η^{x,y}`.
    pub fn swap(&mut self, x: usize, y: usize) {
        self.occupied.swap(x, y);
    }

    pub fn recount(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// `a⁻¹ Σ_x η(x) f(x)`.
    pub fn pair(&self, f: &[f64], scaling: f64) -> f64 {
        self.particles().map(|x| f[x]).sum::<f64>() / scaling
    }
}

/// Independent `Bernoulli(u0(x))` occupancies.
pub fn sample_bernoulli_profile(
    env: &Environment,
    u0: impl Fn(&Point) -> f64,
    key: StreamKey,
) -> Result<Configuration> {
    let probs: Vec<f64> = env.coords().iter().map(u0).collect();
    if let Some((x, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p >= 0.0 && **p <= 1.0))
    {
        return Err(Error::invalid(format!("u0 = {p} at site {x} outside [0, 1]")));
    }
    let mut rng = key.rng(lane::INITIAL);
    Ok(Configuration::new(
        probs.iter().map(|&p| rng.random::<f64>() < p).collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct CorrectedPairing {
    /// `S_n G_n`
    pub values: Vec<f64>,
    /// `L_n S_n G_n`
    pub drift: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Observable {
    pub id: String,
    /// `S_n G`
    pub plain: Vec<f64>,
    pub corrected: Option<CorrectedPairing>,
}

impl Observable {
    pub fn plain(id: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            plain: values,
            corrected: None,
        }
    }

    /// Tracks both pairings of a corrected function, keyed by the function's
    /// name.
    pub fn from_corrected(cf: &CorrectedFunction) -> Self {
        Self {
            id: cf.function.to_string(),
            plain: cf.projected.clone(),
            corrected: Some(CorrectedPairing {
                values: cf.corrected.clone(),
                drift: cf.drift.clone(),
            }),
        }
    }
}

/// Observables and strictly increasing sample times.
#[derive(Debug, Clone)]
pub struct ObservablePlan {
    observables: Vec<Observable>,
    times: Vec<f64>,
}

impl ObservablePlan {
    pub fn new(observables: Vec<Observable>, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("plan needs at least one sample time"));
        }
        if !(times[0] >= 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sample times must be >= 0 and strictly increasing"));
        }
        let mut ids: Vec<&str> = observables.iter().map(|o| o.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("observable ids must be unique"));
        }
        Ok(Self { observables, times })
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
}
