use rand_distr::{weighted::WeightedAliasIndex, Distribution, Exp1};

use super::{Configuration, ObservablePlan, ObservableState, TrajectoryRecord};
use crate::environment::{Edge, Environment};
use crate::error::{Error, Result};
use crate::rng::{lane, StreamKey};

#[derive(Debug, Clone, Copy)]
pub struct KmcOptions {
    /// Hard cap on clock rings per trajectory.
    pub max_events: u64,
    /// Observable sums are rebuilt from scratch this often to shed rounding
    /// drift.
    pub recompute_every: u64,
}

impl Default for KmcOptions {
    fn default() -> Self {
        Self {
            max_events: 1 << 36,
            recompute_every: 1 << 20,
        }
    }
}

/// Event sampler for one environment. Edges ring as independent Poisson
/// clocks of rate `ω(x, y)`; a ring swaps the two occupancies.
#[derive(Debug, Clone)]
pub struct Kmc {
    edges: Vec<Edge>,
    alias: Option<WeightedAliasIndex<f64>>,
    total_rate: f64,
    sites: usize,
    scaling: f64,
    pub options: KmcOptions,
}

impl Kmc {
    pub fn new(env: &Environment) -> Result<Self> {
        let edges = env.edges().to_vec();
        let total_rate: f64 = edges.iter().map(|e| e.rate).sum();
        let alias = if total_rate > 0.0 {
            let weights = edges.iter().map(|e| e.rate).collect();
            Some(
                WeightedAliasIndex::new(weights)
                    .map_err(|e| Error::invalid(format!("edge rates: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            edges,
            alias,
            total_rate,
            sites: env.site_count(),
            scaling: env.scaling(),
            options: KmcOptions::default(),
        })
    }

    pub fn with_options(mut self, options: KmcOptions) -> Self {
        self.options = options;
        self
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn run(
        &self,
        eta0: &Configuration,
        plan: &ObservablePlan,
        key: StreamKey,
    ) -> Result<TrajectoryRecord> {
        if eta0.len() != self.sites {
            return Err(Error::invalid(format!(
                "configuration has {} sites, environment {}",
                eta0.len(),
                self.sites
            )));
        }
        let obs = plan.observables();
        for o in obs {
            let bad = o.plain.len() != self.sites
                || o.corrected.as_ref().is_some_and(|c| {
                    c.values.len() != self.sites || c.drift.len() != self.sites
                });
            if bad {
                return Err(Error::MismatchedObservable(o.id.clone()));
            }
        }

        // Site-major table: for site x, columns 3o..3o+3 hold plain, corrected
        // and drift values of observable o.
        let width = 3 * obs.len();
        let mut table = vec![0.0; self.sites * width];
        for (x, row) in table.chunks_exact_mut(width.max(1)).enumerate().take(self.sites) {
            for (k, o) in obs.iter().enumerate() {
                row[3 * k] = o.plain[x];
                if let Some(c) = &o.corrected {
                    row[3 * k + 1] = c.values[x];
                    row[3 * k + 2] = c.drift[x];
                }
            }
        }
        let row = |x: usize| &table[x * width..(x + 1) * width];
        let recompute = |eta: &Configuration, sums: &mut [f64]| {
            sums.iter_mut().for_each(|s| *s = 0.0);
            for x in eta.particles() {
                for (s, v) in sums.iter_mut().zip(row(x)) {
                    *s += v;
                }
            }
        };

        let a = self.scaling;
        let snapshot = |sums: &[f64], integrals: &[f64]| -> Vec<ObservableState> {
            (0..obs.len())
                .map(|k| ObservableState {
                    plain: sums[3 * k] / a,
                    corrected: sums[3 * k + 1] / a,
                    integral: integrals[k] / a,
                })
                .collect()
        };

        let mut eta = eta0.clone();
        let particles = eta.count();
        let mut sums = vec![0.0; width];
        recompute(&eta, &mut sums);
        let mut integrals = vec![0.0; obs.len()];
        let initial = snapshot(&sums, &integrals);

        let times = plan.times();
        let mut samples = Vec::with_capacity(times.len());
        let mut rng = key.rng(lane::DYNAMICS);
        let mut t = 0.0;
        let mut next = 0;
        let mut events = 0u64;
        let mut swaps = 0u64;

        let advance = |to: f64, t: &mut f64, sums: &[f64], integrals: &mut [f64]| {
            let dt = to - *t;
            for (k, i) in integrals.iter_mut().enumerate() {
                *i += sums[3 * k + 2] * dt;
            }
            *t = to;
        };

        loop {
            let t_next = match &self.alias {
                Some(_) => {
                    let w: f64 = Exp1.sample(&mut rng);
                    t + w / self.total_rate
                }
                None => f64::INFINITY,
            };
            while next < times.len() && times[next] <= t_next {
                advance(times[next], &mut t, &sums, &mut integrals);
                assert_eq!(eta.count(), particles);
                samples.push(snapshot(&sums, &integrals));
                next += 1;
            }
            if next == times.len() {
                break;
            }
            advance(t_next, &mut t, &sums, &mut integrals);

            events += 1;
            if events > self.options.max_events {
                return Err(Error::EventOverflow {
                    cap: self.options.max_events,
                    time: t,
                });
            }
            let e = self.edges[self.alias.as_ref().unwrap().sample(&mut rng)];
            let (oi, oj) = (eta.is_occupied(e.i), eta.is_occupied(e.j));
            if oi != oj {
                let (from, to) = if oi { (e.i, e.j) } else { (e.j, e.i) };
                for ((s, vt), vf) in sums.iter_mut().zip(row(to)).zip(row(from)) {
                    *s += vt - vf;
                }
                eta.swap(e.i, e.j);
                swaps += 1;
                debug_assert_eq!(eta.recount(), particles);
            }
            if events % self.options.recompute_every == 0 {
                recompute(&eta, &mut sums);
            }
        }

        Ok(TrajectoryRecord {
            ids: obs.iter().map(|o| o.id.clone()).collect(),
            has_corrected: obs.iter().map(|o| o.corrected.is_some()).collect(),
            times: times.to_vec(),
            initial,
            samples,
            final_config: eta,
            events,
            swaps,
            stream_id: key.id(lane::DYNAMICS),
        })
    }
}

/// One trajectory from `eta0` sampled at the plan's times.
pub fn simulate_kmc(
    env: &Environment,
    eta0: &Configuration,
    plan: &ObservablePlan,
    key: StreamKey,
) -> Result<TrajectoryRecord> {
    Kmc::new(env)?.run(eta0, plan, key)
}
