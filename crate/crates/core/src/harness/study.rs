use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::StudyConfig;
use super::report::{
    CriterionRow, DeviationRow, EnergyRow, EnergySupRow, GammaRow, MartingaleRow, Runtime,
    StudyReport,
};
use crate::dynamics::{sample_bernoulli_profile, Kmc, Observable, ObservablePlan};
use crate::environment::{build_torus_lattice, Environment, EnvironmentSpec, FamilyKind};
use crate::error::{Error, Result};
use crate::hydro::{
    effective_diffusivity, restriction_map, solve_heat_backward_euler, HydroSolution, TimeGrid,
};
use crate::linalg::CgOptions;
use crate::operator::{
    assemble_generator, corrected_test_function, CorrectedFunction, LimitOperator,
    SparseGenerator,
};
use crate::rng::StreamKey;
use crate::testfn::TestFunction;

/// Mean, sample standard deviation and count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(samples: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = samples.into_iter().collect();
        let count = v.len();
        let mean = v.iter().sum::<f64>() / count.max(1) as f64;
        let var = if count > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            sd: var.sqrt(),
            count,
        }
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }

    pub fn std_error(&self) -> f64 {
        self.sd / (self.count.max(1) as f64).sqrt()
    }

    /// Half-width `z · sd / √k`.
    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_error()
    }
}

/// Everything fixed for one level of a quenched study.
pub struct Level {
    pub n: usize,
    pub env: Arc<Environment>,
    pub gen: SparseGenerator,
    pub corrected: Vec<CorrectedFunction>,
    pub oracle: String,
    /// `⟨S_n G, u_t⟩_n` per function and sample time.
    pub oracle_pairings: Vec<Vec<f64>>,
}

/// Per-seed readings, indexed by battery function.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub deviation: Vec<f64>,
    pub martingale: Vec<f64>,
    pub energy: Vec<f64>,
    pub events: u64,
}

pub struct Ensemble {
    pub level: Level,
    pub outcomes: Vec<SeedOutcome>,
}

/// Limit operator used for the corrected functions of a family.
pub fn limit_operator(cfg: &StudyConfig) -> Result<LimitOperator> {
    let n_max = *cfg.n_list.last().unwrap();
    Ok(match cfg.kind()? {
        FamilyKind::TorusLattice => LimitOperator::isotropic(1.0),
        FamilyKind::EllipticRandom if cfg.d == 1 => {
            LimitOperator::isotropic(cfg.conductance_law()?.harmonic_mean())
        }
        FamilyKind::EllipticRandom | FamilyKind::Percolation => {
            let (a, _) = homogenized(cfg, n_max)?;
            LimitOperator::Diffusion { matrix: a }
        }
        FamilyKind::WMeasure1d => LimitOperator::Stieltjes {
            measure: cfg.w_measure()?,
        },
        FamilyKind::Sierpinski => {
            LimitOperator::fine_grid(cfg.spec_at(cfg.fine_level_for(n_max))?.build()?)
        }
        FamilyKind::Explicit => return Err(Error::Config("explicit family".into())),
    })
}

/// Homogenized matrix from the corrector problem at the fine level paired with
/// `n`, with the realized site density. For percolation the matrix is divided
/// by the density so that it acts on the cluster's own measure.
fn homogenized(cfg: &StudyConfig, n: usize) -> Result<([[f64; 2]; 2], f64)> {
    let env = cfg.spec_at(cfg.fine_level_for(n))?.build()?;
    let coeff = effective_diffusivity(&env)?;
    let mut a = coeff.matrix;
    let theta = env.site_density();
    if cfg.kind()? == FamilyKind::Percolation {
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v /= theta;
            }
        }
    }
    Ok((a, theta))
}

/// Reference solution paired with `coarse`: a closed form sampled on the
/// coarse sites when one exists, otherwise the fine-grid semigroup.
pub fn reference_solution(
    cfg: &StudyConfig,
    coarse: &Environment,
    operator: &LimitOperator,
) -> Result<HydroSolution> {
    let kind = cfg.kind()?;
    let profile = cfg.profile()?;
    let closed = match (kind, operator) {
        (FamilyKind::TorusLattice | FamilyKind::EllipticRandom, LimitOperator::Diffusion { matrix })
            if cfg.d == 1 && profile.fourier_1d(1.0, 0.0, 0.0).is_some() =>
        {
            Some(matrix[0][0])
        }
        _ => None,
    };
    if let Some(d) = closed {
        return Ok(HydroSolution::closed_form(
            Arc::new(coarse.clone()),
            cfg.times(),
            |t, p| profile.fourier_1d(d, t, p[0]).unwrap(),
            format!("closed-form Fourier mode, D = {d}"),
        ));
    }

    let fine_level = cfg.fine_level_for(coarse.level() as usize);
    let fine = match (kind, operator) {
        (FamilyKind::WMeasure1d | FamilyKind::Sierpinski, _) => cfg.spec_at(fine_level)?.build()?,
        (_, LimitOperator::Diffusion { matrix }) => {
            let big = (fine_level as f64).powi(2);
            build_torus_lattice(cfg.d, fine_level, |b| big * matrix[b.axis][b.axis])?
        }
        _ => return Err(Error::Config(format!("no reference solution for {kind}"))),
    };
    let fine = Arc::new(fine);
    let gen = assemble_generator(&fine);
    let u0: Vec<f64> = fine.coords().iter().map(|p| profile.value(p)).collect();
    solve_heat_backward_euler(fine, &gen, u0, TimeGrid::new(cfg.horizon, cfg.dt_steps)?, 1.0)
}

/// Environment, corrected battery and oracle pairings for level `n`.
pub fn prepare_level(cfg: &StudyConfig, n: usize, operator: &LimitOperator) -> Result<Level> {
    let env = cfg
        .spec_at(n)?
        .build()
        .map_err(|e| e.in_stage(format!("environment n={n}")))?;
    let gen = assemble_generator(&env);
    let corrected = cfg
        .functions()?
        .iter()
        .map(|g| corrected_test_function(&env, &gen, g, cfg.lambda, operator, CgOptions::default()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage(format!("corrected functions n={n}")))?;
    let sol = reference_solution(cfg, &env, operator).map_err(|e| e.in_stage(format!("oracle n={n}")))?;
    let map = restriction_map(&sol.env, &env)?;
    let u: Vec<Vec<f64>> = cfg
        .times()
        .iter()
        .map(|&t| {
            let ut = sol.at(t);
            map.iter().map(|&i| ut[i]).collect()
        })
        .collect();
    let oracle_pairings = corrected
        .iter()
        .map(|cf| u.iter().map(|ut| gen.inner(&cf.projected, ut)).collect())
        .collect();
    Ok(Level {
        n,
        env: Arc::new(env),
        gen,
        corrected,
        oracle: sol.operator,
        oracle_pairings,
    })
}

/// Runs every seed of one level; results come back in seed order.
pub fn run_level(cfg: &StudyConfig, level: Level) -> Result<Ensemble> {
    let kmc = Kmc::new(&level.env)?;
    let profile = cfg.profile()?;
    let observables: Vec<Observable> = level.corrected.iter().map(Observable::from_corrected).collect();
    let plan = ObservablePlan::new(observables, cfg.times())?;
    let horizon = cfg.horizon;
    let last = plan.times().len() - 1;
    let outcomes = (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let key = StreamKey::new(cfg.study_id, level.n as u64, seed);
            let eta0 = sample_bernoulli_profile(&level.env, |p| profile.value(p), key)?;
            let rec = kmc.run(&eta0, &plan, key)?;
            let mut out = SeedOutcome {
                deviation: Vec::new(),
                martingale: Vec::new(),
                energy: Vec::new(),
                events: rec.events,
            };
            for (o, cf) in level.corrected.iter().enumerate() {
                let sup = rec
                    .samples
                    .iter()
                    .zip(&level.oracle_pairings[o])
                    .map(|(s, oracle)| (s[o].plain - oracle).abs())
                    .fold(0.0, f64::max);
                out.deviation.push(sup);
                out.martingale.push(rec.martingale(o, last));
                out.energy
                    .push(2.0 * rec.samples[last][o].integral - horizon * cf.energy);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage(format!("ensemble n={}", level.n)))?;
    Ok(Ensemble { level, outcomes })
}

pub fn run_ensembles(cfg: &StudyConfig) -> Result<Vec<Ensemble>> {
    cfg.validate()?;
    let operator = limit_operator(cfg).map_err(|e| e.in_stage("limit operator"))?;
    cfg.n_list
        .iter()
        .map(|&n| run_level(cfg, prepare_level(cfg, n, &operator)?))
        .collect()
}

fn names(cfg: &StudyConfig) -> Result<Vec<String>> {
    Ok(cfg.functions()?.iter().map(TestFunction::to_string).collect())
}

pub fn deviation_section(cfg: &StudyConfig, ens: &[Ensemble]) -> Result<(Vec<DeviationRow>, Vec<CriterionRow>)> {
    let names = names(cfg)?;
    let z = cfg.tolerances.ci_z;
    let mut rows = Vec::new();
    for e in ens {
        for (o, name) in names.iter().enumerate() {
            let s = Stat::of(e.outcomes.iter().map(|r| r.deviation[o]));
            rows.push(DeviationRow {
                n: e.level.n,
                function: name.clone(),
                mean: s.mean,
                sd: s.sd,
                ci: s.half_width(z),
                seeds: s.count,
            });
        }
    }
    let mut crit = Vec::new();
    for name in &names {
        let curve: Vec<&DeviationRow> = rows.iter().filter(|r| &r.function == name).collect();
        for w in curve.windows(2) {
            let (a, b) = (w[0], w[1]);
            crit.push(CriterionRow {
                criterion: "deviation-decreasing".into(),
                subject: format!("{name} n={}->{}", a.n, b.n),
                passed: b.mean + b.ci < a.mean - a.ci,
                value: b.mean + b.ci,
                limit: a.mean - a.ci,
            });
        }
        let last = curve.last().unwrap();
        crit.push(CriterionRow {
            criterion: "deviation-threshold".into(),
            subject: format!("{name} n={}", last.n),
            passed: last.mean + last.ci < cfg.tolerances.deviation,
            value: last.mean + last.ci,
            limit: cfg.tolerances.deviation,
        });
    }
    Ok((rows, crit))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn martingale_section(cfg: &StudyConfig, ens: &[Ensemble]) -> Result<(Vec<MartingaleRow>, Vec<CriterionRow>)> {
    let names = names(cfg)?;
    let tol = &cfg.tolerances;
    let mut rows = Vec::new();
    let mut crit = Vec::new();
    for e in ens {
        for (o, name) in names.iter().enumerate() {
            let s = Stat::of(e.outcomes.iter().map(|r| r.martingale[o]));
            let cf = &e.level.corrected[o];
            let bound = cfg.horizon * cf.energy / cf.scaling;
            let row = MartingaleRow {
                n: e.level.n,
                function: name.clone(),
                mean: s.mean,
                sd: s.sd,
                variance: s.variance(),
                bound,
                seeds: s.count,
            };
            crit.push(CriterionRow {
                criterion: "martingale-mean".into(),
                subject: format!("{name} n={}", e.level.n),
                passed: s.mean.abs() <= tol.martingale_sigma * s.std_error(),
                value: s.mean.abs(),
                limit: tol.martingale_sigma * s.std_error(),
            });
            crit.push(CriterionRow {
                criterion: "martingale-variance".into(),
                subject: format!("{name} n={}", e.level.n),
                passed: row.variance <= tol.variance_slack * bound,
                value: row.variance,
                limit: tol.variance_slack * bound,
            });
            rows.push(row);
        }
    }
    if cfg.kind()?.is_lattice() {
        for name in &names {
            let (x, y): (Vec<f64>, Vec<f64>) = ens
                .iter()
                .zip(rows.iter().filter(|r| &r.function == name))
                .filter(|(_, r)| r.variance > 0.0)
                .map(|(e, r)| (e.level.env.scaling(), r.variance))
                .unzip();
            if x.len() < 2 {
                continue;
            }
            let slope = log_log_slope(&x, &y);
            crit.push(CriterionRow {
                criterion: "martingale-slope".into(),
                subject: name.clone(),
                passed: slope >= tol.slope_min && slope <= tol.slope_max,
                value: slope,
                limit: tol.slope_max,
            });
        }
    }
    Ok((rows, crit))
}

pub fn energy_section(
    cfg: &StudyConfig,
    ens: &[Ensemble],
) -> Result<(Vec<EnergyRow>, Vec<EnergySupRow>, Vec<CriterionRow>)> {
    let names = names(cfg)?;
    let z = cfg.tolerances.ci_z;
    let mut rows = Vec::new();
    let mut sup_rows = Vec::new();
    for e in ens {
        for (o, name) in names.iter().enumerate() {
            let s = Stat::of(e.outcomes.iter().map(|r| r.energy[o]));
            rows.push(EnergyRow {
                n: e.level.n,
                function: name.clone(),
                mean: s.mean,
                sd: s.sd,
                ci: s.half_width(z),
            });
        }
        let s = Stat::of(
            e.outcomes
                .iter()
                .map(|r| r.energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        );
        sup_rows.push(EnergySupRow {
            n: e.level.n,
            mean: s.mean,
            sd: s.sd,
            ci: s.half_width(z),
        });
    }
    let max = sup_rows
        .iter()
        .max_by(|a, b| a.mean.abs().total_cmp(&b.mean.abs()))
        .unwrap();
    let min = sup_rows
        .iter()
        .map(|r| r.mean.abs())
        .fold(f64::INFINITY, f64::min);
    let limit = cfg.tolerances.energy_factor * min + 2.0 * max.ci;
    let crit = vec![CriterionRow {
        criterion: "energy-bounded".into(),
        subject: "sup over battery".into(),
        passed: max.mean.abs() <= limit,
        value: max.mean.abs(),
        limit,
    }];
    Ok((rows, sup_rows, crit))
}

fn is_random(kind: FamilyKind) -> bool {
    matches!(kind, FamilyKind::EllipticRandom | FamilyKind::Percolation)
}

fn with_seed(spec: &EnvironmentSpec, s: u64) -> EnvironmentSpec {
    let mut spec = spec.clone();
    match &mut spec {
        EnvironmentSpec::EllipticRandom { seed, .. } | EnvironmentSpec::Percolation { seed, .. } => {
            *seed = s
        }
        _ => {}
    }
    spec
}

/// Corrected energies and distances across levels. Random families average
/// over `gamma_envs` environment realizations.
pub fn gamma_section(
    cfg: &StudyConfig,
    ens: &[Ensemble],
    operator: &LimitOperator,
) -> Result<(Vec<GammaRow>, Vec<CriterionRow>)> {
    let kind = cfg.kind()?;
    let functions = cfg.functions()?;
    let realizations = if is_random(kind) { cfg.gamma_envs.max(1) } else { 1 };
    let reference_ok = kind != FamilyKind::Percolation;
    let mut rows = Vec::new();
    for (o, g) in functions.iter().enumerate() {
        let reference = if reference_ok {
            operator.reference_energy(g, cfg.d.max(if kind == FamilyKind::Sierpinski { 2 } else { 1 }))
        } else {
            None
        };
        for e in ens {
            let (energy, distance) = if realizations == 1 {
                let cf = &e.level.corrected[o];
                (Stat::of([cf.energy]), Stat::of([cf.distance]))
            } else {
                let spec = cfg.spec_at(e.level.n)?;
                let pts = (0..realizations as u64)
                    .into_par_iter()
                    .map(|r| {
                        let env = with_seed(&spec, cfg.env_seed + r).build()?;
                        let gen = assemble_generator(&env);
                        let cf = corrected_test_function(&env, &gen, g, cfg.lambda, operator, CgOptions::default())?;
                        Ok((cf.energy, cf.distance))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let gaps = pts.iter().map(|(en, _)| match reference {
                    Some(r) => (en - r).abs(),
                    None => *en,
                });
                (Stat::of(gaps), Stat::of(pts.iter().map(|p| p.1)))
            };
            let energy_gap = match (reference, realizations) {
                (Some(r), 1) => Some((energy.mean - r).abs()),
                (Some(_), _) => Some(energy.mean),
                _ => None,
            };
            rows.push(GammaRow {
                n: e.level.n,
                function: g.to_string(),
                energy: e.level.corrected[o].energy,
                reference,
                energy_gap,
                distance: distance.mean,
                realizations,
            });
        }
    }
    let slack = 1.0 + cfg.tolerances.gamma_slack;
    let mut crit = Vec::new();
    for g in &functions {
        let name = g.to_string();
        let curve: Vec<&GammaRow> = rows.iter().filter(|r| r.function == name).collect();
        for w in curve.windows(2) {
            if let (Some(a), Some(b)) = (w[0].energy_gap, w[1].energy_gap) {
                crit.push(CriterionRow {
                    criterion: "gamma-energy".into(),
                    subject: format!("{name} n={}->{}", w[0].n, w[1].n),
                    passed: b <= slack * a,
                    value: b,
                    limit: slack * a,
                });
            }
            crit.push(CriterionRow {
                criterion: "gamma-distance".into(),
                subject: format!("{name} n={}->{}", w[0].n, w[1].n),
                passed: w[1].distance <= slack * w[0].distance,
                value: w[1].distance,
                limit: slack * w[0].distance,
            });
        }
    }
    Ok((rows, crit))
}

/// Full quenched study: deviations, martingale, energy functional and
/// Γ-energy curve, with criterion verdicts.
pub fn convergence_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let start = Instant::now();
    let ens = run_ensembles(cfg)?;
    let operator = limit_operator(cfg)?;
    let (deviation, mut criteria) = deviation_section(cfg, &ens)?;
    let (martingale, c) = martingale_section(cfg, &ens)?;
    criteria.extend(c);
    let (energy, energy_sup, c) = energy_section(cfg, &ens)?;
    criteria.extend(c);
    let (gamma, c) = gamma_section(cfg, &ens, &operator).map_err(|e| e.in_stage("gamma curve"))?;
    criteria.extend(c);
    Ok(StudyReport {
        config_hash: format!("{:016x}", cfg.hash()),
        family: cfg.family.clone(),
        oracles: ens.iter().map(|e| (e.level.n, e.level.oracle.clone())).collect(),
        deviation,
        martingale,
        energy,
        energy_sup,
        gamma,
        criteria,
        runtime: Runtime {
            seconds: start.elapsed().as_secs_f64(),
            workers: rayon::current_num_threads(),
            events: ens.iter().flat_map(|e| &e.outcomes).map(|o| o.events).sum(),
        },
    })
}

/// Martingale section alone.
pub fn martingale_check(cfg: &StudyConfig) -> Result<(Vec<MartingaleRow>, Vec<CriterionRow>)> {
    martingale_section(cfg, &run_ensembles(cfg)?)
}

/// Energy-functional section alone.
pub fn energy_functional_check(
    cfg: &StudyConfig,
) -> Result<(Vec<EnergyRow>, Vec<EnergySupRow>, Vec<CriterionRow>)> {
    energy_section(cfg, &run_ensembles(cfg)?)
}

/// Builds every level and its corrected battery without simulating, and
/// checks the resolvent identities. Returns one line per level.
pub fn preflight(cfg: &StudyConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let operator = limit_operator(cfg)?;
    let mut lines = Vec::new();
    for &n in &cfg.n_list {
        let level = prepare_level(cfg, n, &operator)?;
        level.env.validate()?;
        for cf in &level.corrected {
            if cf.mass_error() > 1e-8 || cf.residual > 1e-8 {
                return Err(Error::invalid(format!(
                    "corrected {} at n={n}: mass error {:.2e}, residual {:.2e}",
                    cf.function,
                    cf.mass_error(),
                    cf.residual
                )));
            }
        }
        lines.push(format!(
            "n={n} sites={} edges={} scaling={} oracle: {}",
            level.env.site_count(),
            level.env.edges().len(),
            level.env.scaling(),
            level.oracle
        ));
    }
    Ok(lines)
}
