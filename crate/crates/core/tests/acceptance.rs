//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use common::{chi_square_z, random_graph};
use hydrolim::dynamics::{
    sample_bernoulli_profile, Configuration, Kmc, ObservablePlan, Observable,
};
use hydrolim::environment::{
    build_torus_lattice, gen_elliptic_random, gen_sierpinski, ConductanceLaw, Environment,
};
use hydrolim::harness::{convergence_study, CriterionRow, StudyConfig, StudyReport};
use hydrolim::hydro::effective_diffusivity;
use hydrolim::linalg::CgOptions;
use hydrolim::operator::{
    assemble_generator, corrected_test_function, heat_kernel_small, resolvent_by_kernel,
    resolvent_solve, LimitOperator,
};
use hydrolim::rng::StreamKey;
use hydrolim::testfn::TestFunction;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn config(name: &str) -> StudyConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    StudyConfig::from_toml_str(&text, &[]).unwrap()
}

fn rows<'a>(report: &'a StudyReport, criterion: &str) -> Vec<&'a CriterionRow> {
    report.criteria.iter().filter(|c| c.criterion == criterion).collect()
}

fn describe(rows: &[&CriterionRow]) -> String {
    rows.iter()
        .map(|r| format!("{} {:.4e}/{:.4e}", r.subject, r.value, r.limit))
        .collect::<Vec<_>>()
        .join("; ")
}

fn all_pass(rows: &[&CriterionRow]) -> bool {
    !rows.is_empty() && rows.iter().all(|r| r.passed)
}

/// Occupation law of a single particle started at site 0.
fn one_particle() -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut passed = true;
    for g in 0..10u64 {
        let sites = 4 + (g as usize * 7) % 61;
        let env = random_graph(sites, sites / 2, 1000 + g);
        let gen = assemble_generator(&env);
        let kmc = Kmc::new(&env).unwrap();
        let eta0 = Configuration::from_sites(sites, &[0]);
        for t in [0.1, 1.0] {
            let p = heat_kernel_small(&gen, t).unwrap();
            let plan = ObservablePlan::new(vec![], vec![t]).unwrap();
            let runs = 10_000u64;
            let ends: Vec<usize> = (0..runs)
                .into_par_iter()
                .map(|k| {
                    let rec = kmc.run(&eta0, &plan, StreamKey::new(11, g, k)).unwrap();
                    let site = rec.final_config.particles().next().unwrap();
                    site
                })
                .collect();
            let mut counts = vec![0u64; sites];
            ends.iter().for_each(|&x| counts[x] += 1);
            let probs: Vec<f64> = (0..sites).map(|y| p[(0, y)]).collect();
            let (z, _) = chi_square_z(&counts, &probs);
            worst = worst.max(z);
            passed &= z <= 3.0;
        }
    }
    outcome(passed, format!("10 graphs x 2 times, max chi2 z = {worst:.3} (limit 3)"))
}

/// Two-particle sector: dense generator on unordered pairs.
fn pair_generator(env: &Environment) -> (DMatrix<f64>, Vec<(usize, usize)>) {
    let n = env.site_count();
    let mut rate = DMatrix::<f64>::zeros(n, n);
    for e in env.edges() {
        rate[(e.i, e.j)] += e.rate;
        rate[(e.j, e.i)] += e.rate;
    }
    let states: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect();
    let index = |a: usize, b: usize| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        states.iter().position(|&s| s == (a, b)).unwrap()
    };
    let m = states.len();
    let mut q = DMatrix::<f64>::zeros(m, m);
    for (s, &(a, b)) in states.iter().enumerate() {
        for c in 0..n {
            if c != a && c != b {
                for (from, other) in [(a, b), (b, a)] {
                    let w = rate[(from, c)];
                    if w > 0.0 {
                        q[(s, index(c, other))] += w;
                        q[(s, s)] -= w;
                    }
                }
            }
        }
    }
    (q, states)
}

fn two_particles() -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut passed = true;
    let t = 0.5;
    for g in 0..5u64 {
        let sites = 5 + (g as usize * 2) % 8;
        let env = random_graph(sites, sites, 2000 + g);
        let (q, states) = pair_generator(&env);
        let p = (q * t).exp();
        let start = (0, sites - 1);
        let s0 = states.iter().position(|&s| s == start).unwrap();
        let kmc = Kmc::new(&env).unwrap();
        let eta0 = Configuration::from_sites(sites, &[start.0, start.1]);
        let plan = ObservablePlan::new(vec![], vec![t]).unwrap();
        let runs = 100_000u64;
        let ends: Vec<usize> = (0..runs)
            .into_par_iter()
            .map(|k| {
                let rec = kmc.run(&eta0, &plan, StreamKey::new(12, g, k)).unwrap();
                let occ: Vec<usize> = rec.final_config.particles().collect();
                states.iter().position(|&s| s == (occ[0], occ[1])).unwrap()
            })
            .collect();
        let mut counts = vec![0u64; states.len()];
        ends.iter().for_each(|&s| counts[s] += 1);
        let probs: Vec<f64> = (0..states.len()).map(|s| p[(s0, s)]).collect();
        let (z, _) = chi_square_z(&counts, &probs);
        worst = worst.max(z);
        passed &= z <= 4.0;
    }
    outcome(passed, format!("5 graphs, max chi2 z = {worst:.3} (limit 4)"))
}

fn resolvent_identities() -> Outcome {
    let lambda = 1.3;
    let mut mass_worst: f64 = 0.0;
    let mut kernel_worst: f64 = 0.0;
    let mut check = |gen: &hydrolim::operator::SparseGenerator, source: &[f64], f: &[f64]| {
        let total: f64 = source.iter().map(|v| v.abs()).sum();
        let mass = (f.iter().sum::<f64>() - source.iter().sum::<f64>() / lambda).abs()
            / (total / lambda);
        mass_worst = mass_worst.max(mass);
        let k = resolvent_by_kernel(gen, lambda, source).unwrap();
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = k.iter().zip(f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        kernel_worst = kernel_worst.max(err);
    };
    for g in 0..6u64 {
        let sites = 8 + 11 * g as usize;
        let env = random_graph(sites, sites, 3000 + g);
        let gen = assemble_generator(&env);
        let source: Vec<f64> = (0..sites).map(|x| ((x * 7 + 3) % 11) as f64 - 5.0).collect();
        let sol = resolvent_solve(&gen, lambda, &source, CgOptions::default()).unwrap();
        check(&gen, &source, &sol.f);
    }
    let g = TestFunction::Cosine { k: 1, axis: 0 };
    for n in [16usize, 32, 64] {
        let env = build_torus_lattice(1, n, |_| (n * n) as f64).unwrap();
        let gen = assemble_generator(&env);
        let cf = corrected_test_function(&env, &gen, &g, lambda, &LimitOperator::isotropic(1.0), CgOptions::default())
            .unwrap();
        check(&gen, &cf.source, &cf.corrected);
    }
    let gasket = gen_sierpinski(3).unwrap();
    let gen = assemble_generator(&gasket);
    let bump = TestFunction::Bump {
        center: [0.5, 0.3],
        sigma: 0.2,
    };
    let op = LimitOperator::fine_grid(gen_sierpinski(5).unwrap());
    let cf = corrected_test_function(&gasket, &gen, &bump, lambda, &op, CgOptions::default()).unwrap();
    check(&gen, &cf.source, &cf.corrected);
    outcome(
        mass_worst <= 1e-8 && kernel_worst <= 1e-6,
        format!("mass identity {mass_worst:.2e} (limit 1e-8), kernel formula {kernel_worst:.2e} (limit 1e-6)"),
    )
}

fn study_outcome(report: &StudyReport, threshold_label: &str) -> Outcome {
    let dec = rows(report, "deviation-decreasing");
    let thr = rows(report, "deviation-threshold");
    let d: Vec<String> = report
        .deviation
        .iter()
        .map(|r| format!("D({})={:.4}±{:.4}", r.n, r.mean, r.ci))
        .collect();
    outcome(
        all_pass(&dec) && all_pass(&thr),
        format!("{}; decreasing: {}; {threshold_label}: {}", d.join(" "), all_pass(&dec), describe(&thr)),
    )
}

fn random_conductance(report: &StudyReport) -> Outcome {
    let law: ConductanceLaw = "discrete:0.5,2".parse().unwrap();
    let env = gen_elliptic_random(1, 4096, &law, 7).unwrap();
    let a = effective_diffusivity(&env).unwrap().matrix[0][0];
    let thr = rows(report, "deviation-threshold");
    outcome(
        (a - 0.8).abs() <= 0.02 && all_pass(&thr),
        format!("A(4096) = {a:.4} (0.8 ± 0.02); {}", describe(&thr)),
    )
}

fn martingale(reports: &[&StudyReport]) -> Outcome {
    let mut var_rows = Vec::new();
    let mut slope_rows = Vec::new();
    for r in reports {
        var_rows.extend(rows(r, "martingale-variance"));
        if r.family != "sierpinski" {
            slope_rows.extend(rows(r, "martingale-slope"));
        }
    }
    let worst = var_rows
        .iter()
        .map(|r| r.value / r.limit)
        .fold(0.0, f64::max);
    let slopes: Vec<String> = slope_rows.iter().map(|r| format!("{:.3}", r.value)).collect();
    outcome(
        all_pass(&var_rows) && all_pass(&slope_rows),
        format!(
            "{} (n, G) pairs, max Var/(1.1 bound) = {worst:.3}; slopes [{}] in [-1.3, -0.7]",
            var_rows.len(),
            slopes.join(", ")
        ),
    )
}

fn energy(report: &StudyReport) -> Outcome {
    let r = rows(report, "energy-bounded");
    let sup: Vec<String> = report
        .energy_sup
        .iter()
        .map(|e| format!("S({})={:.4}±{:.4}", e.n, e.mean, e.ci))
        .collect();
    outcome(all_pass(&r), format!("{}; {}", sup.join(" "), describe(&r)))
}

fn gamma(reports: &[&StudyReport]) -> Outcome {
    let mut all = Vec::new();
    for r in reports {
        all.extend(rows(r, "gamma-energy"));
        all.extend(rows(r, "gamma-distance"));
    }
    let energy_rows = all.iter().filter(|r| r.criterion == "gamma-energy").count();
    outcome(
        all_pass(&all) && energy_rows > 0,
        format!("{} steps checked; {}", all.len(), describe(&all)),
    )
}

fn conservation() -> Outcome {
    let n = 256;
    let env = build_torus_lattice(1, n, |_| (n * n) as f64).unwrap();
    let kmc = Kmc::new(&env).unwrap();
    let eta0 = sample_bernoulli_profile(&env, |_| 0.5, StreamKey::new(13, 0, 0)).unwrap();
    let t_end = 1.2e7 / kmc.total_rate();
    let plan = ObservablePlan::new(vec![], vec![t_end / 2.0, t_end]).unwrap();
    let rec = kmc.run(&eta0, &plan, StreamKey::new(13, 0, 1)).unwrap();
    let conserved = rec.final_config.count() == eta0.count() && rec.final_config.recount() == eta0.count();
    let long_enough = rec.events >= 10_000_000;

    let ring = build_torus_lattice(1, 16, |_| 256.0).unwrap();
    let kmc16 = Kmc::new(&ring).unwrap();
    let rho = 0.3;
    let runs = 20_000u64;
    let plan = ObservablePlan::new(vec![], vec![1.0]).unwrap();
    let hits: u64 = (0..runs)
        .into_par_iter()
        .map(|k| {
            let key = StreamKey::new(14, 16, k);
            let eta = sample_bernoulli_profile(&ring, |_| rho, key).unwrap();
            kmc16.run(&eta, &plan, key).unwrap().final_config.is_occupied(0) as u64
        })
        .sum();
    let sigma = (runs as f64 * rho * (1.0 - rho)).sqrt();
    let z = (hits as f64 - runs as f64 * rho) / sigma;

    let full = Configuration::full(n);
    let g: Vec<f64> = env.coords().iter().map(|p| (6.0 * p[0]).sin()).collect();
    let obs = Observable::plain("g", g);
    let times: Vec<f64> = (1..=10).map(|k| k as f64 * 1e-3).collect();
    let plan = ObservablePlan::new(vec![obs], times).unwrap();
    let rec_full = kmc.run(&full, &plan, StreamKey::new(15, 0, 0)).unwrap();
    let frozen = rec_full
        .samples
        .iter()
        .all(|s| s[0].plain == rec_full.initial[0].plain)
        && rec_full.final_config == full
        && rec_full.events > 0;

    outcome(
        conserved && long_enough && z.abs() <= 3.0 && frozen,
        format!(
            "{} events, count {} -> {}; Bernoulli({rho}) site-0 z = {z:.3}; full configuration frozen over {} events: {frozen}",
            rec.events,
            eta0.count(),
            rec.final_config.count(),
            rec_full.events
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} {} {name} ({secs:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o, secs));
    };

    run(1, "one-particle oracle equivalence", &mut one_particle);
    run(2, "two-particle brute force", &mut two_particles);
    run(3, "resolvent and corrected-function identities", &mut resolvent_identities);

    let homogeneous = convergence_study(&config("homogeneous_1d.toml")).unwrap();
    let w_measure = convergence_study(&config("w_measure_atom.toml")).unwrap();
    let conductance = convergence_study(&config("random_conductance_1d.toml")).unwrap();
    let gasket = convergence_study(&config("sierpinski.toml")).unwrap();
    let battery = convergence_study(&config("energy_battery.toml")).unwrap();

    run(4, "hydrodynamic convergence, homogeneous 1D", &mut || study_outcome(&homogeneous, "D(128) < 0.05"));
    run(5, "hydrodynamic convergence, W-measure with atom", &mut || study_outcome(&w_measure, "D(128) < 0.08"));
    run(6, "random conductance d=1", &mut || random_conductance(&conductance));
    run(7, "Sierpinski gasket", &mut || study_outcome(&gasket, "D(m=4) < 0.1"));
    run(8, "martingale bound", &mut || martingale(&[&homogeneous, &w_measure, &conductance, &gasket]));
    run(9, "energy functional", &mut || energy(&battery));
    run(10, "Gamma-energy curve", &mut || gamma(&[&homogeneous, &conductance]));
    run(11, "conservation and stationarity", &mut conservation);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
