use hydrolim::dynamics::{martingale_series, Configuration, Kmc, Observable, ObservablePlan};
use hydrolim::environment::{build_torus_lattice, Edge, Environment};
use hydrolim::harness::{run_ensembles, StudyConfig};
use hydrolim::linalg::CgOptions;
use hydrolim::operator::{assemble_generator, corrected_test_function, LimitOperator};
use hydrolim::rng::StreamKey;
use hydrolim::testfn::TestFunction;

fn cfg(extra: &[&str]) -> StudyConfig {
    let mut sets = vec![
        "family=torus-lattice".to_string(),
        "n_list=[8, 16]".to_string(),
        "seeds=30".to_string(),
    ];
    sets.extend(extra.iter().map(|s| s.to_string()));
    StudyConfig::from_toml_str("", &sets).unwrap()
}

#[test]
fn full_profile_has_no_fluctuation() {
    let ens = run_ensembles(&cfg(&["u0=\"const:1\""])).unwrap();
    for e in &ens {
        for o in &e.outcomes {
            assert!(o.deviation.iter().all(|d| d.abs() < 1e-10), "{:?}", o.deviation);
            assert!(o.martingale.iter().all(|m| m.abs() < 1e-10), "{:?}", o.martingale);
        }
    }
}

#[test]
fn empty_profile_energy_is_minus_dirichlet_term() {
    let c = cfg(&["u0=\"const:0\""]);
    let ens = run_ensembles(&c).unwrap();
    for e in &ens {
        for o in &e.outcomes {
            for (v, cf) in o.energy.iter().zip(&e.level.corrected) {
                let expected = -c.horizon * cf.energy;
                assert!(expected < 0.0);
                assert!((v - expected).abs() < 1e-12 * expected.abs(), "{v} vs {expected}");
            }
        }
    }
}

#[test]
fn frozen_environment_keeps_configuration() {
    let coords = vec![[0.0, 0.0], [0.5, 0.0]];
    let env = Environment::explicit(1.0, coords, vec![Edge { i: 0, j: 1, rate: 0.0 }]).unwrap();
    let kmc = Kmc::new(&env).unwrap();
    let eta0 = Configuration::from_sites(2, &[0]);
    let plan = ObservablePlan::new(vec![], vec![1.0, 10.0]).unwrap();
    let rec = kmc.run(&eta0, &plan, StreamKey::new(1, 0, 0)).unwrap();
    assert_eq!(rec.final_config, eta0);
    assert_eq!(rec.events, 0);
}

#[test]
fn corrected_martingale_starts_at_zero() {
    let n = 32;
    let env = build_torus_lattice(1, n, |_| (n * n) as f64).unwrap();
    let gen = assemble_generator(&env);
    let cf = corrected_test_function(
        &env,
        &gen,
        &TestFunction::Cosine { k: 1, axis: 0 },
        1.0,
        &LimitOperator::isotropic(1.0),
        CgOptions::default(),
    )
    .unwrap();
    let kmc = Kmc::new(&env).unwrap();
    let eta0 = Configuration::from_sites(n, &(0..n / 2).collect::<Vec<_>>());
    let plan = ObservablePlan::new(vec![Observable::from_corrected(&cf)], vec![0.0, 0.01, 0.02]).unwrap();
    let rec = kmc.run(&eta0, &plan, StreamKey::new(2, n as u64, 0)).unwrap();
    let series = martingale_series(&rec, &cf).unwrap();
    assert_eq!(series.values[0], 0.0);
    assert!(series.values.iter().all(|v| v.is_finite()));
    assert!(series.bound(0.02) > 0.0);
}
