use cpn_stack::model::HoloSeed;
use cpn_stack::verify::{default_seed_catalog, run_suite, GridSpec, Statistic, SuiteConfig};

fn cfg(threads: usize) -> SuiteConfig {
    SuiteConfig {
        weights_per_point: 10,
        path_samples: 3,
        threads: Some(threads),
        ..SuiteConfig::default()
    }
}

#[test]
fn every_catalog_seed_passes_on_the_default_grid() {
    let config = SuiteConfig {
        weights_per_point: 20,
        ..SuiteConfig::default()
    };
    for seed in default_seed_catalog() {
        let rep = run_suite(&seed, &GridSpec::default(), &config).unwrap();
        assert!(rep.all_pass, "{}", rep.to_table());
        assert_eq!(rep.degenerate_points, 0);
    }
}

#[test]
fn fifty_random_points_on_veronese_3() {
    let grid = GridSpec::Random {
        count: 50,
        extent: 3.0,
        prng_seed: 11,
    };
    let rep = run_suite(&HoloSeed::veronese(3).unwrap(), &grid, &cfg(0)).unwrap();
    assert!(rep.all_pass, "{}", rep.to_table());
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let seed = &default_seed_catalog()[3];
    let grid = GridSpec::Random {
        count: 30,
        extent: 2.5,
        prng_seed: 5,
    };
    let one = run_suite(seed, &grid, &cfg(1)).unwrap().to_json();
    let again = run_suite(seed, &grid, &cfg(1)).unwrap().to_json();
    let four = run_suite(seed, &grid, &cfg(4)).unwrap().to_json();
    assert_eq!(one, again);
    assert_eq!(one, four);
}

#[test]
fn enlarging_the_grid_never_lowers_a_maximum() {
    let seed = &default_seed_catalog()[4];
    let small = GridSpec::Random {
        count: 15,
        extent: 3.0,
        prng_seed: 21,
    };
    let large = GridSpec::Random {
        count: 40,
        extent: 3.0,
        prng_seed: 21,
    };
    let a = run_suite(seed, &small, &cfg(0)).unwrap();
    let b = run_suite(seed, &large, &cfg(0)).unwrap();
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.name, y.name);
        let (vx, vy) = (x.value.unwrap(), y.value.unwrap());
        match x.statistic {
            Statistic::Max => assert!(vy >= vx, "{}: {vx} -> {vy}", x.name),
            Statistic::Min => assert!(vy <= vx, "{}: {vx} -> {vy}", x.name),
            Statistic::Order => {}
        }
    }
}

#[test]
fn report_json_has_stable_top_level_keys() {
    let grid = GridSpec::Cartesian {
        nx: 2,
        ny: 2,
        extent: 1.0,
    };
    let rep = run_suite(
        &HoloSeed::veronese(2).unwrap(),
        &grid,
        &cfg(1).only(["idempotency"]).unwrap(),
    )
    .unwrap();
    let json = rep.to_json();
    let top: Vec<&str> = json
        .lines()
        .filter_map(|l| l.strip_prefix("  \"").and_then(|r| r.split('"').next()))
        .collect();
    assert_eq!(
        top,
        [
            "seed",
            "grid",
            "samples",
            "degenerate_points",
            "base_point",
            "tolerances",
            "weights",
            "checks",
            "all_pass"
        ]
    );
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rec = &v["checks"][0];
    assert_eq!(
        rec["pass"],
        rec["value"].as_f64().unwrap() <= rec["bound"]["limit"].as_f64().unwrap()
    );
}
