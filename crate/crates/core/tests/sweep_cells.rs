//! Cell-level simulation checks that need replication but not the full
//! parameter sweep.

use geokrige_core::simstudy::{
    make_design, run_cell, CellRunConfig, Method, SweepCell,
};

#[test]
fn kale_intervals_calibrate_kile_intervals_collapse() {
    // known parameters, 100 replicates, Kriging methods only (fast): the
    // exact error-CDF intervals cover at the nominal rate while the
    // ignoring-errors intervals undercover badly
    let cell = SweepCell {
        beta: 0.1,
        sigma2_x: 0.0001,
        sigma2_u: 1.0,
        params_known: true,
        n_reps: 100,
    };
    let design = make_design(31);
    let cfg = CellRunConfig {
        methods: vec![Method::Kale, Method::Kile],
        seed: 14,
        ..CellRunConfig::default()
    };
    let scores = run_cell(&cell, &design, &cfg).unwrap();
    let kale_cov = scores.coverage[0];
    let kile_cov = scores.coverage[1];
    assert!(
        (kale_cov - 0.95).abs() <= 0.02,
        "KALE coverage {kale_cov} outside 0.95 +/- 0.02"
    );
    assert!(kile_cov <= 0.20, "KILE coverage {kile_cov} not collapsed");
    assert!(scores.rmse[0] <= scores.rmse[1], "KALE must not lose to KILE");
    assert_eq!(scores.n_fail, 0);
}

#[test]
fn kale_intervals_calibrate_with_large_nugget() {
    // the nugget-inclusive target convention keeps coverage exact even when
    // sigma2_x dominates
    let cell = SweepCell {
        beta: 0.5,
        sigma2_x: 1.0,
        sigma2_u: 0.1,
        params_known: true,
        n_reps: 100,
    };
    let design = make_design(32);
    let cfg = CellRunConfig {
        methods: vec![Method::Kale],
        seed: 15,
        ..CellRunConfig::default()
    };
    let scores = run_cell(&cell, &design, &cfg).unwrap();
    assert!(
        (scores.coverage[0] - 0.95).abs() <= 0.02,
        "KALE coverage {} at sigma2_x = 1",
        scores.coverage[0]
    );
}

#[test]
fn estimated_parameter_cell_runs() {
    // the plug-in path: per-replicate pseudo-likelihood fits feed the
    // Kriging equations; the sampled-parameter HMC joins in
    let cell = SweepCell {
        beta: 0.5,
        sigma2_x: 0.01,
        sigma2_u: 0.1,
        params_known: false,
        n_reps: 2,
    };
    let design = make_design(33);
    let mut cfg = CellRunConfig {
        methods: vec![Method::Kale, Method::Kile, Method::Hmc],
        n_chains: 2,
        n_warmup: 150,
        n_draws: 300,
        leapfrog_steps: 16,
        seed: 16,
        ..CellRunConfig::default()
    };
    cfg.fit.n_restarts = 4;
    let scores = run_cell(&cell, &design, &cfg).unwrap();
    assert_eq!(scores.n_fail, 0);
    for k in 0..3 {
        assert!(scores.rmse[k].is_finite() && scores.rmse[k] >= 0.0);
        assert!((0.0..=1.0).contains(&scores.coverage[k]));
    }
}
