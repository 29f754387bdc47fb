//! Geodesic kernel and pipeline properties.

use geokrige_core::geo::{
    geo_interpolate, synthetic_dataset, GeoConfig, GeoMode, SyntheticGeoConfig,
};
use geokrige_core::kernels::{eval_k_mc, ErrorModel, KernelSpec, Locations};
use geokrige_core::linalg::{min_eigenvalue, Mat};
use geokrige_core::rng::Rng;

#[test]
fn geodesic_mc_kernel_matrices_are_psd() {
    // random subsets of a 5-degree grid, Monte Carlo induced kernel
    let spec = KernelSpec::exponential_geodesic(1.0, 3e-4, 0.05);
    let err = ErrorModel::geodesic_gaussian(7500.0);
    let mut rng = Rng::from_seed(2024);
    for trial in 0..20 {
        let n = 6;
        let mut pts = Vec::new();
        while pts.len() < n {
            let lon = -180.0 + 5.0 * rng.next_below(72) as f64 + 2.5;
            let lat = -85.0 + 5.0 * rng.next_below(34) as f64 + 2.5;
            if !pts.iter().any(|&(a, b)| (a, b) == (lon, lat)) {
                pts.push((lon, lat));
            }
        }
        let mut k = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = eval_k_mc(
                    &spec,
                    &err,
                    &[pts[i].0, pts[i].1],
                    &[pts[j].0, pts[j].1],
                    2048,
                    geokrige_core::rng::derive_seed(77, &[trial, i as u64, j as u64]),
                )
                .unwrap();
                k.set(i, j, v);
                k.set(j, i, v);
            }
        }
        let min_eig = min_eigenvalue(&k);
        assert!(
            min_eig >= -1e-8 * spec.tau2,
            "trial {trial}: min eigenvalue {min_eig}"
        );
    }
}

#[test]
fn induced_correlation_rises_with_latitude() {
    // adjacent 5-degree centers are physically closer at high latitude, so
    // the induced kernel between them grows with |lat|
    let spec = KernelSpec::exponential_geodesic(1.0, 3e-4, 0.0);
    let err = ErrorModel::geodesic_gaussian(7500.0);
    let mut last = -1.0;
    for lat in [0.0, 20.0, 40.0, 60.0, 75.0] {
        let k = eval_k_mc(&spec, &err, &[0.0, lat], &[5.0, lat], 20_000, 5).unwrap();
        assert!(
            k > last,
            "induced kernel not increasing at lat {lat}: {k} <= {last}"
        );
        last = k;
    }
}

#[test]
fn zero_error_kale_equals_kile_pipeline() {
    let cfg = SyntheticGeoConfig {
        lat_range: (20.0, 60.0),
        lon_range: (0.0, 60.0),
        grid_step: 10.0,
        sigma2_u: 7500.0,
        observed_fraction: 0.8,
        ..SyntheticGeoConfig::default()
    };
    let synth = synthetic_dataset(&cfg, 11).unwrap();
    let gcfg = GeoConfig {
        n_restarts: 4,
        cdf_n_mc: 400,
        seed: 5,
        ..GeoConfig::default()
    };
    // with sigma2_u = 0 both modes fit and predict identically
    let kale = geo_interpolate(&synth.data, &synth.targets, 0.0, GeoMode::Kale, &gcfg).unwrap();
    let kile = geo_interpolate(&synth.data, &synth.targets, 0.0, GeoMode::Kile, &gcfg).unwrap();
    assert_eq!(kale.params.tau2, kile.params.tau2);
    assert_eq!(kale.params.beta, kile.params.beta);
    for (a, b) in kale.predictions.iter().zip(&kile.predictions) {
        assert!((a.mean - b.mean).abs() < 1e-9);
        assert!((a.var - b.var).abs() < 1e-9);
    }
}

#[test]
fn pipeline_smoke_all_modes() {
    let cfg = SyntheticGeoConfig {
        lat_range: (20.0, 50.0),
        lon_range: (0.0, 40.0),
        grid_step: 10.0,
        observed_fraction: 0.8,
        ..SyntheticGeoConfig::default()
    };
    let synth = synthetic_dataset(&cfg, 3).unwrap();
    let mut gcfg = GeoConfig {
        n_restarts: 3,
        cdf_n_mc: 200,
        kernel_n_mc: 1024,
        seed: 6,
        ..GeoConfig::default()
    };
    gcfg.hmc.hmc.n_chains = 2;
    gcfg.hmc.hmc.n_warmup = 150;
    gcfg.hmc.hmc.n_draws = 200;
    for mode in [GeoMode::Kale, GeoMode::Kile, GeoMode::Hmc] {
        let res = geo_interpolate(&synth.data, &synth.targets, 7500.0, mode, &gcfg).unwrap();
        assert_eq!(res.predictions.len(), synth.targets.len());
        for p in &res.predictions {
            assert!(p.mean.is_finite());
            assert!(p.var >= 0.0);
            assert!(p.lo <= p.mean + 1e-9 && p.mean - 1e-9 <= p.hi, "interval sane");
        }
        assert!(res.params.tau2 > 0.0 && res.params.beta > 0.0);
    }
}

#[test]
fn locations_survive_error_draws() {
    // displacements stay physical away from the poles and wrap in longitude
    let err = ErrorModel::geodesic_gaussian(7500.0);
    let mut rng = Rng::from_seed(1);
    let site = [179.5, 80.0];
    let mut u = [0.0; 2];
    for _ in 0..2000 {
        err.draw(&site, &mut rng, &mut u).unwrap();
        let lat = site[1] + u[1];
        assert!(lat < 90.0 && lat > 70.0);
        let lon = geokrige_core::geo::wrap_lon(site[0] + u[0]);
        assert!((-180.0..180.0).contains(&lon));
    }
}

#[test]
fn synthetic_respects_pole_guard() {
    let cfg = SyntheticGeoConfig {
        lat_range: (80.0, 95.0),
        lon_range: (0.0, 20.0),
        grid_step: 5.0,
        ..SyntheticGeoConfig::default()
    };
    let synth = synthetic_dataset(&cfg, 2).unwrap();
    for p in synth.data.points() {
        assert!(p.lat.abs() < geokrige_core::geo::POLE_GUARD_DEG);
    }
}

#[test]
fn locations_helper_shapes() {
    let mut loc = Locations::new(2);
    loc.push(&[1.0, 2.0]);
    let disp = loc.displaced(&[0.5, -0.5]);
    assert_eq!(disp.point(0), &[1.5, 1.5]);
}
