//! Great-circle geometry, the longitude/latitude location-error model, and
//! gridded-anomaly interpolation.
//!
//! Gridded climate products report one value per lon/lat cell; assuming a
//! smooth field, the recorded average is realized somewhere *near* the cell
//! center, which casts gridding as a location-error problem. Distances decay
//! along the Earth's surface (haversine great circle, radius 6371 km) and the
//! displacement of site `i` is Gaussian in coordinates with the longitude
//! variance inflated by `1/cos^2(lat)`, so that the great-circle displacement
//! magnitude is approximately `sigma_u * chi_2` regardless of latitude.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimation::{self, FitConfig, ParamBox};
use crate::kernels::{
    build_cov_matrices, ErrorModel, KernelSpec, Locations, McConfig,
};
use crate::kriging;
use crate::linalg::{Cholesky, Mat};
use crate::math;
use crate::posterior::{GpModel, HmcRunConfig, PosteriorSummary};
use crate::rng::Rng;

/// Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Latitude bound beyond which sites are rejected (the longitude error
/// variance blows up at the poles).
pub const POLE_GUARD_DEG: f64 = 89.5;

const DEG: f64 = core::f64::consts::PI / 180.0;

/// A longitude/latitude point in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoPoint {
    /// Longitude in degrees, `[-180, 180]`.
    pub lon: f64,
    /// Latitude in degrees, `[-90, 90]`.
    pub lat: f64,
}

impl GeoPoint {
    /// Construct with bounds checking.
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !(-180.0..=180.0).contains(&lon) || !lon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) || !lat.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        Ok(GeoPoint { lon, lat })
    }
}

/// Great-circle distance in km between two (lon, lat) points in degrees.
pub fn great_circle(a: GeoPoint, b: GeoPoint) -> f64 {
    great_circle_deg(a.lon, a.lat, b.lon, b.lat)
}

/// Haversine great-circle distance (km) on raw degree coordinates.
#[inline]
pub fn great_circle_deg(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let phi1 = lat1 * DEG;
    let phi2 = lat2 * DEG;
    let s_lat = math::sin(0.5 * (phi2 - phi1));
    let s_lon = math::sin(0.5 * (lon2 - lon1) * DEG);
    let h = s_lat * s_lat + math::cos(phi1) * math::cos(phi2) * s_lon * s_lon;
    let q = math::sqrt(h.clamp(0.0, 1.0));
    2.0 * EARTH_RADIUS_KM * math::asin(q)
}

/// Great-circle distance and its gradient with respect to the *first* point's
/// (lon, lat) in degrees. The gradient is zero at coincident points (where
/// the distance is not differentiable).
pub fn great_circle_grad_deg(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> (f64, [f64; 2]) {
    let phi1 = lat1 * DEG;
    let phi2 = lat2 * DEG;
    let dphi_half = 0.5 * (phi2 - phi1);
    let dpsi_half = 0.5 * (lon2 - lon1) * DEG;
    let s_lat = math::sin(dphi_half);
    let s_lon = math::sin(dpsi_half);
    let c1 = math::cos(phi1);
    let c2 = math::cos(phi2);
    let h = (s_lat * s_lat + c1 * c2 * s_lon * s_lon).clamp(0.0, 1.0);
    let q = math::sqrt(h);
    let dist = 2.0 * EARTH_RADIUS_KM * math::asin(q);
    if q < 1e-12 || h >= 1.0 {
        return (dist, [0.0, 0.0]);
    }
    // d dist / dh, then chain rule into radians, then into degrees
    let ddist_dh = EARTH_RADIUS_KM / (q * math::sqrt(1.0 - h));
    let dh_dphi1 = -s_lat * math::cos(dphi_half) - math::sin(phi1) * c2 * s_lon * s_lon;
    let dh_dpsi1 = -c1 * c2 * s_lon * math::cos(dpsi_half);
    (
        dist,
        [ddist_dh * dh_dpsi1 * DEG, ddist_dh * dh_dphi1 * DEG],
    )
}

/// Covariance `[var_lon, var_lat]` (degrees squared) of the location error at
/// latitude `lat_deg` for great-circle error variance `sigma2_u` (km^2):
/// `sigma2_u (180/(pi r))^2 diag(1/cos^2(lat), 1)`.
pub fn geo_error_cov(lat_deg: f64, sigma2_u: f64) -> Result<[f64; 2]> {
    if math::abs(lat_deg) >= POLE_GUARD_DEG {
        return Err(Error::InvalidParameter(format!(
            "latitude {lat_deg} too close to the pole (|lat| >= {POLE_GUARD_DEG})"
        )));
    }
    let base = sigma2_u * (180.0 / (core::f64::consts::PI * EARTH_RADIUS_KM))
        * (180.0 / (core::f64::consts::PI * EARTH_RADIUS_KM));
    let c = math::cos(lat_deg * DEG);
    Ok([base / (c * c), base])
}

/// Wrap a longitude into `[-180, 180)`.
pub fn wrap_lon(lon: f64) -> f64 {
    let mut x = (lon + 180.0) % 360.0;
    if x < 0.0 {
        x += 360.0;
    }
    x - 180.0
}

/// Gridded anomaly records: cell centers, values, optional station counts.
#[derive(Clone, Debug)]
pub struct GeoDataset {
    points: Vec<GeoPoint>,
    values: Vec<f64>,
    counts: Option<Vec<u32>>,
}

impl GeoDataset {
    /// Build a dataset, rejecting duplicate grid centers. The error message
    /// lists the offending record indices (0-based).
    pub fn new(points: Vec<GeoPoint>, values: Vec<f64>, counts: Option<Vec<u32>>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: values.len(),
            });
        }
        if let Some(c) = &counts {
            if c.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: c.len(),
                });
            }
        }
        let mut dup: Vec<String> = Vec::new();
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i].lon.to_bits() == points[j].lon.to_bits()
                    && points[i].lat.to_bits() == points[j].lat.to_bits()
                {
                    dup.push(format!("{i} and {j}"));
                }
            }
        }
        if !dup.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "duplicate grid centers at records {}",
                dup.join(", ")
            )));
        }
        Ok(GeoDataset {
            points,
            values,
            counts,
        })
    }

    /// Cell centers.
    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    /// Anomaly values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Optional station counts.
    pub fn counts(&self) -> Option<&[u32]> {
        self.counts.as_deref()
    }

    /// Number of records.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when the dataset holds no records.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subtract the dataset mean from all values; returns the mean removed.
    pub fn center(&mut self) -> f64 {
        let mean = math::pairwise_mean(&self.values);
        for v in self.values.iter_mut() {
            *v -= mean;
        }
        mean
    }

    /// Centers as a `Locations` set (lon, lat columns).
    pub fn locations(&self) -> Locations {
        let mut flat = Vec::with_capacity(self.points.len() * 2);
        for p in &self.points {
            flat.push(p.lon);
            flat.push(p.lat);
        }
        Locations::from_flat(2, flat)
    }
}

/// Configuration of the synthetic gridded-anomaly generator.
#[derive(Clone, Debug)]
pub struct SyntheticGeoConfig {
    /// Kernel used to draw the latent field.
    pub spec: KernelSpec,
    /// Great-circle error variance (km^2) applied to observation sites.
    pub sigma2_u: f64,
    /// Grid step in degrees (5 matches the usual anomaly products).
    pub grid_step: f64,
    /// Latitude range (degrees) of generated cell centers.
    pub lat_range: (f64, f64),
    /// Longitude range (degrees) of generated cell centers.
    pub lon_range: (f64, f64),
    /// Fraction of cells observed; the rest become interpolation targets.
    pub observed_fraction: f64,
}

impl Default for SyntheticGeoConfig {
    fn default() -> Self {
        SyntheticGeoConfig {
            spec: KernelSpec::exponential_geodesic(1.0, 4e-4, 0.05),
            sigma2_u: 7500.0,
            grid_step: 5.0,
            lat_range: (2.5, 87.5),
            lon_range: (-177.5, 180.0),
            observed_fraction: 0.85,
        }
    }
}

/// A synthetic dataset plus the ground truth needed for scoring.
#[derive(Clone, Debug)]
pub struct SyntheticGeo {
    /// Observed records (`y` at nominal grid centers).
    pub data: GeoDataset,
    /// Unobserved grid centers held out as targets.
    pub targets: Vec<GeoPoint>,
    /// Latent field values at the targets.
    pub x_targets: Vec<f64>,
    /// True displacements (degrees, lon/lat per observed site).
    pub u: Vec<[f64; 2]>,
}

/// Draw a synthetic gridded dataset: sample displacement errors, then the
/// latent field jointly at the displaced observation sites and the target
/// centers, and record `y_i = x(s_i + u_i)` against the *nominal* centers.
pub fn synthetic_dataset(cfg: &SyntheticGeoConfig, seed: u64) -> Result<SyntheticGeo> {
    cfg.spec.validate()?;
    if !(0.0..=1.0).contains(&cfg.observed_fraction) {
        return Err(Error::InvalidParameter(
            "observed_fraction must lie in [0, 1]".into(),
        ));
    }
    let mut centers = Vec::new();
    let mut lat = cfg.lat_range.0;
    while lat <= cfg.lat_range.1 + 1e-9 {
        if math::abs(lat) < POLE_GUARD_DEG {
            let mut lon = cfg.lon_range.0;
            while lon <= cfg.lon_range.1 + 1e-9 {
                centers.push(GeoPoint {
                    lon: wrap_lon(lon),
                    lat,
                });
                lon += cfg.grid_step;
            }
        }
        lat += cfg.grid_step;
    }
    let mut rng = Rng::substream(seed, &[0x9e0]);
    let mut idx: Vec<usize> = (0..centers.len()).collect();
    rng.shuffle(&mut idx);
    let n_obs = ((centers.len() as f64) * cfg.observed_fraction) as usize;
    let (obs_idx, tgt_idx) = idx.split_at(n_obs.clamp(1, centers.len().saturating_sub(1)));

    let err = ErrorModel::geodesic_gaussian(cfg.sigma2_u);
    let mut u = Vec::with_capacity(obs_idx.len());
    let mut true_pts = Locations::new(2);
    for &i in obs_idx {
        let site = [centers[i].lon, centers[i].lat];
        let mut du = [0.0; 2];
        err.draw(&site, &mut rng, &mut du)?;
        u.push(du);
        true_pts.push(&[site[0] + du[0], site[1] + du[1]]);
    }
    let mut all_pts = true_pts.clone();
    for &i in tgt_idx {
        all_pts.push(&[centers[i].lon, centers[i].lat]);
    }
    // joint draw of x at displaced sites and target centers
    let total = all_pts.len();
    let mut cov = Mat::zeros(total, total);
    for a in 0..total {
        for b in a..total {
            let v = crate::kernels::eval_c(&cfg.spec, all_pts.point(a), all_pts.point(b))?;
            cov.set(a, b, v);
            cov.set(b, a, v);
        }
    }
    let ch = Cholesky::factor(&cov)?;
    let mut z = vec![0.0; total];
    rng.normal_fill(&mut z);
    let l = ch.lower();
    let mut x = vec![0.0; total];
    for i in 0..total {
        x[i] = crate::linalg::dense::dot(&l[i * total..i * total + i + 1], &z[..i + 1]);
    }

    let data = GeoDataset::new(
        obs_idx.iter().map(|&i| centers[i]).collect(),
        x[..obs_idx.len()].to_vec(),
        None,
    )?;
    Ok(SyntheticGeo {
        data,
        targets: tgt_idx.iter().map(|&i| centers[i]).collect(),
        x_targets: x[obs_idx.len()..].to_vec(),
        u,
    })
}

/// Interpolation mode for the geostatistical pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeoMode {
    /// Kriging with the induced kernel (pseudo-likelihood fit, exact
    /// error-CDF intervals).
    Kale,
    /// Kriging ignoring location errors (maximum likelihood fit at
    /// `sigma2_u = 0`, model-implied normal intervals).
    Kile,
    /// Joint Hamiltonian Monte Carlo over displacements and parameters.
    Hmc,
}

impl GeoMode {
    /// Lower-case stable name.
    pub fn name(&self) -> &'static str {
        match self {
            GeoMode::Kale => "kale",
            GeoMode::Kile => "kile",
            GeoMode::Hmc => "hmc",
        }
    }
}

/// Configuration of [`geo_interpolate`].
#[derive(Clone, Debug)]
pub struct GeoConfig {
    /// Monte Carlo draws per induced-kernel matrix entry.
    pub kernel_n_mc: usize,
    /// Strata used to compress per-pair distance draws during fitting.
    pub fit_atoms: usize,
    /// Box constraints for the fitted parameters.
    pub param_box: ParamBox,
    /// Optimizer restarts.
    pub n_restarts: usize,
    /// Draws of the displacement vector for interval CDFs.
    pub cdf_n_mc: usize,
    /// Interval level `1 - alpha`.
    pub alpha: f64,
    /// HMC settings (HMC mode only).
    pub hmc: HmcRunConfig,
    /// Master seed.
    pub seed: u64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        GeoConfig {
            kernel_n_mc: crate::kernels::DEFAULT_KERNEL_MC,
            fit_atoms: 64,
            param_box: ParamBox::geodesic_default(),
            n_restarts: 8,
            cdf_n_mc: 2000,
            alpha: 0.05,
            hmc: HmcRunConfig::default(),
            seed: 0,
        }
    }
}

/// One interpolated target.
#[derive(Clone, Copy, Debug)]
pub struct GeoPrediction {
    /// Target cell center.
    pub point: GeoPoint,
    /// Point prediction.
    pub mean: f64,
    /// Prediction variance (MSE for the Kriging modes, posterior predictive
    /// variance for HMC).
    pub var: f64,
    /// Lower interval bound at level `1 - alpha`.
    pub lo: f64,
    /// Upper interval bound.
    pub hi: f64,
}

/// Fitted/posterior parameter summary attached to a geo run.
#[derive(Clone, Debug)]
pub struct GeoParamSummary {
    /// Signal variance estimate (posterior mean for HMC).
    pub tau2: f64,
    /// Inverse length-scale estimate.
    pub beta: f64,
    /// Nugget estimate.
    pub sigma2_x: f64,
    /// Mode that produced the summary.
    pub mode: GeoMode,
    /// Error variance held fixed during the run.
    pub sigma2_u: f64,
}

/// Full result of a geo interpolation run.
#[derive(Clone, Debug)]
pub struct GeoResult {
    /// Per-target predictions.
    pub predictions: Vec<GeoPrediction>,
    /// Parameter summary.
    pub params: GeoParamSummary,
    /// Posterior diagnostics (HMC mode only).
    pub hmc_summary: Option<PosteriorSummary>,
}

/// Interpolate gridded anomalies at `targets` with a fixed error variance
/// `sigma2_u`, fitting (or sampling) the geodesic-exponential kernel
/// parameters from the data.
pub fn geo_interpolate(
    data: &GeoDataset,
    targets: &[GeoPoint],
    sigma2_u: f64,
    mode: GeoMode,
    cfg: &GeoConfig,
) -> Result<GeoResult> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    for p in data.points().iter().chain(targets) {
        if math::abs(p.lat) >= POLE_GUARD_DEG {
            return Err(Error::InvalidParameter(format!(
                "site ({}, {}) violates the pole guard",
                p.lon, p.lat
            )));
        }
    }
    let obs = data.locations();
    let y = data.values().to_vec();
    let mut tgt = Locations::new(2);
    for p in targets {
        tgt.push(&[p.lon, p.lat]);
    }
    let err = if sigma2_u > 0.0 {
        ErrorModel::geodesic_gaussian(sigma2_u)
    } else {
        ErrorModel::none(2)
    };

    match mode {
        GeoMode::Kale | GeoMode::Kile => {
            // KILE is the analyst who ignores errors: fit and predict at
            // sigma2_u = 0 regardless of the error model supplied.
            let fit_err = if mode == GeoMode::Kile {
                ErrorModel::none(2)
            } else {
                err
            };
            let fit_cfg = FitConfig {
                n_restarts: cfg.n_restarts,
                kernel_n_mc: cfg.kernel_n_mc,
                fit_atoms: cfg.fit_atoms,
                seed: crate::rng::derive_seed(cfg.seed, &[1]),
                ..FitConfig::default()
            };
            let fit = estimation::fit_mple(
                crate::kernels::KernelFamily::ExponentialGeodesic,
                &fit_err,
                &obs,
                &y,
                &cfg.param_box,
                &fit_cfg,
            )?;
            let spec = fit.spec();
            let mc = McConfig {
                n_mc: cfg.kernel_n_mc,
                seed: crate::rng::derive_seed(cfg.seed, &[2]),
            };
            let cov = build_cov_matrices(&spec, &fit_err, &obs, &tgt, &mc)?;
            let mut predictions = Vec::with_capacity(targets.len());
            if mode == GeoMode::Kile {
                let res = kriging::kile_predict(&cov, &y, Some(cfg.alpha))?;
                for (j, p) in targets.iter().enumerate() {
                    let (lo, hi) = res.interval.as_ref().unwrap()[j];
                    predictions.push(GeoPrediction {
                        point: *p,
                        mean: res.mean[j],
                        var: res.mse[j],
                        lo,
                        hi,
                    });
                }
            } else {
                let res = kriging::kale_predict(&cov, &y)?;
                let cdfs = kriging::kale_error_cdfs(
                    &spec,
                    &fit_err,
                    &obs,
                    &tgt,
                    cfg.cdf_n_mc,
                    crate::rng::derive_seed(cfg.seed, &[3]),
                    None,
                )?;
                for (j, p) in targets.iter().enumerate() {
                    let (lo, hi) = kriging::kale_interval(&cdfs[j], res.mean[j], cfg.alpha)?;
                    predictions.push(GeoPrediction {
                        point: *p,
                        mean: res.mean[j],
                        var: res.mse[j],
                        lo,
                        hi,
                    });
                }
            }
            Ok(GeoResult {
                predictions,
                params: GeoParamSummary {
                    tau2: spec.tau2,
                    beta: spec.beta,
                    sigma2_x: spec.sigma2_x,
                    mode,
                    sigma2_u: if mode == GeoMode::Kile { 0.0 } else { sigma2_u },
                },
                hmc_summary: None,
            })
        }
        GeoMode::Hmc => {
            let model = GpModel::with_sampled_params(
                crate::kernels::KernelFamily::ExponentialGeodesic,
                err,
                obs,
                y,
                tgt,
                cfg.param_box.clone(),
            )?;
            let summary = crate::posterior::run_hmc(&model, &cfg.hmc)?;
            let mut predictions = Vec::with_capacity(targets.len());
            for (j, p) in targets.iter().enumerate() {
                predictions.push(GeoPrediction {
                    point: *p,
                    mean: summary.predictive_mean[j],
                    var: summary.predictive_var[j],
                    lo: summary.predictive_interval[j].0,
                    hi: summary.predictive_interval[j].1,
                });
            }
            let post_mean = |name: &str| summary.param_mean(name).unwrap_or(f64::NAN);
            Ok(GeoResult {
                params: GeoParamSummary {
                    tau2: post_mean("tau2"),
                    beta: post_mean("beta"),
                    sigma2_x: post_mean("sigma2_x"),
                    mode,
                    sigma2_u,
                },
                predictions,
                hmc_summary: Some(summary),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn great_circle_reference_points() {
        let o = GeoPoint { lon: 0.0, lat: 0.0 };
        assert_eq!(great_circle(o, o), 0.0);
        let pole = GeoPoint { lon: 0.0, lat: 90.0 };
        let quarter = core::f64::consts::PI * EARTH_RADIUS_KM / 2.0;
        assert!((great_circle(o, pole) - quarter).abs() < 1e-6);
        let anti = GeoPoint {
            lon: 180.0,
            lat: 0.0,
        };
        let half = core::f64::consts::PI * EARTH_RADIUS_KM;
        assert!((great_circle(o, anti) - half).abs() < 1e-6);
    }

    #[test]
    fn great_circle_symmetric_and_wrap_invariant() {
        let a = GeoPoint {
            lon: 12.0,
            lat: 47.0,
        };
        let b = GeoPoint {
            lon: -100.0,
            lat: -33.0,
        };
        assert!((great_circle(a, b) - great_circle(b, a)).abs() < 1e-12);
        let d1 = great_circle_deg(12.0, 47.0, -100.0, -33.0);
        let d2 = great_circle_deg(12.0 + 360.0, 47.0, -100.0, -33.0);
        assert!((d1 - d2).abs() < 1e-9);
    }

    #[test]
    fn triangle_inequality_random_triples() {
        let mut rng = Rng::from_seed(99);
        for _ in 0..200 {
            let mut pts = [[0.0; 2]; 3];
            for p in pts.iter_mut() {
                p[0] = rng.uniform(-180.0, 180.0);
                p[1] = rng.uniform(-89.0, 89.0);
            }
            let d01 = great_circle_deg(pts[0][0], pts[0][1], pts[1][0], pts[1][1]);
            let d12 = great_circle_deg(pts[1][0], pts[1][1], pts[2][0], pts[2][1]);
            let d02 = great_circle_deg(pts[0][0], pts[0][1], pts[2][0], pts[2][1]);
            assert!(d02 <= d01 + d12 + 1e-9);
        }
    }

    #[test]
    fn great_circle_gradient_matches_finite_differences() {
        let mut rng = Rng::from_seed(5);
        for _ in 0..50 {
            let lon1 = rng.uniform(-170.0, 170.0);
            let lat1 = rng.uniform(-80.0, 80.0);
            let lon2 = lon1 + rng.uniform(-20.0, 20.0);
            let lat2 = lat1 + rng.uniform(-20.0, 20.0);
            let (_, g) = great_circle_grad_deg(lon1, lat1, lon2, lat2);
            let h = 1e-6;
            let flon = (great_circle_deg(lon1 + h, lat1, lon2, lat2)
                - great_circle_deg(lon1 - h, lat1, lon2, lat2))
                / (2.0 * h);
            let flat = (great_circle_deg(lon1, lat1 + h, lon2, lat2)
                - great_circle_deg(lon1, lat1 - h, lon2, lat2))
                / (2.0 * h);
            assert!((g[0] - flon).abs() < 1e-4 * (1.0 + flon.abs()), "{} {}", g[0], flon);
            assert!((g[1] - flat).abs() < 1e-4 * (1.0 + flat.abs()), "{} {}", g[1], flat);
        }
    }

    #[test]
    fn error_cov_equator_isotropy_and_latitude_scaling() {
        let s2 = 7500.0;
        let [lon_v, lat_v] = geo_error_cov(0.0, s2).unwrap();
        assert!((lon_v - lat_v).abs() < 1e-12);
        let base = s2 * (180.0 / (core::f64::consts::PI * EARTH_RADIUS_KM)).powi(2);
        assert!((lat_v - base).abs() < 1e-12);
        let [lon60, lat60] = geo_error_cov(60.0, s2).unwrap();
        assert!((lon60 / lat60 - 4.0).abs() < 1e-9);
        assert!(geo_error_cov(89.6, s2).is_err());
    }

    #[test]
    fn median_displacement_is_sigma_u_chi_median() {
        // sigma2_u = 7500: median great-circle displacement ~ 102 km
        let err = ErrorModel::geodesic_gaussian(7500.0);
        let mut rng = Rng::from_seed(42);
        let site = [30.0, 45.0];
        let n = 100_000;
        let mut d = Vec::with_capacity(n);
        let mut u = [0.0; 2];
        for _ in 0..n {
            err.draw(&site, &mut rng, &mut u).unwrap();
            d.push(great_circle_deg(
                site[0],
                site[1],
                site[0] + u[0],
                site[1] + u[1],
            ));
        }
        let med = math::quantile(&d, 0.5);
        let expect = (7500.0f64).sqrt() * (2.0 * (2.0f64).ln()).sqrt();
        assert!((med - expect).abs() < 1.0, "median {med} expect {expect}");
        assert!((expect - 101.966).abs() < 0.01);
    }

    #[test]
    fn wrap_lon_range() {
        assert_eq!(wrap_lon(370.0), 10.0);
        assert_eq!(wrap_lon(-190.0), 170.0);
        assert_eq!(wrap_lon(180.0), -180.0);
    }

    #[test]
    fn dataset_rejects_duplicates() {
        let p = GeoPoint {
            lon: 10.0,
            lat: 20.0,
        };
        let e = GeoDataset::new(vec![p, p], vec![1.0, 2.0], None).unwrap_err();
        match e {
            Error::InvalidParameter(msg) => assert!(msg.contains("duplicate")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn centering_removes_mean() {
        let pts = vec![
            GeoPoint { lon: 0.0, lat: 0.0 },
            GeoPoint { lon: 5.0, lat: 0.0 },
        ];
        let mut ds = GeoDataset::new(pts, vec![1.0, 3.0], None).unwrap();
        let m = ds.center();
        assert_eq!(m, 2.0);
        assert_eq!(ds.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn synthetic_dataset_shapes() {
        let cfg = SyntheticGeoConfig {
            lat_range: (20.0, 60.0),
            lon_range: (0.0, 60.0),
            grid_step: 10.0,
            observed_fraction: 0.8,
            ..SyntheticGeoConfig::default()
        };
        let s = synthetic_dataset(&cfg, 7).unwrap();
        assert!(!s.data.is_empty());
        assert_eq!(s.targets.len(), s.x_targets.len());
        assert_eq!(s.u.len(), s.data.len());
        // reproducible
        let s2 = synthetic_dataset(&cfg, 7).unwrap();
        assert_eq!(s.data.values(), s2.data.values());
    }
}
