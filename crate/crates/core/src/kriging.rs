//! KALE and KILE point prediction, exact mean squared errors, and exact
//! interval prediction for the location-error regime.
//!
//! KALE (Kriging adjusting for location error) applies the induced kernel:
//! `x_hat(s*) = K*' K^{-1} y`. KILE (Kriging ignoring location errors)
//! applies the base kernel to the corrupted data: `x_hat(s*) = C*' C^{-1} y`.
//! KALE is the best linear unbiased predictor of `x(s*)` from `y`, so its MSE
//! never exceeds KILE's; the KILE MSE is in fact unbounded in any single
//! observation location, which the tests exercise directly.
//!
//! Prediction errors are non-Gaussian mixtures, so intervals come from the
//! exact error CDF
//!
//! ```text
//! P(x(s*) - x_hat_KALE(s*) < z) = E[ Phi( z / sqrt(V(u)) ) ],
//! V(u) = sigma^2 + gamma' C(s+u, s+u) gamma - 2 gamma' C(s+u, s*),
//! gamma = K^{-1} K*,   sigma^2 = V[x(s*)],
//! ```
//!
//! evaluated by Monte Carlo with one shared set of displacement draws across
//! all quantiles `z`, which makes the estimated CDF exactly non-decreasing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{self, CovMatrices, ErrorModel, KernelSpec, Locations};
use crate::linalg::{Cholesky, Mat};
use crate::math;
use crate::rng::Rng;

/// Which Kriging variant produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrigingMethod {
    /// Kriging adjusting for location error.
    Kale,
    /// Kriging ignoring location errors.
    Kile,
}

/// Point predictions, exact MSEs, and optional intervals for a target set.
#[derive(Clone, Debug)]
pub struct KrigingResult {
    /// Variant used.
    pub method: KrigingMethod,
    /// `n x m` prediction weights (one column per target).
    pub weights: Mat,
    /// Predicted means.
    pub mean: Vec<f64>,
    /// Exact per-target MSE under the supplied error model.
    pub mse: Vec<f64>,
    /// Optional `(lo, hi)` intervals at the level requested.
    pub interval: Option<Vec<(f64, f64)>>,
}

/// KALE prediction: weights `gamma = K^{-1} K*`, mean `gamma' y`, and MSE
/// `c(s*,s*) - 2 gamma' k* + gamma' K gamma` per target.
pub fn kale_predict(cov: &CovMatrices, y: &[f64]) -> Result<KrigingResult> {
    predict(cov, y, KrigingMethod::Kale, None)
}

/// KILE prediction with the true MSE of the ignoring-errors estimator,
/// `V[x(s*)] - 2 w' k* + w' K w` for `w = C^{-1} c*`.
///
/// When `interval_alpha` is given, intervals are the ones an analyst who
/// ignores location errors would report: `mean ± z_{1-a/2}` times the square
/// root of the *model-implied* variance `c(s*,s*) - c*' C^{-1} c*`. Their
/// severe undercoverage under real location errors is the point.
pub fn kile_predict(
    cov: &CovMatrices,
    y: &[f64],
    interval_alpha: Option<f64>,
) -> Result<KrigingResult> {
    predict(cov, y, KrigingMethod::Kile, interval_alpha)
}

fn predict(
    cov: &CovMatrices,
    y: &[f64],
    method: KrigingMethod,
    interval_alpha: Option<f64>,
) -> Result<KrigingResult> {
    let n = cov.k.rows();
    let m = cov.kstar.cols();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let (gram, cross) = match method {
        KrigingMethod::Kale => (&cov.k, &cov.kstar),
        KrigingMethod::Kile => (&cov.c, &cov.cstar),
    };
    let ch = Cholesky::factor(gram)?;
    let weights = ch.solve_mat(cross);
    let mut mean = Vec::with_capacity(m);
    let mut mse = Vec::with_capacity(m);
    let mut col = vec![0.0; n];
    let mut kcol = vec![0.0; n];
    for j in 0..m {
        for i in 0..n {
            col[i] = weights.get(i, j);
        }
        mean.push(crate::linalg::dense::dot(&col, y));
        // true MSE always uses the induced moments K, K*
        for i in 0..n {
            kcol[i] = crate::linalg::dense::dot(cov.k.row(i), &col);
        }
        let quad = crate::linalg::dense::dot(&col, &kcol);
        let mut cross_term = 0.0;
        for i in 0..n {
            cross_term += col[i] * cov.kstar.get(i, j);
        }
        let v = cov.c_star_star[j] - 2.0 * cross_term + quad;
        mse.push(v.max(0.0));
    }
    let interval = match interval_alpha {
        None => None,
        Some(alpha) => {
            if !(0.0 < alpha && alpha < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "alpha must lie in (0, 1), got {alpha}"
                )));
            }
            let z = math::normal_quantile(1.0 - 0.5 * alpha);
            let mut iv = Vec::with_capacity(m);
            for j in 0..m {
                // model-implied (naive) conditional variance
                let mut dot = 0.0;
                for i in 0..n {
                    dot += weights.get(i, j) * cov.cstar.get(i, j);
                }
                let naive = (cov.c_star_star[j] - dot).max(0.0);
                let half = z * math::sqrt(naive);
                iv.push((mean[j] - half, mean[j] + half));
            }
            Some(iv)
        }
    };
    Ok(KrigingResult {
        method,
        weights,
        mean,
        mse,
        interval,
    })
}

/// Monte Carlo estimate of the KALE prediction-error CDF on a quantile grid.
#[derive(Clone, Debug)]
pub struct ErrorCdf {
    /// Ascending quantile grid.
    pub z: Vec<f64>,
    /// CDF values on the grid; exactly non-decreasing.
    pub f: Vec<f64>,
    /// Displacement draws used.
    pub n_mc: usize,
    /// Seed the draws came from.
    pub seed: u64,
    /// Number of variance draws clamped up to zero (within `-1e-10`).
    pub clamped: usize,
}

impl ErrorCdf {
    /// Quantile by monotone linear interpolation on the grid.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let f = &self.f;
        let nz = f.len();
        if p < f[0] || p > f[nz - 1] {
            return Err(Error::GridTooNarrow {
                level: p,
                f_lo: f[0],
                f_hi: f[nz - 1],
            });
        }
        let mut i = match f.binary_search_by(|v| v.total_cmp(&p)) {
            Ok(i) => return Ok(self.z[i]),
            Err(i) => i,
        };
        if i == 0 {
            i = 1;
        }
        let (f0, f1) = (f[i - 1], f[i]);
        if f1 <= f0 {
            return Ok(self.z[i]);
        }
        let t = (p - f0) / (f1 - f0);
        Ok(self.z[i - 1] + t * (self.z[i] - self.z[i - 1]))
    }
}

/// Number of points in the default quantile grid.
pub const DEFAULT_ZGRID_POINTS: usize = 513;
/// Half-width of the default grid in multiples of the largest sampled
/// conditional standard deviation.
pub const DEFAULT_ZGRID_SPAN: f64 = 8.0;
/// Default number of displacement draws for the error CDF.
pub const DEFAULT_CDF_MC: usize = 2000;

/// Exact prediction-error CDF for a single target; see [`kale_error_cdfs`].
pub fn kale_error_cdf(
    spec: &KernelSpec,
    err: &ErrorModel,
    obs: &Locations,
    target: &[f64],
    n_mc: usize,
    seed: u64,
    zgrid: Option<&[f64]>,
) -> Result<ErrorCdf> {
    let mut targets = Locations::new(obs.dim());
    targets.push(target);
    Ok(kale_error_cdfs(spec, err, obs, &targets, n_mc, seed, zgrid)?.remove(0))
}

/// Exact prediction-error CDFs for every target, sharing the displacement
/// draws (and the per-draw covariance assembly) across targets and across
/// all quantiles `z`.
///
/// `V(u) = sigma^2 + gamma' C(s+u, s+u) gamma - 2 gamma' C(s+u, s*)` must be
/// non-negative; draws in `[-1e-10, 0)` are clamped to zero and counted,
/// anything lower is a numerical error naming the draw.
pub fn kale_error_cdfs(
    spec: &KernelSpec,
    err: &ErrorModel,
    obs: &Locations,
    targets: &Locations,
    n_mc: usize,
    seed: u64,
    zgrid: Option<&[f64]>,
) -> Result<Vec<ErrorCdf>> {
    spec.validate()?;
    err.validate()?;
    if n_mc == 0 {
        return Err(Error::InvalidParameter("n_mc must be at least 1".into()));
    }
    let n = obs.len();
    let m = targets.len();
    let p = obs.dim();
    let mc = kernels::McConfig {
        n_mc: kernels::DEFAULT_KERNEL_MC,
        seed: crate::rng::derive_seed(seed, &[0xced]),
    };
    let cov = kernels::build_cov_matrices(spec, err, obs, targets, &mc)?;
    let ch = Cholesky::factor(&cov.k)?;
    let gamma = ch.solve_mat(&cov.kstar); // n x m

    // sigma^2 = V[x(s*)] = tau^2 + sigma2_x (the prediction target carries
    // its own nugget; the simulation scoring uses the same convention)
    let sigma2: Vec<f64> = cov.c_star_star.clone();

    let mut v_draws = vec![vec![0.0; n_mc]; m];
    let mut clamped = vec![0usize; m];
    let mut u = vec![0.0; p];
    let mut true_pts = vec![0.0; n * p];
    let mut ct = vec![0.0; n * n];
    let mut cg = vec![0.0; n];
    for draw in 0..n_mc {
        let mut rng = Rng::substream(seed, &[1, draw as u64]);
        for i in 0..n {
            err.draw(obs.point(i), &mut rng, &mut u)?;
            for d in 0..p {
                true_pts[i * p + d] = obs.point(i)[d] + u[d];
            }
        }
        // C(s+u, s+u): smooth off the diagonal, nugget on it
        for i in 0..n {
            ct[i * n + i] = spec.tau2 + spec.sigma2_x;
            for j in (i + 1)..n {
                let dm = kernels::distance_measure(
                    spec.family,
                    &true_pts[i * p..(i + 1) * p],
                    &true_pts[j * p..(j + 1) * p],
                );
                let v = spec.smooth_at(dm);
                ct[i * n + j] = v;
                ct[j * n + i] = v;
            }
        }
        for j in 0..m {
            // gamma_j' Ct gamma_j  and  gamma_j' C(s+u, s*_j)
            for i in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ct[i * n + l] * gamma.get(l, j);
                }
                cg[i] = s;
            }
            let mut quad = 0.0;
            let mut cross = 0.0;
            for i in 0..n {
                quad += gamma.get(i, j) * cg[i];
                let dm = kernels::distance_measure(
                    spec.family,
                    &true_pts[i * p..(i + 1) * p],
                    targets.point(j),
                );
                cross += gamma.get(i, j) * spec.smooth_at(dm);
            }
            let mut v = sigma2[j] + quad - 2.0 * cross;
            if v < 0.0 {
                if v >= -1e-10 {
                    v = 0.0;
                    clamped[j] += 1;
                } else {
                    return Err(Error::Numerical(format!(
                        "negative prediction-error variance {v} at draw {draw}, target {j}"
                    )));
                }
            }
            v_draws[j][draw] = v;
        }
    }

    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let z: Vec<f64> = match zgrid {
            Some(g) => {
                if g.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter(
                        "zgrid must be strictly ascending".into(),
                    ));
                }
                g.to_vec()
            }
            None => {
                let vmax = v_draws[j].iter().cloned().fold(0.0, f64::max);
                let half = DEFAULT_ZGRID_SPAN * math::sqrt(vmax).max(1e-12);
                let half_points = (DEFAULT_ZGRID_POINTS / 2) as f64;
                (0..DEFAULT_ZGRID_POINTS)
                    .map(|i| half * ((i as f64 - half_points) / half_points))
                    .collect()
            }
        };
        let sd_inv: Vec<f64> = v_draws[j]
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / math::sqrt(v) } else { f64::INFINITY })
            .collect();
        let mut f = Vec::with_capacity(z.len());
        let mut phis = vec![0.0; n_mc];
        for &zq in &z {
            for (ph, &si) in phis.iter_mut().zip(&sd_inv) {
                *ph = if si.is_finite() {
                    math::normal_cdf(zq * si)
                } else {
                    // point mass at zero prediction error
                    if zq > 0.0 {
                        1.0
                    } else if zq < 0.0 {
                        0.0
                    } else {
                        0.5
                    }
                };
            }
            f.push(math::pairwise_mean(&phis));
        }
        out.push(ErrorCdf {
            z,
            f,
            n_mc,
            seed,
            clamped: clamped[j],
        });
    }
    Ok(out)
}

/// Invert an error CDF into a prediction interval:
/// `(mean + q_{a/2}, mean + q_{1-a/2})`.
pub fn kale_interval(cdf: &ErrorCdf, mean: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let lo = cdf.quantile(0.5 * alpha)?;
    let hi = cdf.quantile(1.0 - 0.5 * alpha)?;
    Ok((mean + lo, mean + hi))
}

/// Closed-form single-observation KALE MSE for the squared-exponential
/// kernel with `tau^2 = 1`, separation `Delta^2 = |s - s*|^2`, and iid
/// Gaussian errors: `1 - (1 + 2 b su2)^{-p} exp(-2 b D2 / (1 + 2 b su2))`.
///
/// MSE improves over the error-free value iff `beta * Delta^2 > p/2`; the
/// tests verify the implementation against this expression and probe the
/// threshold on both sides.
pub fn kale_mse_single_obs(beta: f64, delta2: f64, sigma2_u: f64, p: usize) -> f64 {
    let a = 1.0 + 2.0 * beta * sigma2_u;
    1.0 - math::powf(a, -(p as f64)) * math::exp(-2.0 * beta * delta2 / a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_cov_matrices, ErrorModel, KernelSpec, Locations, McConfig};

    fn grid_design(
        spec: &KernelSpec,
        err: &ErrorModel,
        obs_pts: &[&[f64]],
        target_pts: &[&[f64]],
    ) -> CovMatrices {
        let dim = obs_pts[0].len();
        let mut obs = Locations::new(dim);
        for p in obs_pts {
            obs.push(p);
        }
        let mut targets = Locations::new(dim);
        for p in target_pts {
            targets.push(p);
        }
        build_cov_matrices(spec, err, &obs, &targets, &McConfig::default()).unwrap()
    }

    #[test]
    fn interpolation_exactness_without_errors() {
        let spec = KernelSpec::squared_exponential(1.0, 0.7, 0.0);
        let err = ErrorModel::none(2);
        let cov = grid_design(
            &spec,
            &err,
            &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.5]],
            &[&[1.0, 0.0]],
        );
        let y = [0.3, -1.2, 2.0];
        let r = kale_predict(&cov, &y).unwrap();
        assert!((r.mean[0] - y[1]).abs() < 1e-9);
        assert!(r.mse[0] < 1e-9);
    }

    #[test]
    fn single_obs_matches_closed_form() {
        // n=1, tau2=1, beta=1, p=2, Delta^2=3, su2=0.5 -> 1 - 0.25 exp(-3)
        let spec = KernelSpec::squared_exponential(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.5, 2);
        let d = (3.0f64).sqrt();
        let cov = grid_design(&spec, &err, &[&[0.0, 0.0]], &[&[d, 0.0]]);
        let r = kale_predict(&cov, &[1.0]).unwrap();
        let expect = kale_mse_single_obs(1.0, 3.0, 0.5, 2);
        assert!((r.mse[0] - expect).abs() < 1e-12);
        assert!((expect - 0.987_553).abs() < 1e-6);

        // same geometry without errors is *worse* because beta*Delta^2 > p/2
        let err0 = ErrorModel::iid_gaussian(0.0, 2);
        let cov0 = grid_design(&spec, &err0, &[&[0.0, 0.0]], &[&[d, 0.0]]);
        let r0 = kale_predict(&cov0, &[1.0]).unwrap();
        let expect0 = 1.0 - (-6.0f64).exp();
        assert!((r0.mse[0] - expect0).abs() < 1e-12);
        assert!((expect0 - 0.997_521).abs() < 1e-6);
        assert!(r.mse[0] < r0.mse[0]);
    }

    #[test]
    fn prop2_threshold_both_sides() {
        // beta * Delta^2 < p/2: no su2 improves on the error-free MSE
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.01).collect();
        let base_low = kale_mse_single_obs(1.0, 0.9, 0.0, 2);
        for &s in &grid {
            assert!(kale_mse_single_obs(1.0, 0.9, s, 2) >= base_low - 1e-9);
        }
        // beta * Delta^2 > p/2: some su2 does improve
        let base_high = kale_mse_single_obs(1.0, 3.0, 0.0, 2);
        assert!(grid
            .iter()
            .any(|&s| kale_mse_single_obs(1.0, 3.0, s, 2) < base_high - 1e-9));
    }

    #[test]
    fn kile_equals_kale_without_errors() {
        let spec = KernelSpec::squared_exponential(1.0, 0.4, 0.05);
        let err = ErrorModel::iid_gaussian(0.0, 2);
        let cov = grid_design(
            &spec,
            &err,
            &[&[0.0, 0.0], &[2.0, 1.0], &[1.0, 3.0]],
            &[&[1.5, 1.5], &[0.5, 0.5]],
        );
        let y = [1.0, -0.5, 0.25];
        let a = kale_predict(&cov, &y).unwrap();
        let b = kile_predict(&cov, &y, None).unwrap();
        for j in 0..2 {
            assert!((a.mean[j] - b.mean[j]).abs() < 1e-12);
            assert!((a.mse[j] - b.mse[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn kale_dominates_kile_one_dim_line() {
        // observations at 0..4 on the line, target at 5, su2 = 0.25
        let spec = KernelSpec::squared_exponential(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.25, 1);
        let obs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let obs_refs: Vec<&[f64]> = obs.iter().map(|v| v.as_slice()).collect();
        let cov = grid_design(&spec, &err, &obs_refs, &[&[5.0]]);
        let y = [0.1, 0.4, -0.2, 0.9, 0.3];
        let kale = kale_predict(&cov, &y).unwrap();
        let kile = kile_predict(&cov, &y, None).unwrap();
        assert!(kale.mse[0] <= kile.mse[0] + 1e-12);
    }

    #[test]
    fn kile_mse_blows_up_as_locations_coincide() {
        // Two observations converging while errors stay fixed: the KILE MSE
        // grows without bound; KALE stays finite.
        let spec = KernelSpec::squared_exponential(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.04, 1);
        let mse_at = |d: f64| {
            let cov = grid_design(&spec, &err, &[&[0.0], &[d]], &[&[1.0]]);
            let y = [0.0, 0.0];
            (
                kile_predict(&cov, &y, None).unwrap().mse[0],
                kale_predict(&cov, &y).unwrap().mse[0],
            )
        };
        let (kile_far, _) = mse_at(1.0);
        let mut last = kile_far;
        for &d in &[1e-1, 1e-2, 1e-3, 1e-4] {
            let (kile_near, kale_near) = mse_at(d);
            assert!(kile_near > last, "KILE MSE should grow as d -> 0");
            assert!(kale_near < 1.0);
            last = kile_near;
        }
        assert!(last > 10.0 * kile_far);
    }

    #[test]
    fn kile_not_self_efficient() {
        // adding an observation can *increase* the KILE MSE
        let spec = KernelSpec::squared_exponential(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.04, 1);
        let base_pts: Vec<Vec<f64>> = (0..=10)
            .filter(|&i| i != 5)
            .map(|i| vec![i as f64])
            .collect();
        let base_refs: Vec<&[f64]> = base_pts.iter().map(|v| v.as_slice()).collect();
        let cov = grid_design(&spec, &err, &base_refs, &[&[5.0]]);
        let y = vec![0.0; base_refs.len()];
        let base_mse = kile_predict(&cov, &y, None).unwrap().mse[0];
        let mut found = false;
        for &s in &[0.01, 1.01, 3.99, 4.01, 6.01, 0.001] {
            let mut pts = base_pts.clone();
            pts.push(vec![s]);
            let refs: Vec<&[f64]> = pts.iter().map(|v| v.as_slice()).collect();
            let cov2 = grid_design(&spec, &err, &refs, &[&[5.0]]);
            let y2 = vec![0.0; refs.len()];
            if let Ok(r) = kile_predict(&cov2, &y2, None) {
                if r.mse[0] > base_mse {
                    found = true;
                    break;
                }
            }
        }
        assert!(found, "no added location increased the KILE MSE");
    }

    #[test]
    fn error_cdf_contract() {
        let spec = KernelSpec::squared_exponential(1.0, 0.5, 0.01);
        let err = ErrorModel::iid_gaussian(0.3, 2);
        let mut obs = Locations::new(2);
        for pt in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]] {
            obs.push(&pt);
        }
        let cdf = kale_error_cdf(&spec, &err, &obs, &[0.5, 0.5], 500, 9, None).unwrap();
        // exactly non-decreasing
        assert!(cdf.f.windows(2).all(|w| w[1] >= w[0]));
        // symmetric mixture of mean-zero normals: F(0) = 1/2 exactly
        let mid = cdf.z.len() / 2;
        assert_eq!(cdf.z[mid], 0.0);
        assert!((cdf.f[mid] - 0.5).abs() < 1e-12);
        // upper tail reaches beyond 0.999
        assert!(cdf.f[cdf.f.len() - 1] >= 0.999);
    }

    #[test]
    fn error_cdf_zero_error_is_normal() {
        // su2 = 0, n = 1: F(z) = Phi(z / sqrt(c0)) with c0 the error-free
        // Kriging variance
        let spec = KernelSpec::squared_exponential(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.0, 1);
        let mut obs = Locations::new(1);
        obs.push(&[0.0]);
        let cdf = kale_error_cdf(&spec, &err, &obs, &[1.0], 200, 3, None).unwrap();
        let c0: f64 = 1.0 - (-2.0f64).exp(); // 1 - c(0,1)^2
        let sd = c0.sqrt();
        let mut sup = 0.0f64;
        for (i, &z) in cdf.z.iter().enumerate() {
            let expect = math::normal_cdf(z / sd);
            sup = sup.max((cdf.f[i] - expect).abs());
        }
        assert!(sup < 1e-3, "sup norm {sup}");
    }

    #[test]
    fn interval_symmetry_and_normal_oracle() {
        let spec = KernelSpec::squared_exponential(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.0, 1);
        let mut obs = Locations::new(1);
        obs.push(&[0.0]);
        let cdf = kale_error_cdf(&spec, &err, &obs, &[1.0], 200, 3, None).unwrap();
        let (lo, hi) = kale_interval(&cdf, 0.0, 0.05).unwrap();
        assert!((lo + hi).abs() < 1e-9, "symmetric CDF should give lo = -hi");
        let c0: f64 = 1.0 - (-2.0f64).exp();
        let expect = 1.959_963_984_540_054 * c0.sqrt();
        let grid_step = cdf.z[1] - cdf.z[0];
        assert!((hi - expect).abs() < grid_step);
    }

    #[test]
    fn interval_range_error_when_grid_too_narrow() {
        let spec = KernelSpec::squared_exponential(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.0, 1);
        let mut obs = Locations::new(1);
        obs.push(&[0.0]);
        let zgrid = [-0.01, 0.0, 0.01];
        let cdf = kale_error_cdf(&spec, &err, &obs, &[1.0], 100, 3, Some(&zgrid)).unwrap();
        match kale_interval(&cdf, 0.0, 0.05) {
            Err(Error::GridTooNarrow { .. }) => {}
            other => panic!("expected grid error, got {other:?}"),
        }
    }
}
