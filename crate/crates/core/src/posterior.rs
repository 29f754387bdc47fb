//! The location-error Gaussian process posterior and its HMC driver.
//!
//! The sampled state is the displacement vector `u` (one coordinate per
//! observation and input dimension) plus, optionally, covariance parameters
//! with flat priors on a box (sampled through a logit transform with its
//! Jacobian). Up to a constant,
//!
//! ```text
//! log pi(theta, u | y) = -1/2 log |C_theta(u)| - 1/2 y' C_theta(u)^{-1} y
//!                        + log pi(u) + log pi(theta),
//! ```
//!
//! where `C_theta(u)` is the base covariance at the displaced locations. One
//! Cholesky factorization per evaluation yields the density, and its reuse
//! (through the explicit inverse) yields the gradient in `O(n^2)` more work
//! per coordinate block, so value-plus-gradient stays `O(n^3)` total.
//!
//! Each retained draw feeds the exact Gaussian conditional of the targets
//! given `(y, u, theta)`: its mean accumulates the Rao-Blackwellized
//! minimum-MSE predictor, and one sample from it per draw builds the
//! empirical predictive intervals. Multimodal posteriors (small nugget,
//! large errors) can be handled by sampling under an inflated nugget
//! `C + kappa I` and importance-reweighting back to the true posterior.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimation::{ParamBox, ThetaParam};
use crate::kernels::{ErrorModel, KernelFamily, KernelSpec, Locations};
use crate::linalg::{dense, sym_eigen, Cholesky, GaussianConditional, Mat};
use crate::math;
use crate::opt::BoxTransform;
use crate::rng::Rng;
use crate::sampler::{
    self, effective_sample_size, normalize_log_weights, run_chain, split_rhat, weighted_quantile,
    ChainRun, HmcConfig, LogDensity,
};

/// The joint posterior over displacements and (optionally) parameters.
#[derive(Clone)]
pub struct GpModel {
    family: KernelFamily,
    err: ErrorModel,
    obs: Locations,
    y: Vec<f64>,
    targets: Locations,
    base: [f64; 3],
    sampled: Vec<ThetaParam>,
    transform: Option<BoxTransform>,
    prior_var: Vec<f64>,
    kappa: f64,
    n: usize,
    p: usize,
    // scratch buffers reused across density evaluations
    true_pts: Vec<f64>,
    csm: Vec<f64>,
    measure: Vec<f64>,
    cfac: Vec<f64>,
    wbuf: Vec<f64>,
    ainv: Vec<f64>,
    alpha: Vec<f64>,
}

impl GpModel {
    /// Posterior over `u` only, with known covariance parameters.
    pub fn with_known_params(
        spec: &KernelSpec,
        err: &ErrorModel,
        obs: Locations,
        y: Vec<f64>,
        targets: Locations,
    ) -> Result<Self> {
        spec.validate()?;
        Self::build(
            spec.family,
            err,
            obs,
            y,
            targets,
            [spec.tau2, spec.beta, spec.sigma2_x],
            Vec::new(),
            None,
        )
    }

    /// Posterior over `u` and all of `(tau2, beta, sigma2_x)` with flat
    /// priors on `pbox`.
    pub fn with_sampled_params(
        family: KernelFamily,
        err: ErrorModel,
        obs: Locations,
        y: Vec<f64>,
        targets: Locations,
        pbox: ParamBox,
    ) -> Result<Self> {
        let b = pbox.as_bounds();
        let base = [
            0.5 * (b[0].0 + b[0].1),
            0.5 * (b[1].0 + b[1].1),
            0.5 * (b[2].0 + b[2].1),
        ];
        Self::build(
            family,
            &err,
            obs,
            y,
            targets,
            base,
            vec![ThetaParam::Tau2, ThetaParam::Beta, ThetaParam::Sigma2X],
            Some(BoxTransform::new(&b)),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        family: KernelFamily,
        err: &ErrorModel,
        obs: Locations,
        y: Vec<f64>,
        targets: Locations,
        base: [f64; 3],
        sampled: Vec<ThetaParam>,
        transform: Option<BoxTransform>,
    ) -> Result<Self> {
        err.validate()?;
        let n = obs.len();
        let p = obs.dim();
        if n == 0 {
            return Err(Error::InvalidParameter("obs must be nonempty".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if !targets.is_empty() && targets.dim() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: targets.dim(),
            });
        }
        let mut prior_var = Vec::new();
        if !err.is_zero() {
            for i in 0..n {
                prior_var.extend(err.coord_variances(obs.point(i))?);
            }
        }
        Ok(GpModel {
            family,
            err: *err,
            obs,
            y,
            targets,
            base,
            sampled,
            transform,
            prior_var,
            kappa: 0.0,
            n,
            p,
            true_pts: vec![0.0; n * p],
            csm: vec![0.0; n * n],
            measure: vec![0.0; n * n],
            cfac: vec![0.0; n * n],
            wbuf: vec![0.0; n * n],
            ainv: vec![0.0; n * n],
            alpha: vec![0.0; n],
        })
    }

    /// Same posterior with the likelihood nugget inflated by `kappa`
    /// (importance-sampling proposal).
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// Number of displacement coordinates (0 when the error model is zero).
    pub fn n_u(&self) -> usize {
        if self.err.is_zero() {
            0
        } else {
            self.n * self.p
        }
    }

    /// Parameters being sampled.
    pub fn sampled_params(&self) -> &[ThetaParam] {
        &self.sampled
    }

    /// Number of observations.
    pub fn n_obs(&self) -> usize {
        self.n
    }

    /// Number of prediction targets.
    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    /// Human-readable name of position coordinate `i`.
    pub fn coord_name(&self, i: usize) -> String {
        let n_u = self.n_u();
        if i < n_u {
            format!("u{}_{}", i / self.p, i % self.p)
        } else {
            param_name(self.sampled[i - n_u]).into()
        }
    }

    /// Decode a position into `(theta, u)`.
    pub fn decode<'a>(&self, position: &'a [f64]) -> ([f64; 3], &'a [f64]) {
        let n_u = self.n_u();
        let (u, tpar) = position.split_at(n_u);
        let mut theta = self.base;
        if let Some(tr) = &self.transform {
            let mut vals = [0.0; 3];
            tr.to_box(tpar, &mut vals[..self.sampled.len()]);
            for (k, prm) in self.sampled.iter().enumerate() {
                theta[*prm as usize] = vals[k];
            }
        }
        (theta, u)
    }

    /// Chain initialization: `u ~ init_scale * g` (overdispersed for
    /// `init_scale > 1`), parameters uniform on the interior of their box.
    pub fn initial_position(&self, rng: &mut Rng, init_scale: f64) -> Result<Vec<f64>> {
        let n_u = self.n_u();
        let mut pos = vec![0.0; self.dim()];
        if n_u > 0 {
            let mut du = vec![0.0; self.p];
            for i in 0..self.n {
                self.err.draw(self.obs.point(i), rng, &mut du)?;
                for d in 0..self.p {
                    pos[i * self.p + d] = init_scale * du[d];
                }
            }
        }
        if let Some(tr) = &self.transform {
            let q = self.sampled.len();
            let mut theta = vec![0.0; q];
            for (k, th) in theta.iter_mut().enumerate() {
                let (lo, hi) = tr.bounds(k);
                *th = lo + (hi - lo) * rng.uniform(0.05, 0.95);
            }
            let mut t = vec![0.0; q];
            tr.to_unconstrained(&theta, &mut t);
            pos[n_u..].copy_from_slice(&t);
        }
        Ok(pos)
    }

    fn fill_true_points(&mut self, u: &[f64]) {
        let flat = self.obs.as_flat();
        if u.is_empty() {
            self.true_pts.copy_from_slice(flat);
        } else {
            for (t, (o, du)) in self.true_pts.iter_mut().zip(flat.iter().zip(u)) {
                *t = o + du;
            }
        }
    }

    /// Fill `csm` (smooth covariance, diagonal `tau2`) and `measure`
    /// (pairwise distance measure) at the current true points.
    fn fill_smooth(&mut self, tau2: f64, beta: f64) {
        let n = self.n;
        let p = self.p;
        match self.family {
            KernelFamily::SquaredExponential => {
                for i in 0..n {
                    self.csm[i * n + i] = tau2;
                    self.measure[i * n + i] = 0.0;
                    let xi = &self.true_pts[i * p..(i + 1) * p];
                    let (xi0, xi1) = (xi[0], if p > 1 { xi[1] } else { 0.0 });
                    for j in (i + 1)..n {
                        let xj = &self.true_pts[j * p..(j + 1) * p];
                        let mut d2 = {
                            let d0 = xi0 - xj[0];
                            d0 * d0
                        };
                        if p > 1 {
                            let d1 = xi1 - xj[1];
                            d2 += d1 * d1;
                        }
                        for d in 2..p {
                            let dd = xi[d] - xj[d];
                            d2 += dd * dd;
                        }
                        let v = tau2 * math::exp(-beta * d2);
                        self.csm[i * n + j] = v;
                        self.csm[j * n + i] = v;
                        self.measure[i * n + j] = d2;
                        self.measure[j * n + i] = d2;
                    }
                }
            }
            KernelFamily::ExponentialGeodesic => {
                for i in 0..n {
                    self.csm[i * n + i] = tau2;
                    self.measure[i * n + i] = 0.0;
                    for j in (i + 1)..n {
                        let xi = &self.true_pts[i * p..(i + 1) * p];
                        let xj = &self.true_pts[j * p..(j + 1) * p];
                        let dist = crate::geo::great_circle_deg(xi[0], xi[1], xj[0], xj[1]);
                        let v = tau2 * math::exp(-beta * dist);
                        self.csm[i * n + j] = v;
                        self.csm[j * n + i] = v;
                        self.measure[i * n + j] = dist;
                        self.measure[j * n + i] = dist;
                    }
                }
            }
        }
    }

    /// Exact Gaussian conditional of the targets given `(y, u, theta)` at a
    /// sampled position, under the *uninflated* model.
    pub fn conditional_at(&mut self, position: &[f64]) -> Result<GaussianConditional> {
        let (theta, u) = self.decode(position);
        let u = u.to_vec();
        self.fill_true_points(&u);
        self.fill_smooth(theta[0], theta[1]);
        let n = self.n;
        let m = self.targets.len();
        let p = self.p;
        self.cfac.copy_from_slice(&self.csm);
        for i in 0..n {
            self.cfac[i * n + i] += theta[2];
        }
        let ch = Cholesky::factor_slice(&self.cfac, n)?;
        let alpha = ch.solve_vec(&self.y);
        // cross-covariance rows: smooth c(target_j, true point i)
        let mut w = Mat::zeros(m, n);
        for j in 0..m {
            let tj = self.targets.point(j);
            for i in 0..n {
                let xi = &self.true_pts[i * p..(i + 1) * p];
                let dm = crate::kernels::distance_measure(self.family, tj, xi);
                w.set(j, i, theta[0] * math::exp(-theta[1] * dm));
            }
        }
        let mean: Vec<f64> = (0..m).map(|j| dense::dot(w.row(j), &alpha)).collect();
        // target covariance: smooth plus nugget diagonal
        let mut cov = Mat::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let dm = crate::kernels::distance_measure(
                    self.family,
                    self.targets.point(a),
                    self.targets.point(b),
                );
                let mut v = theta[0] * math::exp(-theta[1] * dm);
                if a == b {
                    v += theta[2];
                }
                cov.set(a, b, v);
                cov.set(b, a, v);
            }
        }
        // subtract W C^{-1} W'
        let mut sol = vec![0.0; n];
        for b in 0..m {
            sol.copy_from_slice(w.row(b));
            dense::solve_lower(ch.lower(), n, &mut sol);
            dense::solve_lower_t(ch.lower(), n, &mut sol);
            for a in 0..m {
                let red = dense::dot(w.row(a), &sol);
                cov.set(a, b, cov.get(a, b) - red);
            }
        }
        // symmetrize round-off
        for a in 0..m {
            for b in (a + 1)..m {
                let v = 0.5 * (cov.get(a, b) + cov.get(b, a));
                cov.set(a, b, v);
                cov.set(b, a, v);
            }
        }
        Ok(GaussianConditional { mean, cov })
    }

    /// Log importance weight of a draw from the `kappa`-inflated proposal:
    /// `log N(y; 0, C) - log N(y; 0, C + kappa I)`, from one symmetric
    /// eigendecomposition of `C` (the rank structure of the inflation makes
    /// both densities available from the same factorization).
    pub fn inflated_log_weight(&mut self, position: &[f64], kappa: f64) -> Result<f64> {
        let (theta, u) = self.decode(position);
        let u = u.to_vec();
        self.fill_true_points(&u);
        self.fill_smooth(theta[0], theta[1]);
        let n = self.n;
        self.cfac.copy_from_slice(&self.csm);
        for i in 0..n {
            self.cfac[i * n + i] += theta[2];
        }
        let c = Mat::from_vec(n, n, self.cfac.clone());
        let (vals, vecs) = sym_eigen(&c);
        let qty: Vec<f64> = (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    s += vecs.get(i, k) * self.y[i];
                }
                s
            })
            .collect();
        let mut log_true = 0.0;
        let mut log_infl = 0.0;
        for k in 0..n {
            let lam = vals[k].max(1e-300);
            log_true += math::ln(lam) + qty[k] * qty[k] / lam;
            let lam_k = lam + kappa;
            log_infl += math::ln(lam_k) + qty[k] * qty[k] / lam_k;
        }
        Ok(-0.5 * log_true + 0.5 * log_infl)
    }
}

fn param_name(p: ThetaParam) -> &'static str {
    match p {
        ThetaParam::Tau2 => "tau2",
        ThetaParam::Beta => "beta",
        ThetaParam::Sigma2X => "sigma2_x",
    }
}

impl LogDensity for GpModel {
    fn dim(&self) -> usize {
        self.n_u() + self.sampled.len()
    }

    fn preferred_inv_mass(&self) -> Option<Vec<f64>> {
        let mut v = self.prior_var.clone();
        if self.n_u() == 0 {
            v.clear();
        }
        v.extend(core::iter::repeat(1.0).take(self.sampled.len()));
        Some(v)
    }

    fn log_density_grad(&mut self, position: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n;
        let p = self.p;
        let n_u = self.n_u();
        let q = self.sampled.len();
        grad.fill(0.0);

        // decode parameters and their transform Jacobian
        let mut theta = self.base;
        let mut logj = 0.0;
        let mut logj_grad = [0.0; 3];
        let mut jac_diag = [0.0; 3];
        if q > 0 {
            let tr = self.transform.as_ref().unwrap();
            let tpar = &position[n_u..];
            let mut vals = [0.0; 3];
            tr.to_box(tpar, &mut vals[..q]);
            for (k, prm) in self.sampled.iter().enumerate() {
                theta[*prm as usize] = vals[k];
            }
            logj = tr.log_jacobian(tpar, &mut logj_grad[..q]);
            tr.jacobian_diag(tpar, &mut jac_diag[..q]);
        }
        let (tau2, beta, s2x) = (theta[0], theta[1], theta[2]);

        let u = position[..n_u].to_vec();
        self.fill_true_points(&u);
        self.fill_smooth(tau2, beta);
        self.cfac.copy_from_slice(&self.csm);
        let diag_add = s2x + self.kappa;
        for i in 0..n {
            self.cfac[i * n + i] += diag_add;
        }
        if dense::chol_in_place(&mut self.cfac, n).is_err() {
            return f64::NEG_INFINITY;
        }
        let logdet = dense::logdet_from_chol(&self.cfac, n);
        self.alpha.copy_from_slice(&self.y);
        dense::solve_lower(&self.cfac, n, &mut self.alpha);
        dense::solve_lower_t(&self.cfac, n, &mut self.alpha);
        dense::inv_lower_transposed(&self.cfac, n, &mut self.wbuf);
        dense::spd_inverse_from_w(&self.wbuf, n, &mut self.ainv);

        let mut value = -0.5 * logdet - 0.5 * dense::dot(&self.alpha, &self.y) + logj;

        // displacement prior
        for c in 0..n_u {
            let pv = self.prior_var[c];
            value -= 0.5 * u[c] * u[c] / pv;
        }
        if !value.is_finite() {
            grad.fill(0.0);
            return f64::NEG_INFINITY;
        }

        // gradient accumulation over pairs
        let need_theta = q > 0;
        let mut s_quad_sm = 0.0; // alpha' Csm alpha
        let mut s_tr_sm = 0.0; // sum A o Csm
        let mut s_quad_msm = 0.0; // alpha' (M o Csm) alpha
        let mut s_tr_msm = 0.0; // sum A o M o Csm
        let mut s_alpha2 = 0.0;
        let mut s_tr_a = 0.0;
        if need_theta {
            for i in 0..n {
                let ai = self.alpha[i];
                s_alpha2 += ai * ai;
                s_tr_a += self.ainv[i * n + i];
                s_quad_sm += ai * ai * tau2;
                s_tr_sm += self.ainv[i * n + i] * tau2;
            }
        }
        if n_u > 0 || need_theta {
            match self.family {
                KernelFamily::SquaredExponential => {
                    for i in 0..n {
                        let ai = self.alpha[i];
                        let xi = &self.true_pts[i * p..(i + 1) * p];
                        for j in (i + 1)..n {
                            let t = self.csm[i * n + j];
                            let aj = self.alpha[j];
                            let a_ij = self.ainv[i * n + j];
                            let base = ai * aj - a_ij;
                            if need_theta {
                                s_quad_sm += 2.0 * ai * aj * t;
                                s_tr_sm += 2.0 * a_ij * t;
                                let mt = self.measure[i * n + j] * t;
                                s_quad_msm += 2.0 * ai * aj * mt;
                                s_tr_msm += 2.0 * a_ij * mt;
                            }
                            if n_u > 0 {
                                let wp = -2.0 * beta * t * base;
                                let xj = &self.true_pts[j * p..(j + 1) * p];
                                for d in 0..p {
                                    let delta = xi[d] - xj[d];
                                    grad[i * p + d] += wp * delta;
                                    grad[j * p + d] -= wp * delta;
                                }
                            }
                        }
                    }
                }
                KernelFamily::ExponentialGeodesic => {
                    for i in 0..n {
                        let ai = self.alpha[i];
                        for j in (i + 1)..n {
                            let t = self.csm[i * n + j];
                            let aj = self.alpha[j];
                            let a_ij = self.ainv[i * n + j];
                            let base = ai * aj - a_ij;
                            if need_theta {
                                s_quad_sm += 2.0 * ai * aj * t;
                                s_tr_sm += 2.0 * a_ij * t;
                                let mt = self.measure[i * n + j] * t;
                                s_quad_msm += 2.0 * ai * aj * mt;
                                s_tr_msm += 2.0 * a_ij * mt;
                            }
                            if n_u > 0 {
                                let xi = &self.true_pts[i * p..(i + 1) * p];
                                let xj = &self.true_pts[j * p..(j + 1) * p];
                                let (_, gi) = crate::geo::great_circle_grad_deg(
                                    xi[0], xi[1], xj[0], xj[1],
                                );
                                let (_, gj) = crate::geo::great_circle_grad_deg(
                                    xj[0], xj[1], xi[0], xi[1],
                                );
                                let wp = -beta * t * base;
                                for d in 0..2 {
                                    grad[i * 2 + d] += wp * gi[d];
                                    grad[j * 2 + d] += wp * gj[d];
                                }
                            }
                        }
                    }
                }
            }
        }
        // displacement prior gradient
        for c in 0..n_u {
            grad[c] -= u[c] / self.prior_var[c];
        }
        // parameter gradients, chained through the logit transform
        if need_theta {
            let g_theta = [
                0.5 * (s_quad_sm - s_tr_sm) / tau2,
                0.5 * (s_tr_msm - s_quad_msm),
                0.5 * (s_alpha2 - s_tr_a),
            ];
            for (k, prm) in self.sampled.iter().enumerate() {
                grad[n_u + k] = g_theta[*prm as usize] * jac_diag[k] + logj_grad[k];
            }
        }
        value
    }
}

/// Run-level configuration wrapping the raw HMC settings.
#[derive(Clone, Debug)]
pub struct HmcRunConfig {
    /// Integrator and chain settings.
    pub hmc: HmcConfig,
    /// Interval level `1 - alpha`.
    pub alpha: f64,
    /// Nugget inflation for the importance-sampling path (0 disables it).
    pub kappa: f64,
    /// Keep the retained displacement draws in the summary.
    pub store_u_draws: bool,
    /// Compute per-coordinate effective sample sizes (costs `O(dim n^2)`).
    pub compute_ess: bool,
    /// Scale of the overdispersed displacement initializations (`u ~ s g`).
    pub init_scale: f64,
}

impl Default for HmcRunConfig {
    fn default() -> Self {
        HmcRunConfig {
            hmc: HmcConfig::default(),
            alpha: 0.05,
            kappa: 0.0,
            store_u_draws: false,
            compute_ess: true,
            init_scale: 2.0,
        }
    }
}

/// Posterior summary: minimum-MSE predictions, intervals, parameter draws,
/// and mixing diagnostics.
#[derive(Clone, Debug)]
pub struct PosteriorSummary {
    /// Rao-Blackwellized predictive mean per target (the minimum-MSE
    /// estimate).
    pub predictive_mean: Vec<f64>,
    /// Variance of the predictive draws per target.
    pub predictive_var: Vec<f64>,
    /// Empirical predictive interval per target.
    pub predictive_interval: Vec<(f64, f64)>,
    /// Predictive draws, draw-major (`total_draws x m`).
    pub predictive_draws: Vec<f64>,
    /// Names of sampled parameters.
    pub param_names: Vec<String>,
    /// Posterior draws per sampled parameter.
    pub param_draws: Vec<Vec<f64>>,
    /// Retained displacement draws (`total_draws x n_u`), when requested.
    pub u_draws: Option<Vec<f64>>,
    /// Position coordinate names aligned with `rhat`/`ess`.
    pub coord_names: Vec<String>,
    /// Split R-hat per position coordinate.
    pub rhat: Vec<f64>,
    /// Effective sample size per coordinate (NaN when not computed).
    pub ess: Vec<f64>,
    /// Mean acceptance probability across chains.
    pub accept_rate: f64,
    /// Total divergent transitions.
    pub divergences: usize,
    /// Adapted step size per chain.
    pub step_sizes: Vec<f64>,
    /// Mixing warnings (R-hat gate).
    pub warnings: Vec<String>,
    /// Self-normalized importance weights (inflated runs only).
    pub weights: Option<Vec<f64>>,
    /// Effective sample size of the weights (inflated runs only).
    pub weight_ess: Option<f64>,
}

impl PosteriorSummary {
    /// Posterior mean of a sampled parameter.
    pub fn param_mean(&self, name: &str) -> Option<f64> {
        let idx = self.param_names.iter().position(|n| n == name)?;
        Some(math::pairwise_mean(&self.param_draws[idx]))
    }
}

/// Deterministic per-chain initial positions.
pub fn plan_inits(model: &GpModel, cfg: &HmcRunConfig) -> Result<Vec<Vec<f64>>> {
    let mut inits = Vec::with_capacity(cfg.hmc.n_chains);
    for c in 0..cfg.hmc.n_chains {
        let mut rng = Rng::substream(cfg.hmc.seed, &[0x1417, c as u64]);
        inits.push(model.initial_position(&mut rng, cfg.init_scale)?);
    }
    Ok(inits)
}

/// Run a single chain of the model's posterior (the inflated proposal when
/// `cfg.kappa > 0`). Drivers may call this from worker threads; results are
/// deterministic given `(seed, chain_id)`.
pub fn run_single_chain(
    model: &GpModel,
    cfg: &HmcRunConfig,
    chain_id: usize,
    init: &[f64],
) -> ChainRun {
    let mut target = model.clone().with_kappa(cfg.kappa);
    let mut hmc_cfg = cfg.hmc.clone();
    hmc_cfg.store_draws = true;
    run_chain(&mut target, &hmc_cfg, chain_id, init)
}

/// Merge finished chains into a [`PosteriorSummary`]: per retained draw,
/// compute the exact target conditional (Rao-Blackwellized mean plus one
/// predictive draw), then assemble diagnostics; reweight if the chains were
/// run against an inflated proposal.
pub fn summarize(
    model: &GpModel,
    cfg: &HmcRunConfig,
    chains: &[ChainRun],
) -> Result<PosteriorSummary> {
    let dim = model.dim();
    let m = model.n_targets();
    let n_u = model.n_u();
    let q = model.sampled_params().len();
    let total: usize = chains.iter().map(|c| c.draws.len() / dim.max(1)).sum();
    let mut work = model.clone();

    let mut cond_means = vec![Vec::with_capacity(total); m];
    let mut pred_draws = vec![Vec::with_capacity(total); m];
    let mut param_draws = vec![Vec::with_capacity(total); q];
    let mut u_draws = if cfg.store_u_draws {
        Some(Vec::with_capacity(total * n_u))
    } else {
        None
    };
    let mut log_w = Vec::with_capacity(total);

    for ch in chains {
        let n_draws = ch.draws.len() / dim.max(1);
        for t in 0..n_draws {
            let pos = &ch.draws[t * dim..(t + 1) * dim];
            let cond = work.conditional_at(pos)?;
            let mut rng =
                Rng::substream(cfg.hmc.seed, &[0x11ed, ch.chain_id as u64, t as u64]);
            let draw = cond.sample(&mut rng);
            for j in 0..m {
                cond_means[j].push(cond.mean[j]);
                pred_draws[j].push(draw[j]);
            }
            let (theta, u) = model.decode(pos);
            for (k, prm) in model.sampled_params().iter().enumerate() {
                param_draws[k].push(theta[*prm as usize]);
            }
            if let Some(store) = u_draws.as_mut() {
                store.extend_from_slice(u);
            }
            if cfg.kappa > 0.0 {
                log_w.push(work.inflated_log_weight(pos, cfg.kappa)?);
            }
        }
    }

    let (weights, weight_ess) = if cfg.kappa > 0.0 {
        let (w, ess) = normalize_log_weights(&log_w);
        (Some(w), Some(ess))
    } else {
        (None, None)
    };

    let mut predictive_mean = Vec::with_capacity(m);
    let mut predictive_var = Vec::with_capacity(m);
    let mut predictive_interval = Vec::with_capacity(m);
    for j in 0..m {
        match &weights {
            None => {
                predictive_mean.push(math::pairwise_mean(&cond_means[j]));
                let mu = math::pairwise_mean(&pred_draws[j]);
                let dev: Vec<f64> = pred_draws[j].iter().map(|&x| (x - mu) * (x - mu)).collect();
                predictive_var.push(if total > 1 {
                    math::pairwise_sum(&dev) / (total - 1) as f64
                } else {
                    0.0
                });
                predictive_interval.push((
                    math::quantile(&pred_draws[j], 0.5 * cfg.alpha),
                    math::quantile(&pred_draws[j], 1.0 - 0.5 * cfg.alpha),
                ));
            }
            Some(w) => {
                let mean_rb: f64 = cond_means[j].iter().zip(w).map(|(&x, &wi)| x * wi).sum();
                predictive_mean.push(mean_rb);
                let mu: f64 = pred_draws[j].iter().zip(w).map(|(&x, &wi)| x * wi).sum();
                let var: f64 = pred_draws[j]
                    .iter()
                    .zip(w)
                    .map(|(&x, &wi)| wi * (x - mu) * (x - mu))
                    .sum();
                predictive_var.push(var);
                predictive_interval.push((
                    weighted_quantile(&pred_draws[j], w, 0.5 * cfg.alpha),
                    weighted_quantile(&pred_draws[j], w, 1.0 - 0.5 * cfg.alpha),
                ));
            }
        }
    }

    let rhat = split_rhat(chains, dim);
    let ess = if cfg.compute_ess {
        effective_sample_size(chains, dim)
    } else {
        vec![f64::NAN; dim]
    };
    let coord_names: Vec<String> = (0..dim).map(|i| model.coord_name(i)).collect();
    let mut warnings = sampler::mixing_warnings(&rhat, |i| model.coord_name(i));
    if let Some(we) = weight_ess {
        if we < 0.05 * total as f64 {
            warnings.push(format!(
                "importance weight ESS {we:.1} below 5% of {total} draws; consider a smaller kappa"
            ));
        }
    }

    let mut pred_flat = Vec::with_capacity(total * m);
    for t in 0..total {
        for j in 0..m {
            pred_flat.push(pred_draws[j][t]);
        }
    }

    Ok(PosteriorSummary {
        predictive_mean,
        predictive_var,
        predictive_interval,
        predictive_draws: pred_flat,
        param_names: model
            .sampled_params()
            .iter()
            .map(|&p| param_name(p).into())
            .collect(),
        param_draws,
        u_draws,
        coord_names,
        rhat,
        ess,
        accept_rate: math::pairwise_mean(
            &chains.iter().map(|c| c.accept_rate).collect::<Vec<_>>(),
        ),
        divergences: chains.iter().map(|c| c.divergences).sum(),
        step_sizes: chains.iter().map(|c| c.step_size).collect(),
        warnings,
        weights,
        weight_ess,
    })
}

/// Run the full posterior computation serially: plan initial positions, run
/// every chain, and summarize. With no latent coordinates and no sampled
/// parameters (zero error variance, known `theta`) the posterior is the
/// exact Gaussian conditional and no MCMC runs at all.
pub fn run_hmc(model: &GpModel, cfg: &HmcRunConfig) -> Result<PosteriorSummary> {
    if model.dim() == 0 {
        return exact_conditional_summary(model, cfg);
    }
    let inits = plan_inits(model, cfg)?;
    let chains: Vec<ChainRun> = inits
        .iter()
        .enumerate()
        .map(|(c, init)| run_single_chain(model, cfg, c, init))
        .collect();
    summarize(model, cfg, &chains)
}

fn exact_conditional_summary(model: &GpModel, cfg: &HmcRunConfig) -> Result<PosteriorSummary> {
    let m = model.n_targets();
    let mut work = model.clone();
    let cond = work.conditional_at(&[])?;
    let total = cfg.hmc.n_chains * cfg.hmc.n_draws;
    let mut pred_draws = vec![Vec::with_capacity(total); m];
    let mut pred_flat = Vec::with_capacity(total * m);
    for t in 0..total {
        let mut rng = Rng::substream(cfg.hmc.seed, &[0x11ed, 0, t as u64]);
        let draw = cond.sample(&mut rng);
        for j in 0..m {
            pred_draws[j].push(draw[j]);
            pred_flat.push(draw[j]);
        }
    }
    let mut predictive_var = Vec::with_capacity(m);
    let mut predictive_interval = Vec::with_capacity(m);
    for j in 0..m {
        let mu = math::pairwise_mean(&pred_draws[j]);
        let dev: Vec<f64> = pred_draws[j].iter().map(|&x| (x - mu) * (x - mu)).collect();
        predictive_var.push(math::pairwise_sum(&dev) / (total - 1).max(1) as f64);
        predictive_interval.push((
            math::quantile(&pred_draws[j], 0.5 * cfg.alpha),
            math::quantile(&pred_draws[j], 1.0 - 0.5 * cfg.alpha),
        ));
    }
    Ok(PosteriorSummary {
        predictive_mean: cond.mean.clone(),
        predictive_var,
        predictive_interval,
        predictive_draws: pred_flat,
        param_names: Vec::new(),
        param_draws: Vec::new(),
        u_draws: None,
        coord_names: Vec::new(),
        rhat: Vec::new(),
        ess: Vec::new(),
        accept_rate: 1.0,
        divergences: 0,
        step_sizes: Vec::new(),
        warnings: Vec::new(),
        weights: None,
        weight_ess: None,
    })
}
