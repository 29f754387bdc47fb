//! Maximum pseudo-likelihood estimation of the covariance parameters, and
//! the Godambe (sandwich) information quantifying what location errors cost.
//!
//! The pseudo-likelihood is the Gaussian density built from the first two
//! moments of the observed process,
//!
//! ```text
//! log L~(theta; y) = -1/2 log |K_theta| - 1/2 y' K_theta^{-1} y + const,
//! ```
//!
//! maximized over `theta = (tau2, beta, sigma2_x)` with `sigma2_u` held fixed
//! (the induced squared-exponential kernel makes the full quadruple
//! unidentifiable). The pseudo-score is an unbiased estimating equation; its
//! covariance `G`, the expected negative Hessian `H`, and the Godambe
//! information `I = H G^{-1} H` are
//!
//! ```text
//! G_ij = E[ 1/2 Tr(O_i C(u) O_j C(u)) ]
//!      + 1/4 ( E[Tr(O_i C(u)) Tr(O_j C(u))] - Tr(O_i K) Tr(O_j K) )
//! H_ij = 1/2 Tr(O_i K O_j K),      O_i = K^{-1} (dK/dtheta_i) K^{-1},
//! ```
//!
//! with `C(u)` the covariance at the true (displaced) locations. Without
//! location errors `C(u) = K` and `G = H` (the second Bartlett identity).
//! The outer expectations are estimated by Monte Carlo; the product
//! `Tr(O_i K) Tr(O_j K)` uses disjoint pairs of draws so the estimator stays
//! unbiased.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{
    DistanceAtoms, ErrorModel, KernelFamily, KernelSpec, Locations,
};
use crate::linalg::{dense, Cholesky, Mat};
use crate::math;
use crate::opt::{latin_hypercube, lbfgs, BoxTransform, OptConfig};
use crate::rng::Rng;

/// Index of a covariance parameter in `theta = (tau2, beta, sigma2_x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaParam {
    /// Signal variance.
    Tau2 = 0,
    /// Inverse length-scale.
    Beta = 1,
    /// Nugget variance.
    Sigma2X = 2,
}

/// Box constraints for `(tau2, beta, sigma2_x)`.
#[derive(Clone, Debug)]
pub struct ParamBox {
    /// Bounds for `tau2`.
    pub tau2: (f64, f64),
    /// Bounds for `beta`.
    pub beta: (f64, f64),
    /// Bounds for `sigma2_x`.
    pub sigma2_x: (f64, f64),
}

impl ParamBox {
    /// The simulation-study priors: `tau2 in (0,10)`, `beta in (0.0005,3)`,
    /// `sigma2_x in (0,10)`. The `beta` range keeps at least one observation
    /// pair at a correlation away from 0 and 1, removing white-noise modes.
    pub fn table1_default() -> Self {
        ParamBox {
            tau2: (0.0, 10.0),
            beta: (5e-4, 3.0),
            sigma2_x: (0.0, 10.0),
        }
    }

    /// Defaults for the geodesic kernel, where `beta` is per km.
    pub fn geodesic_default() -> Self {
        ParamBox {
            tau2: (0.0, 10.0),
            beta: (1e-6, 0.05),
            sigma2_x: (0.0, 10.0),
        }
    }

    /// Bounds as an array indexed by [`ThetaParam`].
    pub fn as_bounds(&self) -> [(f64, f64); 3] {
        [self.tau2, self.beta, self.sigma2_x]
    }

    /// True when `theta` lies inside the (open) box.
    pub fn contains(&self, theta: &[f64; 3]) -> bool {
        let b = self.as_bounds();
        (0..3).all(|i| theta[i] > b[i].0 && theta[i] < b[i].1)
    }
}

impl Default for ParamBox {
    fn default() -> Self {
        ParamBox::table1_default()
    }
}

/// Precomputed geometry letting `K(theta)` and its entrywise derivatives be
/// evaluated repeatedly with the same Monte Carlo draws (common random
/// numbers), so the fit objective is a smooth deterministic function.
pub struct KernelMatrixModel {
    n: usize,
    family: KernelFamily,
    kind: ModelKind,
    nugget_pair: Vec<(usize, usize)>,
}

enum ModelKind {
    /// Squared exponential with iid Gaussian errors (closed form), any
    /// `sigma2_u >= 0`; stores pairwise squared distances.
    ClosedSqExp { p: f64, sigma2_u: f64, sqdist: Vec<f64> },
    /// No location error: the base kernel at fixed distances.
    ExactBase { dist: Vec<f64> },
    /// Monte Carlo kernel through compressed distance atoms.
    Atoms(DistanceAtoms),
}

impl KernelMatrixModel {
    /// Build the model for a family/error pair over fixed observations.
    pub fn build(
        family: KernelFamily,
        err: &ErrorModel,
        obs: &Locations,
        n_mc: usize,
        n_atoms: usize,
        seed: u64,
    ) -> Result<Self> {
        err.validate()?;
        let n = obs.len();
        if n == 0 {
            return Err(Error::InvalidParameter("obs must be nonempty".into()));
        }
        // bitwise-coincident distinct records keep the nugget when there is
        // no location error (they are then the same observation of x)
        let mut nugget_pair = Vec::new();
        if err.is_zero() {
            for i in 0..n {
                for j in (i + 1)..n {
                    if obs
                        .point(i)
                        .iter()
                        .zip(obs.point(j))
                        .all(|(a, b)| a.to_bits() == b.to_bits())
                    {
                        nugget_pair.push((i, j));
                    }
                }
            }
        }
        let kind = if err.is_zero() {
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = crate::kernels::distance_measure(family, obs.point(i), obs.point(j));
                    dist[i * n + j] = d;
                    dist[j * n + i] = d;
                }
            }
            ModelKind::ExactBase { dist }
        } else if family == KernelFamily::SquaredExponential
            && matches!(err.kind, crate::kernels::ErrorModelKind::IidGaussian)
        {
            let mut sqdist = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = crate::kernels::distance_measure(family, obs.point(i), obs.point(j));
                    sqdist[i * n + j] = d;
                    sqdist[j * n + i] = d;
                }
            }
            ModelKind::ClosedSqExp {
                p: obs.dim() as f64,
                sigma2_u: err.sigma2_u,
                sqdist,
            }
        } else {
            let spec_probe = KernelSpec {
                family,
                tau2: 1.0,
                beta: 1.0,
                sigma2_x: 0.0,
            };
            ModelKind::Atoms(DistanceAtoms::build(
                &spec_probe, err, obs, n_mc, n_atoms, seed,
            )?)
        };
        Ok(KernelMatrixModel {
            n,
            family,
            kind,
            nugget_pair,
        })
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the model covers no observations.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Kernel family the model was built for.
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Fill `k` with `K(theta)`; when `dk` is given, also fill the entrywise
    /// derivatives w.r.t. `tau2` and `beta` (the `sigma2_x` derivative is the
    /// identity plus the coincident-pair mask and is applied by the caller
    /// through [`KernelMatrixModel::apply_dsigma2x`]).
    pub fn fill(
        &self,
        theta: &[f64; 3],
        k: &mut [f64],
        dk: Option<(&mut [f64], &mut [f64])>,
    ) {
        let n = self.n;
        let [tau2, beta, sigma2_x] = *theta;
        match &self.kind {
            ModelKind::ExactBase { dist } => {
                fill_from_measure(n, tau2, beta, sigma2_x, dist, k, dk);
            }
            ModelKind::ClosedSqExp {
                p,
                sigma2_u,
                sqdist,
            } => {
                let a = 1.0 + 4.0 * beta * sigma2_u;
                let scale = tau2 / math::powf(a, 0.5 * p);
                let (mut dt, mut db) = match dk {
                    Some((dt, db)) => (Some(dt), Some(db)),
                    None => (None, None),
                };
                for i in 0..n {
                    k[i * n + i] = tau2 + sigma2_x;
                    if let Some(dt) = dt.as_deref_mut() {
                        dt[i * n + i] = 1.0;
                    }
                    if let Some(db) = db.as_deref_mut() {
                        db[i * n + i] = 0.0;
                    }
                    for j in (i + 1)..n {
                        let d2 = sqdist[i * n + j];
                        let v = scale * math::exp(-beta * d2 / a);
                        k[i * n + j] = v;
                        k[j * n + i] = v;
                        if let Some(dt) = dt.as_deref_mut() {
                            let g = v / tau2;
                            dt[i * n + j] = g;
                            dt[j * n + i] = g;
                        }
                        if let Some(db) = db.as_deref_mut() {
                            // d log k / d beta = -2 p su2 / a - d2 / a^2
                            let g = v * (-2.0 * p * sigma2_u / a - d2 / (a * a));
                            db[i * n + j] = g;
                            db[j * n + i] = g;
                        }
                    }
                }
            }
            ModelKind::Atoms(atoms) => {
                atoms.fill_k(tau2, beta, sigma2_x, k, dk);
            }
        }
        for &(i, j) in &self.nugget_pair {
            k[i * n + j] += sigma2_x;
            k[j * n + i] += sigma2_x;
        }
    }

    /// Entrywise derivative of `K` w.r.t. `sigma2_x` into `out`.
    pub fn apply_dsigma2x(&self, out: &mut [f64]) {
        let n = self.n;
        out.fill(0.0);
        for i in 0..n {
            out[i * n + i] = 1.0;
        }
        for &(i, j) in &self.nugget_pair {
            out[i * n + j] = 1.0;
            out[j * n + i] = 1.0;
        }
    }
}

fn fill_from_measure(
    n: usize,
    tau2: f64,
    beta: f64,
    sigma2_x: f64,
    dist: &[f64],
    k: &mut [f64],
    dk: Option<(&mut [f64], &mut [f64])>,
) {
    let (mut dt, mut db) = match dk {
        Some((dt, db)) => (Some(dt), Some(db)),
        None => (None, None),
    };
    for i in 0..n {
        k[i * n + i] = tau2 + sigma2_x;
        if let Some(dt) = dt.as_deref_mut() {
            dt[i * n + i] = 1.0;
        }
        if let Some(db) = db.as_deref_mut() {
            db[i * n + i] = 0.0;
        }
        for j in (i + 1)..n {
            let d = dist[i * n + j];
            let v = tau2 * math::exp(-beta * d);
            k[i * n + j] = v;
            k[j * n + i] = v;
            if let Some(dt) = dt.as_deref_mut() {
                let g = v / tau2;
                dt[i * n + j] = g;
                dt[j * n + i] = g;
            }
            if let Some(db) = db.as_deref_mut() {
                let g = -d * v;
                db[i * n + j] = g;
                db[j * n + i] = g;
            }
        }
    }
}

/// Log pseudo-likelihood `-1/2 log|K| - 1/2 y' K^{-1} y` (additive constant
/// dropped). Returns `-inf` when `K(theta)` is numerically singular, which
/// optimizers treat as a rejected point.
pub fn log_pseudolik(
    spec: &KernelSpec,
    err: &ErrorModel,
    obs: &Locations,
    y: &[f64],
    n_mc: usize,
    seed: u64,
) -> f64 {
    match log_pseudolik_grad(spec, err, obs, y, n_mc, seed) {
        Some((value, _)) => value,
        None => f64::NEG_INFINITY,
    }
}

/// Log pseudo-likelihood and its analytic gradient w.r.t.
/// `(tau2, beta, sigma2_x)`; `None` when the kernel matrix is singular.
pub fn log_pseudolik_grad(
    spec: &KernelSpec,
    err: &ErrorModel,
    obs: &Locations,
    y: &[f64],
    n_mc: usize,
    seed: u64,
) -> Option<(f64, [f64; 3])> {
    let model = KernelMatrixModel::build(spec.family, err, obs, n_mc, 64, seed).ok()?;
    let theta = [spec.tau2, spec.beta, spec.sigma2_x];
    value_grad(&model, &theta, y)
}

fn value_grad(model: &KernelMatrixModel, theta: &[f64; 3], y: &[f64]) -> Option<(f64, [f64; 3])> {
    let n = model.len();
    debug_assert_eq!(y.len(), n);
    let mut k = vec![0.0; n * n];
    let mut dt = vec![0.0; n * n];
    let mut db = vec![0.0; n * n];
    model.fill(theta, &mut k, Some((&mut dt, &mut db)));
    let ch = match Cholesky::factor_slice(&k, n) {
        Ok(ch) => ch,
        Err(_) => return None,
    };
    let alpha = ch.solve_vec(y);
    let value = -0.5 * ch.logdet() - 0.5 * dense::dot(&alpha, y);
    if !value.is_finite() {
        return None;
    }
    let kinv = ch.inverse();
    let mut ds = vec![0.0; n * n];
    model.apply_dsigma2x(&mut ds);
    let mut grad = [0.0; 3];
    for (gi, dm) in grad.iter_mut().zip([&dt, &db, &ds]) {
        // 1/2 (alpha' dK alpha - tr(K^{-1} dK))
        let mut quad = 0.0;
        let mut tr = 0.0;
        for a in 0..n {
            let row = &dm[a * n..(a + 1) * n];
            quad += alpha[a] * dense::dot(row, &alpha);
            tr += dense::dot(row, &kinv.as_slice()[a * n..(a + 1) * n]);
        }
        *gi = 0.5 * (quad - tr);
    }
    Some((value, grad))
}

/// Configuration for [`fit_mple`].
#[derive(Clone, Debug)]
pub struct FitConfig {
    /// Optimizer restarts (Latin hypercube initial points).
    pub n_restarts: usize,
    /// Monte Carlo draws per kernel entry when no closed form exists.
    pub kernel_n_mc: usize,
    /// Compressed strata per pair for the Monte Carlo kernel.
    pub fit_atoms: usize,
    /// Seed for the kernel draws and the restart designs.
    pub seed: u64,
    /// Inner optimizer settings.
    pub opt: OptConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_restarts: 8,
            kernel_n_mc: crate::kernels::DEFAULT_KERNEL_MC,
            fit_atoms: 64,
            seed: 0,
            opt: OptConfig::default(),
        }
    }
}

/// Result of a maximum pseudo-likelihood fit.
#[derive(Clone, Debug)]
pub struct FitResult {
    /// Kernel family fitted.
    pub family: KernelFamily,
    /// Fitted `(tau2, beta, sigma2_x)`.
    pub theta: [f64; 3],
    /// Log pseudo-likelihood at the optimum.
    pub log_pseudolik: f64,
    /// Restarts attempted.
    pub n_restarts: usize,
    /// Whether the best restart satisfied an optimizer tolerance.
    pub converged: bool,
    /// Final objective of every restart (`-inf` marks a failed start).
    pub restart_values: Vec<f64>,
    /// Godambe matrices, when requested via [`godambe`].
    pub godambe: Option<GodambeMatrices>,
}

impl FitResult {
    /// Fitted parameters as a kernel spec.
    pub fn spec(&self) -> KernelSpec {
        KernelSpec {
            family: self.family,
            tau2: self.theta[0],
            beta: self.theta[1],
            sigma2_x: self.theta[2],
        }
    }
}

/// Maximum pseudo-likelihood fit of `(tau2, beta, sigma2_x)` with `sigma2_u`
/// fixed in `err`: multistart bounded quasi-Newton over logit-transformed
/// parameters, deterministic given `cfg.seed`.
pub fn fit_mple(
    family: KernelFamily,
    err: &ErrorModel,
    obs: &Locations,
    y: &[f64],
    pbox: &ParamBox,
    cfg: &FitConfig,
) -> Result<FitResult> {
    if y.len() != obs.len() {
        return Err(Error::DimensionMismatch {
            expected: obs.len(),
            got: y.len(),
        });
    }
    let model = KernelMatrixModel::build(
        family,
        err,
        obs,
        cfg.kernel_n_mc,
        cfg.fit_atoms,
        crate::rng::derive_seed(cfg.seed, &[0xc0de]),
    )?;
    let transform = BoxTransform::new(&pbox.as_bounds());
    let mut rng = Rng::substream(cfg.seed, &[0x57a7]);
    let starts = latin_hypercube(cfg.n_restarts.max(1), 3, &mut rng);

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    let mut restart_values = Vec::with_capacity(starts.len());
    for unit in &starts {
        // map the unit-cube start into the box interior
        let mut theta0 = [0.0; 3];
        let b = pbox.as_bounds();
        for i in 0..3 {
            let u = 0.02 + 0.96 * unit[i];
            theta0[i] = b[i].0 + (b[i].1 - b[i].0) * u;
        }
        let mut t0 = [0.0; 3];
        transform.to_unconstrained(&theta0, &mut t0);
        let outcome = lbfgs(
            |t, g| {
                let mut theta_arr = [0.0; 3];
                transform.to_box(t, &mut theta_arr);
                match value_grad(&model, &theta_arr, y) {
                    None => {
                        g.fill(0.0);
                        f64::INFINITY
                    }
                    Some((v, grad_theta)) => {
                        let mut jd = [0.0; 3];
                        transform.jacobian_diag(t, &mut jd);
                        for i in 0..3 {
                            g[i] = -grad_theta[i] * jd[i];
                        }
                        -v
                    }
                }
            },
            &t0,
            &cfg.opt,
        );
        let value = -outcome.f;
        restart_values.push(value);
        let better = match &best {
            None => value.is_finite(),
            Some((bv, _, _)) => value > *bv,
        };
        if better {
            best = Some((value, outcome.x.clone(), outcome.converged));
        }
    }

    match best {
        None => Err(Error::FitFailed(format!(
            "all {} restarts failed; objective values {restart_values:?}",
            starts.len()
        ))),
        Some((value, t, converged)) => {
            let mut theta = [0.0; 3];
            transform.to_box(&t, &mut theta);
            Ok(FitResult {
                family,
                theta,
                log_pseudolik: value,
                n_restarts: starts.len(),
                converged,
                restart_values,
                godambe: None,
            })
        }
    }
}

/// Pseudo-score covariance `G`, expected negative Hessian `H`, and Godambe
/// information `I = H G^{-1} H`.
#[derive(Clone, Debug)]
pub struct GodambeMatrices {
    /// Parameters the matrices are indexed by.
    pub params: Vec<ThetaParam>,
    /// Pseudo-score covariance (Monte Carlo over displacement draws).
    pub g: Mat,
    /// Expected negative Hessian (exact given `K`).
    pub h: Mat,
    /// Godambe information `H G^{-1} H`.
    pub info: Mat,
    /// True when `G` was singular and an eigenvalue pseudo-inverse was used.
    pub pseudo_inverse_used: bool,
}

/// Compute the Godambe matrices at `spec` for the parameters in `active`.
///
/// `H` is exact given `K(theta)`. `G`'s outer expectation runs over
/// `n_mc_outer` draws of the displacement vector; the same-draw average
/// estimates `E[Tr(O_i C) Tr(O_j C)]` while the product of means term uses
/// disjoint draw pairs, keeping the estimator unbiased.
pub fn godambe(
    spec: &KernelSpec,
    err: &ErrorModel,
    obs: &Locations,
    active: &[ThetaParam],
    n_mc_outer: usize,
    seed: u64,
) -> Result<GodambeMatrices> {
    spec.validate()?;
    err.validate()?;
    if active.is_empty() {
        return Err(Error::InvalidParameter("no active parameters".into()));
    }
    if n_mc_outer < 2 {
        return Err(Error::InvalidParameter(
            "n_mc_outer must be at least 2".into(),
        ));
    }
    let n = obs.len();
    let p = obs.dim();
    let q = active.len();
    let model = KernelMatrixModel::build(
        spec.family,
        err,
        obs,
        crate::kernels::DEFAULT_KERNEL_MC,
        64,
        crate::rng::derive_seed(seed, &[0xc0de]),
    )?;
    let theta = [spec.tau2, spec.beta, spec.sigma2_x];
    let mut k = vec![0.0; n * n];
    let mut dt = vec![0.0; n * n];
    let mut db = vec![0.0; n * n];
    model.fill(&theta, &mut k, Some((&mut dt, &mut db)));
    let mut ds = vec![0.0; n * n];
    model.apply_dsigma2x(&mut ds);

    let kmat = Mat::from_vec(n, n, k);
    let ch = Cholesky::factor(&kmat)?;
    let kinv = ch.inverse();
    let dmats: Vec<Mat> = active
        .iter()
        .map(|prm| {
            let buf = match prm {
                ThetaParam::Tau2 => dt.clone(),
                ThetaParam::Beta => db.clone(),
                ThetaParam::Sigma2X => ds.clone(),
            };
            Mat::from_vec(n, n, buf)
        })
        .collect();
    let omegas: Vec<Mat> = dmats
        .iter()
        .map(|dm| kinv.matmul(dm).matmul(&kinv))
        .collect();

    // H_ij = 1/2 tr(O_i K O_j K), exact
    let ok: Vec<Mat> = omegas.iter().map(|o| o.matmul(&kmat)).collect();
    let mut h = Mat::zeros(q, q);
    for i in 0..q {
        for j in 0..=i {
            let v = 0.5 * trace_prod(&ok[i], &ok[j]);
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }

    // Monte Carlo over displacement draws
    let mut t1 = Mat::zeros(q, q);
    let mut traces = vec![vec![0.0; n_mc_outer]; q];
    let mut u = vec![0.0; p];
    let mut true_pts = vec![0.0; n * p];
    let mut cmat = Mat::zeros(n, n);
    for m in 0..n_mc_outer {
        let mut rng = Rng::substream(seed, &[1, m as u64]);
        for i in 0..n {
            err.draw(obs.point(i), &mut rng, &mut u)?;
            for d in 0..p {
                true_pts[i * p + d] = obs.point(i)[d] + u[d];
            }
        }
        for i in 0..n {
            cmat.set(i, i, spec.tau2 + spec.sigma2_x);
            for j in (i + 1)..n {
                let dm = crate::kernels::distance_measure(
                    spec.family,
                    &true_pts[i * p..(i + 1) * p],
                    &true_pts[j * p..(j + 1) * p],
                );
                let v = spec.smooth_at(dm);
                cmat.set(i, j, v);
                cmat.set(j, i, v);
            }
        }
        let oc: Vec<Mat> = omegas.iter().map(|o| o.matmul(&cmat)).collect();
        for i in 0..q {
            traces[i][m] = trace(&oc[i]);
            for j in 0..=i {
                let v = 0.5 * trace_prod(&oc[i], &oc[j]);
                t1.set(i, j, t1.get(i, j) + v);
                if i != j {
                    t1.set(j, i, t1.get(j, i) + v);
                }
            }
        }
    }

    let inv_m = 1.0 / n_mc_outer as f64;
    let pairs = n_mc_outer / 2;
    let mut g = Mat::zeros(q, q);
    for i in 0..q {
        for j in 0..=i {
            let mean_t1 = t1.get(i, j) * inv_m;
            let mut same = Vec::with_capacity(n_mc_outer);
            for m in 0..n_mc_outer {
                same.push(traces[i][m] * traces[j][m]);
            }
            let mean_same = math::pairwise_mean(&same);
            let mut cross = Vec::with_capacity(pairs);
            for l in 0..pairs {
                let a = traces[i][2 * l] * traces[j][2 * l + 1];
                let b = traces[j][2 * l] * traces[i][2 * l + 1];
                cross.push(0.5 * (a + b));
            }
            let mean_cross = math::pairwise_mean(&cross);
            let v = mean_t1 + 0.25 * (mean_same - mean_cross);
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }

    // I = H G^{-1} H, with an eigenvalue pseudo-inverse if G is singular
    let (info, pseudo_inverse_used) = match Cholesky::factor(&g) {
        Ok(chg) => (h.matmul(&chg.solve_mat(&h)), false),
        Err(_) => {
            let (vals, vecs) = crate::linalg::sym_eigen(&g);
            let vmax = vals.iter().cloned().fold(0.0, f64::max);
            let tol = 1e-12 * vmax.max(1e-300);
            let mut ginv = Mat::zeros(q, q);
            for kk in 0..q {
                if vals[kk] > tol {
                    let w = 1.0 / vals[kk];
                    for a in 0..q {
                        for b in 0..q {
                            ginv.set(
                                a,
                                b,
                                ginv.get(a, b) + w * vecs.get(a, kk) * vecs.get(b, kk),
                            );
                        }
                    }
                }
            }
            (h.matmul(&ginv).matmul(&h), true)
        }
    };

    Ok(GodambeMatrices {
        params: active.to_vec(),
        g,
        h,
        info,
        pseudo_inverse_used,
    })
}

fn trace(a: &Mat) -> f64 {
    (0..a.rows()).map(|i| a.get(i, i)).sum()
}

fn trace_prod(a: &Mat, b: &Mat) -> f64 {
    // tr(A B) = sum_ij A_ij B_ji
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a.get(i, j) * b.get(j, i);
        }
    }
    s
}
