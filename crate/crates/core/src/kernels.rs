//! Base covariance functions and the location-error induced covariances.
//!
//! With location errors `u`, the observable surface `y(s) = x(s + u)` has
//! second moments
//!
//! ```text
//! k(s1, s2)  = E[c(s1 + u1, s2 + u2)]   (s1 != s2, independent errors)
//! k(s, s)    = E[c(s + u, s + u)]       (one shared error)
//! k*(s, s*)  = E[c(s + u, s*)]          (cross-covariance with latent x)
//! ```
//!
//! where the expectations run over the error distribution. For the squared
//! exponential family with iid Gaussian errors these integrals close:
//!
//! ```text
//! k(s1, s2) = tau^2 (1 + 4 beta su2)^{-p/2} exp(-beta |s1-s2|^2 / (1 + 4 beta su2))
//! k*(s, s*) = tau^2 (1 + 2 beta su2)^{-p/2} exp(-beta |s-s*|^2  / (1 + 2 beta su2))
//! ```
//!
//! Every other combination is evaluated by Monte Carlo with counter-based
//! substreams per matrix entry, so assembled matrices are reproducible and
//! exactly symmetric.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geo;
use crate::linalg::Mat;
use crate::math;
use crate::rng::Rng;

/// Default Monte Carlo sample count per kernel matrix entry.
pub const DEFAULT_KERNEL_MC: usize = 4096;

/// Covariance function family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    /// `c(s1,s2) = tau^2 exp(-beta |s1-s2|^2) + sigma2_x 1{s1=s2}` on R^p.
    SquaredExponential,
    /// `c(s1,s2) = tau^2 exp(-beta d(s1,s2)) + sigma2_x 1{s1=s2}` with `d`
    /// the great-circle distance (km) between (lon, lat) points in degrees.
    ExponentialGeodesic,
}

/// Covariance function parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    /// Family of the base covariance.
    pub family: KernelFamily,
    /// Signal variance `tau^2 > 0` (response units squared).
    pub tau2: f64,
    /// Inverse length-scale `beta > 0` (per squared distance for the squared
    /// exponential family, per km for the geodesic family).
    pub beta: f64,
    /// Nugget variance `sigma2_x >= 0`, added on exactly coincident points.
    pub sigma2_x: f64,
}

impl KernelSpec {
    /// Squared-exponential spec.
    pub fn squared_exponential(tau2: f64, beta: f64, sigma2_x: f64) -> Self {
        KernelSpec {
            family: KernelFamily::SquaredExponential,
            tau2,
            beta,
            sigma2_x,
        }
    }

    /// Geodesic exponential spec.
    pub fn exponential_geodesic(tau2: f64, beta: f64, sigma2_x: f64) -> Self {
        KernelSpec {
            family: KernelFamily::ExponentialGeodesic,
            tau2,
            beta,
            sigma2_x,
        }
    }

    /// Check the parameter domain.
    pub fn validate(&self) -> Result<()> {
        if !(self.tau2 > 0.0) || !self.tau2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tau2 must be positive, got {}",
                self.tau2
            )));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.sigma2_x >= 0.0) || !self.sigma2_x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma2_x must be non-negative, got {}",
                self.sigma2_x
            )));
        }
        Ok(())
    }

    /// Smooth (nugget-free) covariance as a function of the family's distance
    /// measure: squared Euclidean distance or great-circle km.
    #[inline]
    pub fn smooth_at(&self, dist_measure: f64) -> f64 {
        self.tau2 * math::exp(-self.beta * dist_measure)
    }
}

/// Distribution of the location errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorModelKind {
    /// No location error.
    None,
    /// `u ~ N(0, sigma2_u I_p)` in the coordinates of the input space.
    IidGaussian,
    /// Longitude/latitude displacement with latitude-corrected covariance
    /// `sigma2_u (180/(pi r))^2 diag(1/cos^2(lat), 1)` in degrees squared.
    GeodesicGaussian,
}

/// Location-error model: distribution kind, variance, input dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorModel {
    /// Distribution of the displacement.
    pub kind: ErrorModelKind,
    /// Error variance `sigma2_u >= 0` (squared distance units; km^2 for the
    /// geodesic model).
    pub sigma2_u: f64,
    /// Input space dimension `p`.
    pub dim: usize,
}

impl ErrorModel {
    /// Error-free model.
    pub fn none(dim: usize) -> Self {
        ErrorModel {
            kind: ErrorModelKind::None,
            sigma2_u: 0.0,
            dim,
        }
    }

    /// Isotropic iid Gaussian errors.
    pub fn iid_gaussian(sigma2_u: f64, dim: usize) -> Self {
        ErrorModel {
            kind: ErrorModelKind::IidGaussian,
            sigma2_u,
            dim,
        }
    }

    /// Longitude/latitude Gaussian errors (input dimension 2).
    pub fn geodesic_gaussian(sigma2_u: f64) -> Self {
        ErrorModel {
            kind: ErrorModelKind::GeodesicGaussian,
            sigma2_u,
            dim: 2,
        }
    }

    /// Check the parameter domain.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2_u >= 0.0) || !self.sigma2_u.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma2_u must be non-negative, got {}",
                self.sigma2_u
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dim must be positive".into()));
        }
        Ok(())
    }

    /// True when the model behaves as `sigma2_u = 0`.
    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ErrorModelKind::None) || self.sigma2_u == 0.0
    }

    /// Draw one displacement for an observation at `site` into `out`.
    pub fn draw(&self, site: &[f64], rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            ErrorModelKind::None => out.fill(0.0),
            ErrorModelKind::IidGaussian => {
                let sd = math::sqrt(self.sigma2_u);
                for v in out.iter_mut() {
                    *v = sd * rng.normal();
                }
            }
            ErrorModelKind::GeodesicGaussian => {
                let [var_lon, var_lat] = geo::geo_error_cov(site[1], self.sigma2_u)?;
                out[0] = math::sqrt(var_lon) * rng.normal();
                out[1] = math::sqrt(var_lat) * rng.normal();
            }
        }
        Ok(())
    }

    /// Per-coordinate prior variances of the displacement at `site`.
    pub fn coord_variances(&self, site: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            ErrorModelKind::None => Ok(vec![0.0; self.dim]),
            ErrorModelKind::IidGaussian => Ok(vec![self.sigma2_u; self.dim]),
            ErrorModelKind::GeodesicGaussian => {
                let [var_lon, var_lat] = geo::geo_error_cov(site[1], self.sigma2_u)?;
                Ok(vec![var_lon, var_lat])
            }
        }
    }
}

/// A set of `n` points in a `p`-dimensional input space, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct Locations {
    dim: usize,
    data: Vec<f64>,
}

impl Locations {
    /// Empty set of `dim`-dimensional points.
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Locations {
            dim,
            data: Vec::new(),
        }
    }

    /// Wrap a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0);
        Locations { dim, data }
    }

    /// Append one point.
    pub fn push(&mut self, point: &[f64]) {
        assert_eq!(point.len(), self.dim);
        self.data.extend_from_slice(point);
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// True when no points are stored.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point `i`.
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Flat coordinate buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Iterator over points.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Pointwise displaced copy (`self + u`), `u` flat with matching shape.
    pub fn displaced(&self, u: &[f64]) -> Locations {
        assert_eq!(u.len(), self.data.len());
        let data = self.data.iter().zip(u).map(|(a, b)| a + b).collect();
        Locations {
            dim: self.dim,
            data,
        }
    }
}

#[inline]
fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

fn check_dims(spec: &KernelSpec, s1: &[f64], s2: &[f64]) -> Result<()> {
    if s1.len() != s2.len() {
        return Err(Error::DimensionMismatch {
            expected: s1.len(),
            got: s2.len(),
        });
    }
    if spec.family == KernelFamily::ExponentialGeodesic && s1.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: s1.len(),
        });
    }
    Ok(())
}

fn check_err_dim(err: &ErrorModel, s: &[f64]) -> Result<()> {
    if err.dim != s.len() {
        return Err(Error::DimensionMismatch {
            expected: err.dim,
            got: s.len(),
        });
    }
    Ok(())
}

/// Distance measure the family's covariance decays in: squared Euclidean
/// distance for the squared exponential, great-circle km for the geodesic.
#[inline]
pub fn distance_measure(family: KernelFamily, s1: &[f64], s2: &[f64]) -> f64 {
    match family {
        KernelFamily::SquaredExponential => sq_dist(s1, s2),
        KernelFamily::ExponentialGeodesic => {
            geo::great_circle_deg(s1[0], s1[1], s2[0], s2[1])
        }
    }
}

/// Base covariance `c(s1, s2)`; the nugget enters iff the two points are
/// bitwise identical.
pub fn eval_c(spec: &KernelSpec, s1: &[f64], s2: &[f64]) -> Result<f64> {
    spec.validate()?;
    check_dims(spec, s1, s2)?;
    let smooth = spec.smooth_at(distance_measure(spec.family, s1, s2));
    Ok(if bits_equal(s1, s2) {
        smooth + spec.sigma2_x
    } else {
        smooth
    })
}

fn require_closed_form(spec: &KernelSpec, err: &ErrorModel) -> Result<()> {
    let ok = spec.family == KernelFamily::SquaredExponential
        && matches!(
            err.kind,
            ErrorModelKind::None | ErrorModelKind::IidGaussian
        );
    if ok {
        Ok(())
    } else {
        Err(Error::NoClosedForm(
            "induced kernel of this family/error-model pair",
        ))
    }
}

/// Closed-form induced covariance `k(s1, s2)` (squared exponential family,
/// iid Gaussian errors). The variance line `k(s, s)` carries the
/// observation-level nugget: `tau^2 + sigma2_x`.
pub fn eval_k_closed(spec: &KernelSpec, err: &ErrorModel, s1: &[f64], s2: &[f64]) -> Result<f64> {
    spec.validate()?;
    err.validate()?;
    check_dims(spec, s1, s2)?;
    check_err_dim(err, s1)?;
    require_closed_form(spec, err)?;
    if bits_equal(s1, s2) {
        return Ok(spec.tau2 + spec.sigma2_x);
    }
    let p = s1.len() as f64;
    let a = 1.0 + 4.0 * spec.beta * err.sigma2_u;
    Ok(spec.tau2 / math::powf(a, 0.5 * p) * math::exp(-spec.beta * sq_dist(s1, s2) / a))
}

/// Closed-form induced cross-covariance `k*(s, s*)` between an observation at
/// nominal `s` and the latent process at exact `s*`; never carries a nugget.
pub fn eval_kstar_closed(
    spec: &KernelSpec,
    err: &ErrorModel,
    s: &[f64],
    sstar: &[f64],
) -> Result<f64> {
    spec.validate()?;
    err.validate()?;
    check_dims(spec, s, sstar)?;
    check_err_dim(err, s)?;
    require_closed_form(spec, err)?;
    let p = s.len() as f64;
    let a = 1.0 + 2.0 * spec.beta * err.sigma2_u;
    Ok(spec.tau2 / math::powf(a, 0.5 * p) * math::exp(-spec.beta * sq_dist(s, sstar) / a))
}

/// Monte Carlo estimate of `k(s1, s2)` from `n_mc` error draws; deterministic
/// given `seed`. Bitwise-identical points share a single error draw (the
/// variance line); distinct points get independent draws.
pub fn eval_k_mc(
    spec: &KernelSpec,
    err: &ErrorModel,
    s1: &[f64],
    s2: &[f64],
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    spec.validate()?;
    err.validate()?;
    check_dims(spec, s1, s2)?;
    check_err_dim(err, s1)?;
    if n_mc == 0 {
        return Err(Error::InvalidParameter("n_mc must be at least 1".into()));
    }
    if err.is_zero() {
        // all draws are identical; the average is the base covariance exactly
        return eval_c(spec, s1, s2);
    }
    let mut rng = Rng::from_seed(seed);
    let p = s1.len();
    let mut u1 = vec![0.0; p];
    let mut u2 = vec![0.0; p];
    let mut p1 = vec![0.0; p];
    let mut p2 = vec![0.0; p];
    let shared = bits_equal(s1, s2);
    let mut draws = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        err.draw(s1, &mut rng, &mut u1)?;
        if shared {
            for d in 0..p {
                p1[d] = s1[d] + u1[d];
            }
            draws.push(eval_c(spec, &p1, &p1)?);
        } else {
            err.draw(s2, &mut rng, &mut u2)?;
            for d in 0..p {
                p1[d] = s1[d] + u1[d];
                p2[d] = s2[d] + u2[d];
            }
            draws.push(eval_c(spec, &p1, &p2)?);
        }
    }
    Ok(math::pairwise_mean(&draws))
}

/// Monte Carlo estimate of `k*(s, s*)`; the error displaces `s` only.
pub fn eval_kstar_mc(
    spec: &KernelSpec,
    err: &ErrorModel,
    s: &[f64],
    sstar: &[f64],
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    spec.validate()?;
    err.validate()?;
    check_dims(spec, s, sstar)?;
    check_err_dim(err, s)?;
    if n_mc == 0 {
        return Err(Error::InvalidParameter("n_mc must be at least 1".into()));
    }
    if err.is_zero() {
        return Ok(spec.smooth_at(distance_measure(spec.family, s, sstar)));
    }
    let mut rng = Rng::from_seed(seed);
    let p = s.len();
    let mut u = vec![0.0; p];
    let mut ps = vec![0.0; p];
    let mut draws = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        err.draw(s, &mut rng, &mut u)?;
        for d in 0..p {
            ps[d] = s[d] + u[d];
        }
        draws.push(spec.smooth_at(distance_measure(spec.family, &ps, sstar)));
    }
    Ok(math::pairwise_mean(&draws))
}

/// Monte Carlo configuration for kernel matrix assembly.
#[derive(Clone, Copy, Debug)]
pub struct McConfig {
    /// Draws per matrix entry.
    pub n_mc: usize,
    /// Master seed; entry `(i, j)` uses the substream `[tag, i, j]`.
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_mc: DEFAULT_KERNEL_MC,
            seed: 0,
        }
    }
}

/// The covariance matrices needed by both Kriging variants.
#[derive(Clone, Debug)]
pub struct CovMatrices {
    /// `n x n` induced covariance of the observations, `k(s_i, s_j)`.
    pub k: Mat,
    /// `n x m` induced cross-covariance `k*(s_i, s*_j)`.
    pub kstar: Mat,
    /// `n x n` base covariance at the nominal locations, `c(s_i, s_j)`.
    pub c: Mat,
    /// `n x m` base cross-covariance `c(s_i, s*_j)`.
    pub cstar: Mat,
    /// `m`-vector `c(s*_j, s*_j)` (includes the nugget).
    pub c_star_star: Vec<f64>,
}

/// Assemble all covariance matrices for `obs` and `targets`, using closed
/// forms when available and entrywise Monte Carlo otherwise. `K` is computed
/// on the upper triangle and mirrored, so it is symmetric by construction.
pub fn build_cov_matrices(
    spec: &KernelSpec,
    err: &ErrorModel,
    obs: &Locations,
    targets: &Locations,
    mc: &McConfig,
) -> Result<CovMatrices> {
    spec.validate()?;
    err.validate()?;
    if obs.is_empty() {
        return Err(Error::InvalidParameter("obs must be nonempty".into()));
    }
    let n = obs.len();
    let m = targets.len();
    let closed = require_closed_form(spec, err).is_ok();

    let mut c = Mat::zeros(n, n);
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let cij = eval_c(spec, obs.point(i), obs.point(j))?;
            c.set(i, j, cij);
            c.set(j, i, cij);
            let kij = if closed {
                eval_k_closed(spec, err, obs.point(i), obs.point(j))?
            } else {
                eval_k_mc(
                    spec,
                    err,
                    obs.point(i),
                    obs.point(j),
                    mc.n_mc,
                    crate::rng::derive_seed(mc.seed, &[0, i as u64, j as u64]),
                )?
            };
            k.set(i, j, kij);
            k.set(j, i, kij);
        }
    }

    let mut cstar = Mat::zeros(n, m);
    let mut kstar = Mat::zeros(n, m);
    let mut c_star_star = Vec::with_capacity(m);
    for j in 0..m {
        c_star_star.push(eval_c(spec, targets.point(j), targets.point(j))?);
        for i in 0..n {
            cstar.set(i, j, eval_c(spec, obs.point(i), targets.point(j))?);
            let ks = if closed {
                eval_kstar_closed(spec, err, obs.point(i), targets.point(j))?
            } else {
                eval_kstar_mc(
                    spec,
                    err,
                    obs.point(i),
                    targets.point(j),
                    mc.n_mc,
                    crate::rng::derive_seed(mc.seed, &[1, i as u64, j as u64]),
                )?
            };
            kstar.set(i, j, ks);
        }
    }

    Ok(CovMatrices {
        k,
        kstar,
        c,
        cstar,
        c_star_star,
    })
}

/// Per-pair empirical distributions of the family's distance measure under
/// the error model, drawn once (common random numbers) and compressed into
/// equal-count strata. Lets an optimizer evaluate the Monte Carlo induced
/// kernel `K(theta)` as a smooth deterministic function of `theta`:
///
/// ```text
/// K_ij(theta) = tau^2 * mean_a exp(-beta * atom_a(i, j))     (i != j)
/// K_ii(theta) = tau^2 + sigma2_x
/// ```
#[derive(Clone, Debug)]
pub struct DistanceAtoms {
    n: usize,
    n_atoms: usize,
    /// Upper-triangle pair atoms, row-major over pairs (i < j).
    pair_atoms: Vec<f64>,
}

impl DistanceAtoms {
    /// Draw and compress distance atoms for all observation pairs.
    pub fn build(
        spec: &KernelSpec,
        err: &ErrorModel,
        obs: &Locations,
        n_mc: usize,
        n_atoms: usize,
        seed: u64,
    ) -> Result<Self> {
        assert!(n_atoms >= 1 && n_mc >= n_atoms);
        let n = obs.len();
        let p = obs.dim();
        let mut pair_atoms = Vec::with_capacity(n * (n - 1) / 2 * n_atoms);
        let mut u1 = vec![0.0; p];
        let mut u2 = vec![0.0; p];
        let mut p1 = vec![0.0; p];
        let mut p2 = vec![0.0; p];
        let mut dists = vec![0.0; n_mc];
        for i in 0..n {
            for j in (i + 1)..n {
                let mut rng = Rng::substream(seed, &[0, i as u64, j as u64]);
                for d in dists.iter_mut() {
                    err.draw(obs.point(i), &mut rng, &mut u1)?;
                    err.draw(obs.point(j), &mut rng, &mut u2)?;
                    for c in 0..p {
                        p1[c] = obs.point(i)[c] + u1[c];
                        p2[c] = obs.point(j)[c] + u2[c];
                    }
                    *d = distance_measure(spec.family, &p1, &p2);
                }
                dists.sort_unstable_by(f64::total_cmp);
                compress_into(&dists, n_atoms, &mut pair_atoms);
            }
        }
        Ok(DistanceAtoms {
            n,
            n_atoms,
            pair_atoms,
        })
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // offset of pair (i, j), i < j, in upper-triangle order
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Atoms of pair `(i, j)`, `i < j`.
    pub fn atoms(&self, i: usize, j: usize) -> &[f64] {
        let p = self.pair_index(i, j);
        &self.pair_atoms[p * self.n_atoms..(p + 1) * self.n_atoms]
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when built over no observations.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Fill `k` (n x n buffer) with the induced covariance at `theta =
    /// (tau2, beta, sigma2_x)` and optionally accumulate the entrywise
    /// derivatives w.r.t. `tau2` and `beta`.
    pub fn fill_k(
        &self,
        tau2: f64,
        beta: f64,
        sigma2_x: f64,
        k: &mut [f64],
        dk: Option<(&mut [f64], &mut [f64])>,
    ) {
        let n = self.n;
        let (mut dt_opt, mut db_opt) = match dk {
            Some((dt, db)) => (Some(dt), Some(db)),
            None => (None, None),
        };
        for i in 0..n {
            k[i * n + i] = tau2 + sigma2_x;
            if let (Some(dt), Some(db)) = (dt_opt.as_deref_mut(), db_opt.as_deref_mut()) {
                dt[i * n + i] = 1.0;
                db[i * n + i] = 0.0;
            }
            for j in (i + 1)..n {
                let atoms = self.atoms(i, j);
                let mut e = 0.0;
                let mut de = 0.0;
                for &a in atoms {
                    let v = math::exp(-beta * a);
                    e += v;
                    de += a * v;
                }
                let inv = 1.0 / atoms.len() as f64;
                let kij = tau2 * e * inv;
                k[i * n + j] = kij;
                k[j * n + i] = kij;
                if let (Some(dt), Some(db)) = (dt_opt.as_deref_mut(), db_opt.as_deref_mut()) {
                    let dtv = e * inv;
                    let dbv = -tau2 * de * inv;
                    dt[i * n + j] = dtv;
                    dt[j * n + i] = dtv;
                    db[i * n + j] = dbv;
                    db[j * n + i] = dbv;
                }
            }
        }
    }
}

/// Stratified compression of a sorted sample into `n_atoms` equal-count
/// means, preserving the overall mean exactly when `n_atoms` divides the
/// sample size.
fn compress_into(sorted: &[f64], n_atoms: usize, out: &mut Vec<f64>) {
    let n = sorted.len();
    for a in 0..n_atoms {
        let lo = a * n / n_atoms;
        let hi = (a + 1) * n / n_atoms;
        out.push(math::pairwise_mean(&sorted[lo..hi]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqexp(tau2: f64, beta: f64, sigma2_x: f64) -> KernelSpec {
        KernelSpec::squared_exponential(tau2, beta, sigma2_x)
    }

    #[test]
    fn eval_c_identity_and_nugget() {
        let s = [0.0, 0.0];
        assert_eq!(eval_c(&sqexp(1.0, 1.0, 0.0), &s, &s).unwrap(), 1.0);
        let v = eval_c(&sqexp(1.0, 1.0, 0.1), &s, &s).unwrap();
        assert!((v - 1.1).abs() < 1e-15);
    }

    #[test]
    fn eval_c_direct_arithmetic() {
        // tau2=2, beta=0.5, s1=(0,0), s2=(1,1): 2 exp(-1)
        let v = eval_c(&sqexp(2.0, 0.5, 0.0), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((v - 0.735_759).abs() < 1e-6);
    }

    #[test]
    fn eval_c_dimension_mismatch() {
        let e = eval_c(&sqexp(1.0, 1.0, 0.0), &[0.0, 0.0], &[0.0]).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(sqexp(0.0, 1.0, 0.0).validate().is_err());
        assert!(sqexp(1.0, -1.0, 0.0).validate().is_err());
        assert!(sqexp(1.0, 1.0, -0.1).validate().is_err());
        assert!(ErrorModel::iid_gaussian(-1.0, 2).validate().is_err());
    }

    #[test]
    fn k_closed_zero_error_degenerates_to_c() {
        let spec = sqexp(1.3, 0.7, 0.2);
        let err = ErrorModel::iid_gaussian(0.0, 2);
        let s1 = [0.5, 1.0];
        let s2 = [2.0, -1.0];
        let k = eval_k_closed(&spec, &err, &s1, &s2).unwrap();
        let c_smooth = spec.smooth_at(sq_dist(&s1, &s2));
        assert!((k - c_smooth).abs() < 1e-15);
    }

    #[test]
    fn k_closed_small_distance_limit() {
        // tau2=1, beta=1, su2=0.25, p=2: lim_{d->0} k = 1/(1+1) = 0.5
        let spec = sqexp(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.25, 2);
        let k = eval_k_closed(&spec, &err, &[0.0, 0.0], &[1e-9, 0.0]).unwrap();
        assert!((k - 0.5).abs() < 1e-8);
        // and at |d|^2 = 2: 0.5 exp(-1)
        let k2 = eval_k_closed(&spec, &err, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((k2 - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((k2 - 0.183_940).abs() < 1e-6);
    }

    #[test]
    fn kstar_closed_values() {
        let spec = sqexp(1.0, 1.0, 0.0);
        // su2=0: equals smooth c
        let err0 = ErrorModel::iid_gaussian(0.0, 2);
        let v = eval_kstar_closed(&spec, &err0, &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        // s = s*, su2=0.25, p=2: 1/1.5
        let err = ErrorModel::iid_gaussian(0.25, 2);
        let v = eval_kstar_closed(&spec, &err, &[3.0, 4.0], &[3.0, 4.0]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        // su2=0.5, |d|^2=1: 0.5 exp(-0.5)
        let err2 = ErrorModel::iid_gaussian(0.5, 2);
        let v = eval_kstar_closed(&spec, &err2, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((v - 0.5 * (-0.5f64).exp()).abs() < 1e-12);
        assert!((v - 0.303_265).abs() < 1e-6);
    }

    #[test]
    fn closed_form_unavailable_is_capability_error() {
        let spec = KernelSpec::exponential_geodesic(1.0, 0.001, 0.0);
        let err = ErrorModel::geodesic_gaussian(7500.0);
        let e = eval_k_closed(&spec, &err, &[0.0, 0.0], &[5.0, 5.0]).unwrap_err();
        assert!(matches!(e, Error::NoClosedForm(_)));
    }

    #[test]
    fn k_mc_zero_error_equals_c_exactly() {
        let spec = sqexp(1.0, 0.8, 0.0);
        let err = ErrorModel::none(2);
        let s1 = [0.0, 0.0];
        let s2 = [1.0, 2.0];
        let v = eval_k_mc(&spec, &err, &s1, &s2, 16, 9).unwrap();
        assert_eq!(v, eval_c(&spec, &s1, &s2).unwrap());
    }

    #[test]
    fn k_mc_matches_closed_form() {
        // |d|^2 = 2 case: closed form 0.18394, MC within 4/sqrt(n_mc)
        let spec = sqexp(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.25, 2);
        let n_mc = 200_000;
        let v = eval_k_mc(&spec, &err, &[0.0, 0.0], &[1.0, 1.0], n_mc, 4).unwrap();
        let closed = eval_k_closed(&spec, &err, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(
            (v - closed).abs() < 4.0 / (n_mc as f64).sqrt(),
            "mc {v} vs closed {closed}"
        );
    }

    #[test]
    fn k_mc_variance_line_geodesic() {
        // same point, shared error draw: tau^2 + sigma2_x exactly
        let spec = KernelSpec::exponential_geodesic(1.4, 0.0002, 0.3);
        let err = ErrorModel::geodesic_gaussian(7500.0);
        let s = [10.0, 45.0];
        let v = eval_k_mc(&spec, &err, &s, &s, 256, 7).unwrap();
        assert!((v - 1.7).abs() < 1e-12);
    }

    #[test]
    fn k_mc_deterministic_given_seed() {
        let spec = sqexp(1.0, 1.0, 0.0);
        let err = ErrorModel::iid_gaussian(0.5, 2);
        let a = eval_k_mc(&spec, &err, &[0.0, 0.0], &[1.0, 1.0], 1000, 11).unwrap();
        let b = eval_k_mc(&spec, &err, &[0.0, 0.0], &[1.0, 1.0], 1000, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn build_single_point_zero_error() {
        let spec = sqexp(2.0, 1.0, 0.5);
        let err = ErrorModel::none(2);
        let mut obs = Locations::new(2);
        obs.push(&[1.0, 1.0]);
        let mut targets = Locations::new(2);
        targets.push(&[0.0, 0.0]);
        let cov = build_cov_matrices(&spec, &err, &obs, &targets, &McConfig::default()).unwrap();
        assert!((cov.k.get(0, 0) - 2.5).abs() < 1e-15);
        assert!((cov.c.get(0, 0) - 2.5).abs() < 1e-15);
        assert_eq!(cov.kstar.get(0, 0), cov.cstar.get(0, 0));
    }

    #[test]
    fn build_matches_closed_form_entrywise() {
        let spec = sqexp(1.0, 0.5, 0.1);
        let err = ErrorModel::iid_gaussian(0.3, 2);
        let mut obs = Locations::new(2);
        obs.push(&[0.0, 0.0]);
        obs.push(&[1.0, 2.0]);
        let mut targets = Locations::new(2);
        targets.push(&[0.5, 0.5]);
        let cov = build_cov_matrices(&spec, &err, &obs, &targets, &McConfig::default()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect =
                    eval_k_closed(&spec, &err, obs.point(i), obs.point(j)).unwrap();
                assert_eq!(cov.k.get(i, j), expect);
            }
            let expect = eval_kstar_closed(&spec, &err, obs.point(i), targets.point(0)).unwrap();
            assert_eq!(cov.kstar.get(i, 0), expect);
        }
    }

    #[test]
    fn k_symmetric_exactly_under_mc() {
        let spec = KernelSpec::exponential_geodesic(1.0, 0.0003, 0.05);
        let err = ErrorModel::geodesic_gaussian(7500.0);
        let mut obs = Locations::new(2);
        for &(lon, lat) in &[(0.0, 40.0), (5.0, 45.0), (10.0, 50.0)] {
            obs.push(&[lon, lat]);
        }
        let targets = Locations::new(2);
        let mc = McConfig { n_mc: 512, seed: 3 };
        let cov = build_cov_matrices(&spec, &err, &obs, &targets, &mc).unwrap();
        assert_eq!(cov.k.max_asymmetry(), 0.0);
    }

    #[test]
    fn atoms_reproduce_closed_form_kernel() {
        // squared-exponential check of the compressed-atom path
        let spec = sqexp(1.0, 0.4, 0.02);
        let err = ErrorModel::iid_gaussian(0.5, 2);
        let mut obs = Locations::new(2);
        obs.push(&[0.0, 0.0]);
        obs.push(&[1.0, 1.0]);
        obs.push(&[3.0, 0.5]);
        let atoms = DistanceAtoms::build(&spec, &err, &obs, 4096, 64, 5).unwrap();
        let n = obs.len();
        let mut k = vec![0.0; n * n];
        atoms.fill_k(spec.tau2, spec.beta, spec.sigma2_x, &mut k, None);
        for i in 0..n {
            for j in 0..n {
                let expect = eval_k_closed(&spec, &err, obs.point(i), obs.point(j)).unwrap();
                let got = k[i * n + j];
                assert!(
                    (got - expect).abs() < 4.0 / (4096f64).sqrt(),
                    "atom kernel {got} vs closed {expect}"
                );
            }
        }
    }

    #[test]
    fn nugget_discontinuity_of_induced_kernel() {
        // lim_{d->0} k(d) = tau^2/(1+4 beta su2)^{p/2} < k(s,s)
        let spec = sqexp(1.0, 1.0, 0.0);
        for &su2 in &[0.01, 0.1, 1.0] {
            let err = ErrorModel::iid_gaussian(su2, 2);
            let near = eval_k_closed(&spec, &err, &[0.0, 0.0], &[1e-6, 0.0]).unwrap();
            let at = eval_k_closed(&spec, &err, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
            let limit = 1.0 / (1.0 + 4.0 * su2);
            assert!((near - limit).abs() < 1e-9);
            assert!(near < at);
        }
    }
}
