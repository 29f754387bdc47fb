//! Simulation protocol: random grid designs, the parameter sweep, data
//! generation, and Rao-Blackwellized scoring of KALE, KILE, and HMC.
//!
//! Data live on an 8 x 8 integer grid: 54 randomly chosen cells are observed
//! through the location-error process `y_i = x(s_i + u_i)`, the other 10 are
//! interpolation targets. Scoring never draws the target values: conditional
//! on the simulated `(y, u)` the targets are exactly Gaussian, so each
//! replicate contributes its conditional expected squared error
//! `(mean_cond - x_hat)^2 + var_cond` and conditional interval coverage
//! `Phi((U - m)/sd) - Phi((L - m)/sd)`. Reported RMSE is "adjusted": the
//! irreducible nugget `sigma2_x` is subtracted from the mean squared error
//! before the root, since the conditional targets carry their own nugget.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimation::{fit_mple, FitConfig, ParamBox};
use crate::kernels::{
    build_cov_matrices, ErrorModel, KernelFamily, KernelSpec, Locations, McConfig,
};
use crate::kriging::{self, KrigingResult};
use crate::linalg::{dense, Cholesky, Mat};
use crate::math;
use crate::posterior::{run_hmc, GpModel, HmcRunConfig};
use crate::rng::Rng;
use crate::sampler::HmcConfig;

/// Grid side of the simulation design.
pub const GRID_SIDE: usize = 8;
/// Observed locations per design.
pub const N_OBS: usize = 54;
/// Interpolation targets per design.
pub const N_TARGETS: usize = GRID_SIDE * GRID_SIDE - N_OBS;

/// `beta` values of the simulation sweep.
pub const TABLE1_BETA: [f64; 6] = [0.001, 0.01, 0.1, 0.5, 1.0, 2.0];
/// `sigma2_x` values of the simulation sweep.
pub const TABLE1_SIGMA2_X: [f64; 5] = [0.0001, 0.01, 0.1, 0.5, 1.0];
/// `sigma2_u` values of the simulation sweep.
pub const TABLE1_SIGMA2_U: [f64; 5] = [0.0001, 0.01, 0.1, 0.5, 1.0];

/// Observation/target split of the grid.
#[derive(Clone, Debug)]
pub struct Design {
    /// Observed locations (54 points in the unit-grid coordinates).
    pub obs: Locations,
    /// Held-out targets (10 points).
    pub targets: Locations,
}

/// Uniformly sample 54 of the 64 grid points as observed, the rest as
/// targets; deterministic per seed.
pub fn make_design(seed: u64) -> Design {
    let mut idx: Vec<usize> = (0..GRID_SIDE * GRID_SIDE).collect();
    let mut rng = Rng::substream(seed, &[0xde51]);
    rng.shuffle(&mut idx);
    let mut obs = Locations::new(2);
    let mut targets = Locations::new(2);
    for (rank, &cell) in idx.iter().enumerate() {
        let pt = [(cell / GRID_SIDE) as f64, (cell % GRID_SIDE) as f64];
        if rank < N_OBS {
            obs.push(&pt);
        } else {
            targets.push(&pt);
        }
    }
    Design { obs, targets }
}

/// One cell of the parameter sweep (`tau2 = 1` throughout).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    /// Inverse length-scale.
    pub beta: f64,
    /// Nugget variance.
    pub sigma2_x: f64,
    /// Location-error variance.
    pub sigma2_u: f64,
    /// Whether predictions use the true parameters or fitted ones.
    pub params_known: bool,
    /// Replicates.
    pub n_reps: usize,
}

impl SweepCell {
    /// Kernel at the cell's true parameters.
    pub fn spec(&self) -> KernelSpec {
        KernelSpec::squared_exponential(1.0, self.beta, self.sigma2_x)
    }

    /// Error model of the cell.
    pub fn err(&self) -> ErrorModel {
        ErrorModel::iid_gaussian(self.sigma2_u, 2)
    }

    /// Stable label for output files.
    pub fn label(&self) -> String {
        format!(
            "beta{}_sx{}_su{}_{}",
            self.beta,
            self.sigma2_x,
            self.sigma2_u,
            if self.params_known { "known" } else { "est" }
        )
    }
}

/// The full 6 x 5 x 5 sweep grid.
pub fn table1_cells(params_known: bool, n_reps: usize) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for &beta in &TABLE1_BETA {
        for &sigma2_x in &TABLE1_SIGMA2_X {
            for &sigma2_u in &TABLE1_SIGMA2_U {
                cells.push(SweepCell {
                    beta,
                    sigma2_x,
                    sigma2_u,
                    params_known,
                    n_reps,
                });
            }
        }
    }
    cells
}

/// One simulated replicate.
#[derive(Clone, Debug)]
pub struct Rep {
    /// True displacements, flattened `n x 2`.
    pub u: Vec<f64>,
    /// Observations at the displaced locations.
    pub y: Vec<f64>,
    /// Latent target values, drawn jointly with `y` (used only by naive
    /// scoring and bias checks; Rao-Blackwell scoring ignores them).
    pub x_star: Vec<f64>,
}

/// Draw `u`, then `(y, x*)` jointly from the exact Gaussian law of the field
/// at the displaced observation sites and the target sites (nugget on every
/// diagonal entry).
pub fn simulate_rep(
    spec: &KernelSpec,
    err: &ErrorModel,
    design: &Design,
    seed: u64,
) -> Result<Rep> {
    let n = design.obs.len();
    let m = design.targets.len();
    let p = design.obs.dim();
    let mut rng = Rng::substream(seed, &[0x5e9]);
    let mut u = vec![0.0; n * p];
    let mut du = vec![0.0; p];
    let mut all = Locations::new(p);
    for i in 0..n {
        err.draw(design.obs.point(i), &mut rng, &mut du)?;
        let mut pt = vec![0.0; p];
        for d in 0..p {
            u[i * p + d] = du[d];
            pt[d] = design.obs.point(i)[d] + du[d];
        }
        all.push(&pt);
    }
    for j in 0..m {
        all.push(design.targets.point(j));
    }
    let total = n + m;
    let mut cov = Mat::zeros(total, total);
    for a in 0..total {
        for b in a..total {
            let v = crate::kernels::eval_c(spec, all.point(a), all.point(b))?;
            cov.set(a, b, v);
            cov.set(b, a, v);
        }
    }
    let ch = Cholesky::factor(&cov)?;
    let l = ch.lower();
    let mut z = vec![0.0; total];
    rng.normal_fill(&mut z);
    let mut x = vec![0.0; total];
    for i in 0..total {
        x[i] = dense::dot(&l[i * total..i * total + i + 1], &z[..i + 1]);
    }
    Ok(Rep {
        u,
        y: x[..n].to_vec(),
        x_star: x[n..].to_vec(),
    })
}

/// A method's predictions offered for scoring.
#[derive(Clone, Debug)]
pub struct ScoredPrediction {
    /// Point predictions per target.
    pub mean: Vec<f64>,
    /// Optional intervals per target.
    pub interval: Option<Vec<(f64, f64)>>,
}

/// Per-replicate adjusted RMSE and coverage for each offered prediction set,
/// scored against the exact conditional of the targets given `(y, u)`.
pub fn rao_blackwell_scores(
    spec: &KernelSpec,
    err: &ErrorModel,
    design: &Design,
    rep: &Rep,
    preds: &[ScoredPrediction],
) -> Result<Vec<(f64, Option<f64>)>> {
    let m = design.targets.len();
    let mut model = GpModel::with_known_params(
        spec,
        err,
        design.obs.clone(),
        rep.y.clone(),
        design.targets.clone(),
    )?;
    let pos = if model.n_u() > 0 { rep.u.clone() } else { Vec::new() };
    let cond = model.conditional_at(&pos)?;
    let mut out = Vec::with_capacity(preds.len());
    for pred in preds {
        if pred.mean.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: pred.mean.len(),
            });
        }
        let mut sq = Vec::with_capacity(m);
        for j in 0..m {
            let d = cond.mean[j] - pred.mean[j];
            sq.push(d * d + cond.cov.get(j, j));
        }
        let mse_adj = math::pairwise_mean(&sq) - spec.sigma2_x;
        let rmse = math::sqrt(mse_adj.max(0.0));
        let coverage = pred.interval.as_ref().map(|iv| {
            let mut cov_j = Vec::with_capacity(m);
            for j in 0..m {
                let sd = math::sqrt(cond.cov.get(j, j).max(0.0));
                let (lo, hi) = iv[j];
                let c = if sd > 0.0 {
                    math::normal_cdf((hi - cond.mean[j]) / sd)
                        - math::normal_cdf((lo - cond.mean[j]) / sd)
                } else {
                    f64::from(u8::from(lo <= cond.mean[j] && cond.mean[j] <= hi))
                };
                cov_j.push(c);
            }
            math::pairwise_mean(&cov_j)
        });
        out.push((rmse, coverage));
    }
    Ok(out)
}

/// Naive per-replicate scores using the actually drawn target values (used
/// to validate the Rao-Blackwellized path).
pub fn naive_scores(
    spec: &KernelSpec,
    design: &Design,
    rep: &Rep,
    preds: &[ScoredPrediction],
) -> Vec<(f64, Option<f64>)> {
    let m = design.targets.len();
    preds
        .iter()
        .map(|pred| {
            let mut sq = Vec::with_capacity(m);
            for j in 0..m {
                let d = rep.x_star[j] - pred.mean[j];
                sq.push(d * d);
            }
            let rmse = math::sqrt((math::pairwise_mean(&sq) - spec.sigma2_x).max(0.0));
            let coverage = pred.interval.as_ref().map(|iv| {
                let mut hits = 0.0;
                for j in 0..m {
                    if iv[j].0 <= rep.x_star[j] && rep.x_star[j] <= iv[j].1 {
                        hits += 1.0;
                    }
                }
                hits / m as f64
            });
            (rmse, coverage)
        })
        .collect()
}

/// Prediction method scored in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Kriging with the induced kernel and exact error-CDF intervals.
    Kale,
    /// Kriging ignoring the location errors, naive normal intervals.
    Kile,
    /// Hamiltonian Monte Carlo minimum-MSE prediction.
    Hmc,
}

impl Method {
    /// Stable lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            Method::Kale => "kale",
            Method::Kile => "kile",
            Method::Hmc => "hmc",
        }
    }
}

/// Configuration of a cell run.
#[derive(Clone, Debug)]
pub struct CellRunConfig {
    /// Methods to score.
    pub methods: Vec<Method>,
    /// HMC chains per replicate.
    pub n_chains: usize,
    /// Warmup iterations per chain.
    pub n_warmup: usize,
    /// Retained draws per chain.
    pub n_draws: usize,
    /// Leapfrog steps.
    pub leapfrog_steps: usize,
    /// Dual-averaging target acceptance.
    pub target_accept: f64,
    /// Re-estimate the mass matrix during warmup.
    pub adapt_mass: bool,
    /// Step-size jitter half-width.
    pub step_jitter: f64,
    /// Displacement initialization dispersion.
    pub init_scale: f64,
    /// Interval level `1 - alpha`.
    pub alpha: f64,
    /// Displacement draws behind the KALE error CDF.
    pub cdf_n_mc: usize,
    /// Fit settings (estimated-parameter cells).
    pub fit: FitConfig,
    /// Fit box (estimated-parameter cells).
    pub param_box: ParamBox,
    /// Cell seed; replicate `r` uses substream `[r]`.
    pub seed: u64,
}

impl Default for CellRunConfig {
    fn default() -> Self {
        CellRunConfig {
            methods: vec![Method::Kale, Method::Kile, Method::Hmc],
            n_chains: 2,
            n_warmup: 500,
            n_draws: 1000,
            leapfrog_steps: 16,
            target_accept: 0.8,
            adapt_mass: true,
            step_jitter: 0.1,
            init_scale: 2.0,
            alpha: 0.05,
            cdf_n_mc: kriging::DEFAULT_CDF_MC,
            fit: FitConfig::default(),
            param_box: ParamBox::table1_default(),
            seed: 0,
        }
    }
}

/// Aggregated scores for one cell.
#[derive(Clone, Debug)]
pub struct CellScores {
    /// Methods in the order scored.
    pub methods: Vec<Method>,
    /// Mean adjusted RMSE per method.
    pub rmse: Vec<f64>,
    /// Monte Carlo standard error of the RMSE mean.
    pub rmse_se: Vec<f64>,
    /// Mean interval coverage per method.
    pub coverage: Vec<f64>,
    /// Monte Carlo standard error of the coverage mean.
    pub coverage_se: Vec<f64>,
    /// Replicates that failed outright.
    pub n_fail: usize,
    /// True when more than 5% of replicates failed.
    pub flagged: bool,
}

struct KnownThetaKale {
    result_weights: Mat,
    interval_offsets: Vec<(f64, f64)>,
}

/// Run every replicate of a cell serially and aggregate.
///
/// Deterministic given `cfg.seed` (replicates use counter-derived
/// substreams, so a parallel driver scheduling whole cells on workers gets
/// identical numbers).
pub fn run_cell(cell: &SweepCell, design: &Design, cfg: &CellRunConfig) -> Result<CellScores> {
    let spec = cell.spec();
    let err = cell.err();
    let n = design.obs.len();
    let m = design.targets.len();
    let mc = McConfig {
        n_mc: crate::kernels::DEFAULT_KERNEL_MC,
        seed: crate::rng::derive_seed(cfg.seed, &[0xc0]),
    };

    // Known-theta precomputation shared by all replicates: Kriging weights
    // and interval geometry do not depend on y.
    let mut known: Option<(crate::kernels::CovMatrices, KnownThetaKale, KrigingResult)> = None;
    if cell.params_known {
        let cov = build_cov_matrices(&spec, &err, &design.obs, &design.targets, &mc)?;
        let kale = kriging::kale_predict(&cov, &vec![0.0; n])?;
        let cdfs = kriging::kale_error_cdfs(
            &spec,
            &err,
            &design.obs,
            &design.targets,
            cfg.cdf_n_mc,
            crate::rng::derive_seed(cfg.seed, &[0xcd]),
            None,
        )?;
        let mut interval_offsets = Vec::with_capacity(m);
        for cdf in &cdfs {
            interval_offsets.push((
                cdf.quantile(0.5 * cfg.alpha)?,
                cdf.quantile(1.0 - 0.5 * cfg.alpha)?,
            ));
        }
        let kile = kriging::kile_predict(&cov, &vec![0.0; n], Some(cfg.alpha))?;
        known = Some((
            cov,
            KnownThetaKale {
                result_weights: kale.weights,
                interval_offsets,
            },
            kile,
        ));
    }

    let mut per_method_rmse: Vec<Vec<f64>> = vec![Vec::new(); cfg.methods.len()];
    let mut per_method_cov: Vec<Vec<f64>> = vec![Vec::new(); cfg.methods.len()];
    let mut n_fail = 0usize;

    for r in 0..cell.n_reps {
        let rep_seed = crate::rng::derive_seed(cfg.seed, &[1, r as u64]);
        match run_one_rep(cell, design, cfg, &spec, &err, known.as_ref(), rep_seed) {
            Ok(scores) => {
                for (k, (rmse, coverage)) in scores.iter().enumerate() {
                    per_method_rmse[k].push(*rmse);
                    if let Some(c) = coverage {
                        per_method_cov[k].push(*c);
                    }
                }
            }
            Err(_) => n_fail += 1,
        }
    }

    let reps_ok = cell.n_reps - n_fail;
    if reps_ok == 0 {
        return Err(Error::Numerical(format!(
            "every replicate of cell {} failed",
            cell.label()
        )));
    }
    let mut rmse = Vec::new();
    let mut rmse_se = Vec::new();
    let mut coverage = Vec::new();
    let mut coverage_se = Vec::new();
    for k in 0..cfg.methods.len() {
        rmse.push(math::pairwise_mean(&per_method_rmse[k]));
        rmse_se.push(math::sample_sd(&per_method_rmse[k]) / math::sqrt(reps_ok as f64));
        coverage.push(math::pairwise_mean(&per_method_cov[k]));
        coverage_se.push(math::sample_sd(&per_method_cov[k]) / math::sqrt(reps_ok as f64));
    }
    Ok(CellScores {
        methods: cfg.methods.clone(),
        rmse,
        rmse_se,
        coverage,
        coverage_se,
        n_fail,
        flagged: (n_fail as f64) > 0.05 * cell.n_reps as f64,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_one_rep(
    cell: &SweepCell,
    design: &Design,
    cfg: &CellRunConfig,
    spec: &KernelSpec,
    err: &ErrorModel,
    known: Option<&(crate::kernels::CovMatrices, KnownThetaKale, KrigingResult)>,
    rep_seed: u64,
) -> Result<Vec<(f64, Option<f64>)>> {
    let rep = simulate_rep(spec, err, design, rep_seed)?;
    let m = design.targets.len();
    let mut preds: Vec<ScoredPrediction> = Vec::with_capacity(cfg.methods.len());

    // fitted parameters when the cell demands them
    let mut fitted: Option<(KernelSpec, KernelSpec)> = None;
    if !cell.params_known {
        let mut fit_cfg = cfg.fit.clone();
        fit_cfg.seed = crate::rng::derive_seed(rep_seed, &[0xf1]);
        let kale_fit = fit_mple(
            KernelFamily::SquaredExponential,
            err,
            &design.obs,
            &rep.y,
            &cfg.param_box,
            &fit_cfg,
        )?;
        let kile_fit = fit_mple(
            KernelFamily::SquaredExponential,
            &ErrorModel::none(2),
            &design.obs,
            &rep.y,
            &cfg.param_box,
            &fit_cfg,
        )?;
        fitted = Some((kale_fit.spec(), kile_fit.spec()));
    }

    for method in &cfg.methods {
        match method {
            Method::Kale => {
                if let Some((_cov, kale, _)) = known {
                    let mut mean = Vec::with_capacity(m);
                    let mut interval = Vec::with_capacity(m);
                    for j in 0..m {
                        let mut s = 0.0;
                        for i in 0..design.obs.len() {
                            s += kale.result_weights.get(i, j) * rep.y[i];
                        }
                        mean.push(s);
                        let (lo, hi) = kale.interval_offsets[j];
                        interval.push((s + lo, s + hi));
                    }
                    preds.push(ScoredPrediction {
                        mean,
                        interval: Some(interval),
                    });
                } else {
                    let (kale_spec, _) = fitted.as_ref().unwrap();
                    let mc = McConfig {
                        n_mc: crate::kernels::DEFAULT_KERNEL_MC,
                        seed: crate::rng::derive_seed(rep_seed, &[0xc0]),
                    };
                    let cov =
                        build_cov_matrices(kale_spec, err, &design.obs, &design.targets, &mc)?;
                    let res = kriging::kale_predict(&cov, &rep.y)?;
                    let cdfs = kriging::kale_error_cdfs(
                        kale_spec,
                        err,
                        &design.obs,
                        &design.targets,
                        cfg.cdf_n_mc,
                        crate::rng::derive_seed(rep_seed, &[0xcd]),
                        None,
                    )?;
                    let mut interval = Vec::with_capacity(m);
                    for (j, cdf) in cdfs.iter().enumerate() {
                        interval.push(kriging::kale_interval(cdf, res.mean[j], cfg.alpha)?);
                    }
                    preds.push(ScoredPrediction {
                        mean: res.mean,
                        interval: Some(interval),
                    });
                }
            }
            Method::Kile => {
                if let Some((_, _, kile)) = known {
                    let mut mean = Vec::with_capacity(m);
                    let mut interval = Vec::with_capacity(m);
                    for j in 0..m {
                        let mut s = 0.0;
                        for i in 0..design.obs.len() {
                            s += kile.weights.get(i, j) * rep.y[i];
                        }
                        mean.push(s);
                        let (lo0, hi0) = kile.interval.as_ref().unwrap()[j];
                        // interval offsets around the zero-data mean
                        interval.push((s + lo0, s + hi0));
                    }
                    preds.push(ScoredPrediction {
                        mean,
                        interval: Some(interval),
                    });
                } else {
                    let (_, kile_spec) = fitted.as_ref().unwrap();
                    let mc = McConfig {
                        n_mc: crate::kernels::DEFAULT_KERNEL_MC,
                        seed: crate::rng::derive_seed(rep_seed, &[0xc1]),
                    };
                    let cov = build_cov_matrices(
                        kile_spec,
                        &ErrorModel::none(2),
                        &design.obs,
                        &design.targets,
                        &mc,
                    )?;
                    let res = kriging::kile_predict(&cov, &rep.y, Some(cfg.alpha))?;
                    preds.push(ScoredPrediction {
                        mean: res.mean,
                        interval: res.interval,
                    });
                }
            }
            Method::Hmc => {
                let run_cfg = HmcRunConfig {
                    hmc: HmcConfig {
                        n_chains: cfg.n_chains,
                        n_warmup: cfg.n_warmup,
                        n_draws: cfg.n_draws,
                        leapfrog_steps: cfg.leapfrog_steps,
                        target_accept: cfg.target_accept,
                        adapt_mass: cfg.adapt_mass,
                        step_jitter: cfg.step_jitter,
                        seed: crate::rng::derive_seed(rep_seed, &[0x44c]),
                        ..HmcConfig::default()
                    },
                    alpha: cfg.alpha,
                    kappa: 0.0,
                    store_u_draws: false,
                    compute_ess: false,
                    init_scale: cfg.init_scale,
                };
                let model = if cell.params_known {
                    GpModel::with_known_params(
                        spec,
                        err,
                        design.obs.clone(),
                        rep.y.clone(),
                        design.targets.clone(),
                    )?
                } else {
                    GpModel::with_sampled_params(
                        KernelFamily::SquaredExponential,
                        *err,
                        design.obs.clone(),
                        rep.y.clone(),
                        design.targets.clone(),
                        cfg.param_box.clone(),
                    )?
                };
                let summary = run_hmc(&model, &run_cfg)?;
                preds.push(ScoredPrediction {
                    mean: summary.predictive_mean,
                    interval: Some(summary.predictive_interval),
                });
            }
        }
    }

    rao_blackwell_scores(spec, err, design, &rep, &preds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_partitions_grid() {
        let d = make_design(5);
        assert_eq!(d.obs.len(), 54);
        assert_eq!(d.targets.len(), 10);
        let mut seen = [[false; GRID_SIDE]; GRID_SIDE];
        for pt in d.obs.iter().chain(d.targets.iter()) {
            let (i, j) = (pt[0] as usize, pt[1] as usize);
            assert!(!seen[i][j], "duplicate grid point");
            seen[i][j] = true;
        }
        assert!(seen.iter().flatten().all(|&s| s));
        // determinism and seed sensitivity
        let d2 = make_design(5);
        assert_eq!(d.obs.as_flat(), d2.obs.as_flat());
        let d3 = make_design(6);
        assert_ne!(d.obs.as_flat(), d3.obs.as_flat());
    }

    #[test]
    fn table1_grid_size() {
        assert_eq!(table1_cells(true, 100).len(), 150);
    }

    #[test]
    fn rep_moments_match_induced_kernel() {
        // empirical Var(y_i) ~ tau2 + sigma2_x and Cov(y_i, y_j) ~ k closed
        let cell = SweepCell {
            beta: 0.5,
            sigma2_x: 0.1,
            sigma2_u: 0.25,
            params_known: true,
            n_reps: 0,
        };
        let spec = cell.spec();
        let err = cell.err();
        let design = make_design(1);
        let reps = 6000;
        let (i0, j0) = (0usize, 1usize);
        let mut y0 = Vec::with_capacity(reps);
        let mut y1 = Vec::with_capacity(reps);
        for r in 0..reps {
            let rep = simulate_rep(&spec, &err, &design, 1000 + r as u64).unwrap();
            y0.push(rep.y[i0]);
            y1.push(rep.y[j0]);
        }
        let m0 = math::pairwise_mean(&y0);
        let m1 = math::pairwise_mean(&y1);
        let var: f64 =
            y0.iter().map(|v| (v - m0) * (v - m0)).sum::<f64>() / (reps - 1) as f64;
        let cov: f64 = y0
            .iter()
            .zip(&y1)
            .map(|(a, b)| (a - m0) * (b - m1))
            .sum::<f64>()
            / (reps - 1) as f64;
        let expect_var = 1.1;
        // 4 standard errors of a variance estimate ~ sqrt(2/n) * var
        let se_var = (2.0 / reps as f64).sqrt() * expect_var;
        assert!(
            (var - expect_var).abs() < 4.0 * se_var,
            "var {var} vs {expect_var}"
        );
        let expect_cov = crate::kernels::eval_k_closed(
            &spec,
            &err,
            design.obs.point(i0),
            design.obs.point(j0),
        )
        .unwrap();
        let se_cov = (2.0 / reps as f64).sqrt() * expect_var;
        assert!(
            (cov - expect_cov).abs() < 4.0 * se_cov,
            "cov {cov} vs {expect_cov}"
        );
    }

    #[test]
    fn scoring_trivial_cases() {
        let cell = SweepCell {
            beta: 1.0,
            sigma2_x: 0.0,
            sigma2_u: 0.0,
            params_known: true,
            n_reps: 0,
        };
        let spec = cell.spec();
        let err = ErrorModel::none(2);
        let design = make_design(3);
        let rep = simulate_rep(&spec, &err, &design, 9).unwrap();
        // conditional-mean prediction with infinite intervals: coverage 1
        let mut model = GpModel::with_known_params(
            &spec,
            &err,
            design.obs.clone(),
            rep.y.clone(),
            design.targets.clone(),
        )
        .unwrap();
        let cond = model.conditional_at(&[]).unwrap();
        let preds = vec![ScoredPrediction {
            mean: cond.mean.clone(),
            interval: Some(vec![(f64::NEG_INFINITY, f64::INFINITY); 10]),
        }];
        let scores = rao_blackwell_scores(&spec, &err, &design, &rep, &preds).unwrap();
        assert!((scores[0].1.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_interpolation_scores_zero() {
        // no errors, no nugget, target at an observed site: KILE contribution 0
        let spec = KernelSpec::squared_exponential(1.0, 0.8, 0.0);
        let err = ErrorModel::none(2);
        let mut obs = Locations::new(2);
        for i in 0..3 {
            obs.push(&[i as f64, 0.0]);
        }
        let mut targets = Locations::new(2);
        targets.push(&[1.0, 0.0]); // same as obs[1]
        let design = Design { obs, targets };
        let rep = simulate_rep(&spec, &err, &design, 4).unwrap();
        let mc = McConfig::default();
        let cov = build_cov_matrices(&spec, &err, &design.obs, &design.targets, &mc).unwrap();
        let res = kriging::kile_predict(&cov, &rep.y, None).unwrap();
        let preds = vec![ScoredPrediction {
            mean: res.mean,
            interval: None,
        }];
        let scores = rao_blackwell_scores(&spec, &err, &design, &rep, &preds).unwrap();
        assert!(scores[0].0 < 1e-6, "rmse {}", scores[0].0);
    }

    #[test]
    fn kale_mse_dominates_kile_across_sweep() {
        // exact MSE comparison on the shared design for every sweep cell
        let design = make_design(11);
        for cell in table1_cells(true, 0) {
            let spec = cell.spec();
            let err = cell.err();
            let cov = build_cov_matrices(
                &spec,
                &err,
                &design.obs,
                &design.targets,
                &McConfig::default(),
            )
            .unwrap();
            let y = vec![0.0; design.obs.len()];
            let kale = kriging::kale_predict(&cov, &y).unwrap();
            let kile = kriging::kile_predict(&cov, &y, None).unwrap();
            for j in 0..design.targets.len() {
                assert!(
                    kale.mse[j] <= kile.mse[j] + 1e-10,
                    "cell {} target {j}: KALE {} > KILE {}",
                    cell.label(),
                    kale.mse[j],
                    kile.mse[j]
                );
            }
        }
    }

    #[test]
    fn unbiasedness_of_both_predictors() {
        // mean prediction error within 4 SE of zero over replicates
        let cell = SweepCell {
            beta: 0.5,
            sigma2_x: 0.01,
            sigma2_u: 0.25,
            params_known: true,
            n_reps: 0,
        };
        let spec = cell.spec();
        let err = cell.err();
        let design = make_design(2);
        let cov = build_cov_matrices(
            &spec,
            &err,
            &design.obs,
            &design.targets,
            &McConfig::default(),
        )
        .unwrap();
        let n = design.obs.len();
        let kale = kriging::kale_predict(&cov, &vec![0.0; n]).unwrap();
        let kile = kriging::kile_predict(&cov, &vec![0.0; n], None).unwrap();
        let reps = 200;
        let mut diff_kale = Vec::new();
        let mut diff_kile = Vec::new();
        for r in 0..reps {
            let rep = simulate_rep(&spec, &err, &design, 40_000 + r).unwrap();
            for j in 0..design.targets.len() {
                let mut ka = 0.0;
                let mut ki = 0.0;
                for i in 0..n {
                    ka += kale.weights.get(i, j) * rep.y[i];
                    ki += kile.weights.get(i, j) * rep.y[i];
                }
                diff_kale.push(ka - rep.x_star[j]);
                diff_kile.push(ki - rep.x_star[j]);
            }
        }
        for (name, diffs) in [("kale", &diff_kale), ("kile", &diff_kile)] {
            let mean = math::pairwise_mean(diffs);
            let se = math::sample_sd(diffs) / (diffs.len() as f64).sqrt();
            assert!(mean.abs() < 4.0 * se, "{name} bias {mean} (se {se})");
        }
    }

    #[test]
    fn rao_blackwell_agrees_with_naive() {
        let cell = SweepCell {
            beta: 0.5,
            sigma2_x: 0.1,
            sigma2_u: 0.25,
            params_known: true,
            n_reps: 0,
        };
        let spec = cell.spec();
        let err = cell.err();
        let design = make_design(7);
        let cov = build_cov_matrices(
            &spec,
            &err,
            &design.obs,
            &design.targets,
            &McConfig::default(),
        )
        .unwrap();
        let n = design.obs.len();
        let kale0 = kriging::kale_predict(&cov, &vec![0.0; n]).unwrap();
        let reps = 400;
        let mut rb = Vec::new();
        let mut naive = Vec::new();
        for r in 0..reps {
            let rep = simulate_rep(&spec, &err, &design, 90_000 + r).unwrap();
            let mut mean = Vec::with_capacity(10);
            for j in 0..design.targets.len() {
                let mut s = 0.0;
                for i in 0..n {
                    s += kale0.weights.get(i, j) * rep.y[i];
                }
                mean.push(s);
            }
            let preds = vec![ScoredPrediction {
                mean,
                interval: None,
            }];
            // compare mean *squared* error paths (the adjusted MSE), where
            // the Rao-Blackwell identity is exact
            let rb_s = rao_blackwell_scores(&spec, &err, &design, &rep, &preds).unwrap();
            let nv_s = naive_scores(&spec, &design, &rep, &preds);
            rb.push(rb_s[0].0 * rb_s[0].0);
            naive.push(nv_s[0].0 * nv_s[0].0);
        }
        let rb_mean = math::pairwise_mean(&rb);
        let nv_mean = math::pairwise_mean(&naive);
        let se = (math::sample_sd(&rb).powi(2) / reps as f64
            + math::sample_sd(&naive).powi(2) / reps as f64)
            .sqrt();
        assert!(
            (rb_mean - nv_mean).abs() < 4.0 * se,
            "rb {rb_mean} vs naive {nv_mean} (se {se})"
        );
    }
}
