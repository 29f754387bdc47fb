//! Bounded quasi-Newton minimization: L-BFGS in a logit-transformed space.
//!
//! Box constraints are removed by mapping each coordinate through a scaled
//! logistic, so the optimizer itself is unconstrained. The same transform
//! (with its log-Jacobian) is reused by the posterior sampler for parameters
//! with flat priors on a box.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::dense::dot;
use crate::math;

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + math::exp(-t))
    } else {
        let e = math::exp(t);
        e / (1.0 + e)
    }
}

/// Componentwise logit map between a box `(lo_i, hi_i)` and all of `R^q`.
#[derive(Clone, Debug)]
pub struct BoxTransform {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxTransform {
    /// Build from per-coordinate open intervals.
    pub fn new(bounds: &[(f64, f64)]) -> Self {
        assert!(bounds.iter().all(|&(lo, hi)| hi > lo));
        BoxTransform {
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
        }
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Bounds of coordinate `i`.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.lo[i], self.hi[i])
    }

    /// Map an interior box point to the unconstrained space.
    pub fn to_unconstrained(&self, x: &[f64], t: &mut [f64]) {
        for i in 0..x.len() {
            let u = (x[i] - self.lo[i]) / (self.hi[i] - self.lo[i]);
            let u = u.clamp(1e-12, 1.0 - 1e-12);
            t[i] = math::ln(u / (1.0 - u));
        }
    }

    /// Map an unconstrained point into the box.
    pub fn to_box(&self, t: &[f64], x: &mut [f64]) {
        for i in 0..t.len() {
            x[i] = self.lo[i] + (self.hi[i] - self.lo[i]) * sigmoid(t[i]);
        }
    }

    /// `dx_i/dt_i` at `t`.
    pub fn jacobian_diag(&self, t: &[f64], out: &mut [f64]) {
        for i in 0..t.len() {
            let s = sigmoid(t[i]);
            out[i] = (self.hi[i] - self.lo[i]) * s * (1.0 - s);
        }
    }

    /// `log |dx/dt|` and its gradient in `t` (for change-of-variable
    /// densities).
    pub fn log_jacobian(&self, t: &[f64], grad: &mut [f64]) -> f64 {
        let mut lj = 0.0;
        for i in 0..t.len() {
            let s = sigmoid(t[i]);
            lj += math::ln(self.hi[i] - self.lo[i]) + math::ln(s) + math::ln(1.0 - s);
            grad[i] = 1.0 - 2.0 * s;
        }
        lj
    }
}

/// L-BFGS settings.
#[derive(Clone, Copy, Debug)]
pub struct OptConfig {
    /// History pairs retained.
    pub memory: usize,
    /// Iteration cap.
    pub max_iter: usize,
    /// Stop when the gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Stop when successive objective values change by less than
    /// `f_tol * (1 + |f|)`.
    pub f_tol: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            memory: 8,
            max_iter: 200,
            grad_tol: 1e-7,
            f_tol: 1e-12,
        }
    }
}

/// Result of one minimization.
#[derive(Clone, Debug)]
pub struct OptOutcome {
    /// Final point.
    pub x: Vec<f64>,
    /// Final objective value.
    pub f: f64,
    /// Objective/gradient evaluations used.
    pub n_evals: usize,
    /// Whether a tolerance was met (as opposed to hitting `max_iter` or a
    /// dead line search).
    pub converged: bool,
}

/// Minimize `f` (value and gradient through one closure) from `x0` with
/// L-BFGS and a backtracking line search enforcing the Armijo condition plus
/// a weak curvature check. Infinite objective values are treated as rejected
/// points, so the objective may return `+inf` outside its domain.
pub fn lbfgs<F>(mut fg: F, x0: &[f64], cfg: &OptConfig) -> OptOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut n_evals = 1;
    if !f.is_finite() {
        return OptOutcome {
            x,
            f,
            n_evals,
            converged: false,
        };
    }

    let m = cfg.memory.max(1);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut converged = false;

    for _iter in 0..cfg.max_iter {
        let gmax = g.iter().fold(0.0f64, |a, &b| a.max(math::abs(b)));
        if gmax < cfg.grad_tol {
            converged = true;
            break;
        }

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|&v| -v).collect();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        if k > 0 {
            let last = k - 1;
            let scale = dot(&s_hist[last], &y_hist[last]) / dot(&y_hist[last], &y_hist[last]);
            for dj in d.iter_mut() {
                *dj *= scale;
            }
        }
        for i in 0..k {
            let beta = rho[i] * dot(&y_hist[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }

        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // fall back to steepest descent if the metric degenerated
            d = g.iter().map(|&v| -v).collect();
            slope = -dot(&g, &g);
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }

        // weak-Wolfe line search by bisection bracketing: Armijo failures
        // shrink, excess-descent points lengthen, until both hold
        let c1 = 1e-4;
        let c2 = 0.9;
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        let mut step = 1.0f64;
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        // best Armijo point seen: (step, f); fallback if Wolfe never holds
        let mut accepted: Option<f64> = None;
        let mut best: Option<(f64, f64)> = None;
        for _ls in 0..50 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_new = fg(&x_new, &mut g_new);
            n_evals += 1;
            let armijo = f_new.is_finite() && f_new <= f + c1 * step * slope;
            if !armijo {
                hi = step;
            } else {
                if best.map_or(true, |(_, bf)| f_new < bf) {
                    best = Some((step, f_new));
                }
                if dot(&g_new, &d) < c2 * slope {
                    lo = step;
                } else {
                    accepted = Some(f_new);
                    break;
                }
            }
            step = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * step
            };
        }
        if accepted.is_none() {
            if let Some((bs, _)) = best {
                step = bs;
                for i in 0..n {
                    x_new[i] = x[i] + step * d[i];
                }
                let f_re = fg(&x_new, &mut g_new);
                n_evals += 1;
                if f_re.is_finite() {
                    accepted = Some(f_re);
                }
            }
        }
        let ok = if let Some(f_new) = accepted {
            let mut s = vec![0.0; n];
            let mut yv = vec![0.0; n];
            for i in 0..n {
                s[i] = x_new[i] - x[i];
                yv[i] = g_new[i] - g[i];
            }
            let sy = dot(&s, &yv);
            if sy > 1e-12 * math::sqrt(dot(&s, &s)) * math::sqrt(dot(&yv, &yv)) {
                if s_hist.len() == m {
                    s_hist.remove(0);
                    y_hist.remove(0);
                    rho.remove(0);
                }
                rho.push(1.0 / sy);
                s_hist.push(s);
                y_hist.push(yv);
            }
            let f_prev = f;
            x.copy_from_slice(&x_new);
            g.copy_from_slice(&g_new);
            f = f_new;
            if math::abs(f_prev - f) < cfg.f_tol * (1.0 + math::abs(f)) {
                converged = true;
            }
            true
        } else {
            false
        };
        if converged {
            break;
        }
        if !ok {
            // dead line search: counts as converged only near the gradient floor
            let gmax = g.iter().fold(0.0f64, |a, &b| a.max(math::abs(b)));
            converged = gmax < 1e3 * cfg.grad_tol;
            break;
        }
    }

    OptOutcome {
        x,
        f,
        n_evals,
        converged,
    }
}

/// Latin hypercube sample of `count` points in the unit cube, one stratum per
/// point and coordinate.
pub fn latin_hypercube(count: usize, dim: usize, rng: &mut crate::rng::Rng) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]; count];
    let mut perm: Vec<usize> = (0..count).collect();
    for d in 0..dim {
        rng.shuffle(&mut perm);
        for (i, &stratum) in perm.iter().enumerate() {
            pts[i][d] = (stratum as f64 + rng.next_f64()) / count as f64;
        }
    }
    pts
}
