//! Dense symmetric linear algebra and exact Gaussian conditioning.
//!
//! Matrices are desk-scale (n up to a few thousand) and dense. The Cholesky
//! factorization carries the policy knobs the rest of the crate depends on:
//! log-determinant from the factor, a bounded jitter escalation applied only
//! on failure (near-singular covariance matrices arise *by design* in the
//! location-error regime), and an explicit symmetric inverse for gradient
//! computations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::Rng;

/// Relative size of the first jitter attempted when a factorization fails.
pub const JITTER_BASE_REL: f64 = 1e-10;
/// Number of tenfold jitter escalations attempted after the first jitter.
pub const JITTER_ESCALATIONS: usize = 3;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Element accessor.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Element mutator.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Underlying row-major buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable underlying buffer.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self * v` for a vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dense::dot(self.row(i), v)).collect()
    }

    /// `self^T * v`.
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let r = self.row(i);
            let vi = v[i];
            for (o, &x) in out.iter_mut().zip(r) {
                *o += vi * x;
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += aik * b;
                }
            }
        }
        out
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                m = m.max(math::abs(self.get(i, j) - self.get(j, i)));
            }
        }
        m
    }
}

/// Packed row-major kernels shared by [`Mat`]-level APIs and the samplers'
/// scratch-buffer hot paths. Dot products use four independent accumulators:
/// a fixed association order (reproducible) that breaks the serial rounding
/// dependency chain.
pub mod dense {
    /// Dot product with fixed 4-way unrolled association.
    #[inline(always)]
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().min(b.len());
        let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
        let chunks = n / 4;
        for c in 0..chunks {
            let k = c * 4;
            s0 += a[k] * b[k];
            s1 += a[k + 1] * b[k + 1];
            s2 += a[k + 2] * b[k + 2];
            s3 += a[k + 3] * b[k + 3];
        }
        let mut s = (s0 + s2) + (s1 + s3);
        for k in (chunks * 4)..n {
            s += a[k] * b[k];
        }
        s
    }

    /// In-place lower Cholesky of the symmetric matrix in `a` (row-major,
    /// `n x n`; the strict upper triangle is left untouched). On failure
    /// returns the 0-based index of the non-positive leading minor.
    pub fn chol_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
        for j in 0..n {
            let rj = j * n;
            let d = a[rj + j] - dot(&a[rj..rj + j], &a[rj..rj + j]);
            if !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let dj = crate::math::sqrt(d);
            a[rj + j] = dj;
            let inv = 1.0 / dj;
            let (upper, lower) = a.split_at_mut((j + 1) * n);
            let row_j = &upper[rj..rj + j];
            for row_i in lower.chunks_exact_mut(n) {
                let s = row_i[j] - dot(&row_i[..j], row_j);
                row_i[j] = s * inv;
            }
        }
        Ok(())
    }

    /// `log|A|` from the Cholesky factor.
    pub fn logdet_from_chol(l: &[f64], n: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            s += crate::math::ln(l[i * n + i]);
        }
        2.0 * s
    }

    /// Forward substitution `L x = b` in place.
    pub fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
        for i in 0..n {
            let ri = i * n;
            let s = b[i] - dot(&l[ri..ri + i], &b[..i]);
            b[i] = s / l[ri + i];
        }
    }

    /// Back substitution `L^T x = b` in place.
    pub fn solve_lower_t(l: &[f64], n: usize, b: &mut [f64]) {
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
    }

    /// `W = (L^{-1})^T` stored row-major in the upper triangle of `w`.
    pub fn inv_lower_transposed(l: &[f64], n: usize, w: &mut [f64]) {
        for j in 0..n {
            w[j * n + j] = 1.0 / l[j * n + j];
            for i in (j + 1)..n {
                let s = dot(&l[i * n + j..i * n + i], &w[j * n + j..j * n + i]);
                w[j * n + i] = -s / l[i * n + i];
            }
        }
    }

    /// Full symmetric inverse `A^{-1} = W W^T` from the output of
    /// [`inv_lower_transposed`]; both triangles of `out` are filled.
    pub fn spd_inverse_from_w(w: &[f64], n: usize, out: &mut [f64]) {
        for i in 0..n {
            for j in 0..=i {
                let s = dot(&w[i * n + i..i * n + n], &w[j * n + i..j * n + n]);
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
    }
}

/// Cholesky factorization of a symmetric positive definite matrix, with the
/// crate's jitter policy applied on failure.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    jitter: f64,
    logdet: f64,
}

impl Cholesky {
    /// Factor `a`, escalating diagonal jitter only if the plain factorization
    /// fails: `1e-10 * mean(diag)` initially, then tenfold up to
    /// [`JITTER_ESCALATIONS`] more times.
    pub fn factor(a: &Mat) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "Cholesky requires a square matrix");
        Self::factor_slice(a.as_slice(), a.rows)
    }

    /// Same as [`Cholesky::factor`] for a packed row-major buffer.
    pub fn factor_slice(a: &[f64], n: usize) -> Result<Self> {
        let mean_diag = if n == 0 {
            0.0
        } else {
            (0..n).map(|i| a[i * n + i]).sum::<f64>() / n as f64
        };
        let mut jitter = 0.0;
        let mut last_minor = 0;
        for attempt in 0..(2 + JITTER_ESCALATIONS) {
            let mut l = a.to_vec();
            if jitter > 0.0 {
                for i in 0..n {
                    l[i * n + i] += jitter;
                }
            }
            match dense::chol_in_place(&mut l, n) {
                Ok(()) => {
                    let logdet = dense::logdet_from_chol(&l, n);
                    return Ok(Cholesky {
                        n,
                        l,
                        jitter,
                        logdet,
                    });
                }
                Err(minor) => {
                    last_minor = minor;
                    jitter = if attempt == 0 {
                        JITTER_BASE_REL * mean_diag.max(f64::MIN_POSITIVE)
                    } else {
                        jitter * 10.0
                    };
                }
            }
        }
        Err(Error::SingularMatrix { minor: last_minor })
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `log|A|` (of the jittered matrix if jitter was applied).
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Diagonal jitter that had to be added; 0 when the plain factorization
    /// succeeded. Callers wanting a diagnostics trail surface this value.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Packed lower factor.
    pub fn lower(&self) -> &[f64] {
        &self.l
    }

    /// Solve `A x = b`.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        dense::solve_lower(&self.l, self.n, &mut x);
        dense::solve_lower_t(&self.l, self.n, &mut x);
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        assert_eq!(b.rows, self.n);
        let mut out = Mat::zeros(self.n, b.cols);
        let mut col = vec![0.0; self.n];
        for j in 0..b.cols {
            for i in 0..self.n {
                col[i] = b.get(i, j);
            }
            dense::solve_lower(&self.l, self.n, &mut col);
            dense::solve_lower_t(&self.l, self.n, &mut col);
            for i in 0..self.n {
                out.set(i, j, col[i]);
            }
        }
        out
    }

    /// Full symmetric inverse.
    pub fn inverse(&self) -> Mat {
        let n = self.n;
        let mut w = vec![0.0; n * n];
        dense::inv_lower_transposed(&self.l, n, &mut w);
        let mut out = Mat::zeros(n, n);
        dense::spd_inverse_from_w(&w, n, out.as_mut_slice());
        out
    }

    /// Quadratic form `b^T A^{-1} b`.
    pub fn quad_form_inv(&self, b: &[f64]) -> f64 {
        let mut x = b.to_vec();
        dense::solve_lower(&self.l, self.n, &mut x);
        dense::dot(&x, &x)
    }
}

/// Solve `A X = B` for symmetric positive definite `A`, also returning
/// `log|A|` from the factorization.
pub fn chol_solve(a: &Mat, b: &Mat) -> Result<(Mat, f64)> {
    let ch = Cholesky::factor(a)?;
    let x = ch.solve_mat(b);
    Ok((x, ch.logdet()))
}

/// An exact Gaussian conditional distribution.
#[derive(Clone, Debug)]
pub struct GaussianConditional {
    /// Conditional mean.
    pub mean: Vec<f64>,
    /// Conditional covariance (symmetric PSD up to round-off).
    pub cov: Mat,
}

impl GaussianConditional {
    /// Draw one sample. Falls back to an eigenvalue square root with
    /// negative eigenvalues clamped to zero when the covariance is singular
    /// (exact conditioning can produce a covariance of rank zero).
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let m = self.mean.len();
        let mut z = vec![0.0; m];
        rng.normal_fill(&mut z);
        match Cholesky::factor(&self.cov) {
            Ok(ch) => {
                let l = ch.lower();
                let mut out = self.mean.clone();
                for i in 0..m {
                    out[i] += dense::dot(&l[i * m..i * m + i + 1], &z[..i + 1]);
                }
                out
            }
            Err(_) => {
                let (vals, vecs) = sym_eigen(&self.cov);
                let mut out = self.mean.clone();
                for (k, &lam) in vals.iter().enumerate() {
                    if lam <= 0.0 {
                        continue;
                    }
                    let s = math::sqrt(lam) * z[k];
                    for i in 0..m {
                        out[i] += s * vecs.get(i, k);
                    }
                }
                out
            }
        }
    }

    /// Diagonal of the conditional covariance.
    pub fn variances(&self) -> Vec<f64> {
        (0..self.mean.len()).map(|i| self.cov.get(i, i)).collect()
    }
}

/// Condition a jointly Gaussian vector `x` on observing `y`:
/// `mean = Cxy Cyy^{-1} y`, `cov = Cxx - Cxy Cyy^{-1} Cxy^T` (symmetrized).
///
/// `cxx` is m x m, `cxy` is m x n, `cyy` is n x n, `y` has length n.
pub fn condition(cxx: &Mat, cxy: &Mat, cyy: &Mat, y: &[f64]) -> Result<GaussianConditional> {
    let m = cxx.rows();
    let n = cyy.rows();
    if cxy.rows() != m || cxy.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: cxy.rows() * cxy.cols(),
        });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let ch = Cholesky::factor(cyy)?;
    let w = ch.solve_mat(&cxy.transpose()); // n x m = Cyy^{-1} Cxy^T
    let mean = cxy.matvec(&ch.solve_vec(y));
    let mut cov = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let mut s = cxx.get(i, j);
            // subtract row i of Cxy dot column j of w
            let mut t = 0.0;
            for k in 0..n {
                t += cxy.get(i, k) * w.get(k, j);
            }
            s -= t;
            // symmetrize with the (j, i) evaluation
            let mut t2 = 0.0;
            for k in 0..n {
                t2 += cxy.get(j, k) * w.get(k, i);
            }
            let v = 0.5 * ((cxx.get(j, i) - t2) + s);
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok(GaussianConditional { mean, cov })
}

/// Eigenvalues of a symmetric matrix (ascending), by cyclic Jacobi rotation.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let (vals, _) = jacobi(a, false);
    vals
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns)
/// of a symmetric matrix.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    jacobi(a, true)
}

fn jacobi(a: &Mat, want_vectors: bool) -> (Vec<f64>, Mat) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut q = Mat::identity(if want_vectors { n } else { 1 });
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off < 1e-28 * (1.0 + m.frobenius_norm()) {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m.get(p, r);
                if math::abs(apq) < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(r, r);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, r);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, r, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(r, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(r, k, s * apk + c * aqk);
                }
                if want_vectors {
                    for k in 0..n {
                        let qkp = q.get(k, p);
                        let qkq = q.get(k, r);
                        q.set(k, p, c * qkp - s * qkq);
                        q.set(k, r, s * qkp + c * qkq);
                    }
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    idx.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let vals: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
    let vecs = if want_vectors {
        Mat::from_fn(n, n, |i, j| q.get(i, idx[j]))
    } else {
        q
    };
    (vals, vecs)
}

/// Convenience: assert `a` is PSD by checking its minimum eigenvalue against
/// `-tol`; returns the minimum eigenvalue.
pub fn min_eigenvalue(a: &Mat) -> f64 {
    sym_eigenvalues(a)[0]
}
