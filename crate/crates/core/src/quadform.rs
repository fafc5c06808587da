//! Small dense positive-definite matrices.
//!
//! [`PsdMatrix`] holds a design matrix `Z = λI + Σ s·x·xᵀ` together with its
//! inverse and log-determinant, both kept current under rank-one updates
//! (Sherman–Morrison for the inverse, the matrix-determinant lemma for the
//! log-determinant). Dimensions are expected to be small (d ≤ 16), so every
//! matrix is a flat row-major `Vec<f64>`.

use crate::error::{Error, Result};
use crate::feedback::WeightVector;

/// Full inverse refresh period, in rank-one updates.
pub const REFRESH_PERIOD: usize = 1024;

/// Absolute tolerance on `‖w‖₂ − 1` for the metric projection root-finder.
const PROJECTION_TOL: f64 = 1e-10;
const PROJECTION_MAX_ITERS: usize = 200;
const PROJECTION_MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    dim: usize,
    m: Vec<f64>,
    m_inv: Vec<f64>,
    logdet: f64,
    logdet0: f64,
    since_refresh: usize,
}

impl PsdMatrix {
    /// `λ·I` of dimension `dim`.
    pub fn new_scaled_identity(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be positive"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "regularizer must be positive and finite, got {lambda}"
            )));
        }
        let mut m = vec![0.0; dim * dim];
        let mut m_inv = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = lambda;
            m_inv[i * dim + i] = 1.0 / lambda;
        }
        let logdet = dim as f64 * lambda.ln();
        Ok(Self {
            dim,
            m,
            m_inv,
            logdet,
            logdet0: logdet,
            since_refresh: 0,
        })
    }

    /// Wraps an arbitrary symmetric positive-definite matrix (row-major).
    ///
    /// The inverse and log-determinant are computed by Cholesky factorization,
    /// and the log-determinant at construction becomes the reference for
    /// [`logdet_ratio`](Self::logdet_ratio).
    pub fn from_matrix(dim: usize, m: Vec<f64>) -> Result<Self> {
        if dim == 0 || m.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {dim}x{dim} entries, got {}",
                m.len()
            )));
        }
        for j in 0..dim {
            for k in 0..j {
                if (m[j * dim + k] - m[k * dim + j]).abs() > 1e-12 {
                    return Err(Error::invalid("matrix is not symmetric"));
                }
            }
        }
        let l = cholesky(&m, dim)
            .ok_or_else(|| Error::invalid("matrix is not positive definite"))?;
        let m_inv = inverse_from_cholesky(&l, dim);
        let logdet = logdet_from_cholesky(&l, dim);
        Ok(Self {
            dim,
            m,
            m_inv,
            logdet,
            logdet0: logdet,
            since_refresh: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries of `Z`.
    pub fn matrix(&self) -> &[f64] {
        &self.m
    }

    /// Row-major entries of the maintained `Z⁻¹`.
    pub fn inverse(&self) -> &[f64] {
        &self.m_inv
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// `log det Z₀`, the log-determinant at construction.
    pub fn initial_logdet(&self) -> f64 {
        self.logdet0
    }

    /// `log det Z − log det Z₀`, where `Z₀` is the matrix at construction.
    pub fn logdet_ratio(&self) -> f64 {
        self.logdet - self.logdet0
    }

    /// `Z ← Z + scale·x·xᵀ`.
    ///
    /// The inverse follows Sherman–Morrison and the log-determinant grows by
    /// `log(1 + scale·xᵀZ⁻¹x)` evaluated with the pre-update inverse. Every
    /// [`REFRESH_PERIOD`] updates the inverse is recomputed from `Z`.
    pub fn rank_one_update(&mut self, x: &[f64], scale: f64) -> Result<()> {
        self.check_dim(x.len())?;
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "update scale must be non-negative and finite, got {scale}"
            )));
        }
        if scale == 0.0 {
            return Ok(());
        }
        let d = self.dim;
        let u = mat_vec(&self.m_inv, x, d);
        let q = dot(x, &u).max(0.0);
        let denom = 1.0 + scale * q;

        for j in 0..d {
            for k in 0..d {
                self.m[j * d + k] += scale * x[j] * x[k];
            }
        }
        let coef = scale / denom;
        for j in 0..d {
            for k in j..d {
                let v = self.m_inv[j * d + k] - coef * u[j] * u[k];
                self.m_inv[j * d + k] = v;
                self.m_inv[k * d + j] = v;
            }
        }
        self.logdet += denom.ln();

        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_PERIOD {
            self.refresh_inverse()?;
        }
        Ok(())
    }

    /// Recomputes `Z⁻¹` from `Z` by Cholesky factorization.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        let l = cholesky(&self.m, self.dim)
            .ok_or_else(|| Error::numerics("design matrix lost positive definiteness"))?;
        self.m_inv = inverse_from_cholesky(&l, self.dim);
        self.since_refresh = 0;
        Ok(())
    }

    /// `log det Z` by direct Cholesky factorization (not the maintained value).
    pub fn direct_logdet(&self) -> Result<f64> {
        let l = cholesky(&self.m, self.dim)
            .ok_or_else(|| Error::numerics("design matrix lost positive definiteness"))?;
        Ok(logdet_from_cholesky(&l, self.dim))
    }

    /// `xᵀZ⁻¹x`, the squared inverse-metric norm of `x`.
    pub fn quad_inv(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(quad_form(&self.m_inv, x, self.dim).max(0.0))
    }

    /// `vᵀZv`, the squared Mahalanobis norm of `v`.
    pub fn quad(&self, v: &[f64]) -> Result<f64> {
        self.check_dim(v.len())?;
        Ok(quad_form(&self.m, v, self.dim).max(0.0))
    }

    /// Projection of `w_raw` onto the Euclidean unit ball under the metric `Z`:
    /// `argmin_{‖w‖₂ ≤ 1} (w − w_raw)ᵀ Z (w − w_raw)`.
    ///
    /// Outside the ball the minimizer is `w(μ) = (Z + μI)⁻¹ Z w_raw` with the
    /// multiplier `μ > 0` solving `‖w(μ)‖₂ = 1`. `‖w(μ)‖₂` is strictly
    /// decreasing in `μ`, so the root is found by bisection; the point returned
    /// is the upper end of the final bracket and is always feasible.
    pub fn project_unit_ball(&self, w_raw: &[f64]) -> Result<WeightVector> {
        self.check_dim(w_raw.len())?;
        if w_raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerics("non-finite point passed to projection"));
        }
        if norm(w_raw) <= 1.0 {
            return Ok(WeightVector::from_projected(w_raw.to_vec()));
        }

        let d = self.dim;
        let target = mat_vec(&self.m, w_raw, d);
        let solve_at = |mu: f64| -> Result<Vec<f64>> {
            let mut shifted = self.m.clone();
            for i in 0..d {
                shifted[i * d + i] += mu;
            }
            let l = cholesky(&shifted, d)
                .ok_or_else(|| Error::numerics("shifted design matrix is not positive definite"))?;
            Ok(cholesky_solve(&l, &target, d))
        };

        let mut lo = 0.0;
        let mut hi = (0..d).map(|i| self.m[i * d + i]).sum::<f64>();
        let mut w_hi = solve_at(hi)?;
        let mut doublings = 0;
        while norm(&w_hi) >= 1.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > PROJECTION_MAX_DOUBLINGS || !hi.is_finite() {
                return Err(Error::numerics(
                    "failed to bracket the projection multiplier",
                ));
            }
            w_hi = solve_at(hi)?;
        }

        for _ in 0..PROJECTION_MAX_ITERS {
            if 1.0 - norm(&w_hi) <= PROJECTION_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let w_mid = solve_at(mid)?;
            if norm(&w_mid) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
                w_hi = w_mid;
            }
        }
        Ok(WeightVector::from_projected(w_hi))
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::invalid(format!(
                "vector of length {len} does not match matrix dimension {}",
                self.dim
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(a: &[f64], x: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|j| dot(&a[j * d..(j + 1) * d], x)).collect()
}

fn quad_form(a: &[f64], x: &[f64], d: usize) -> f64 {
    (0..d)
        .map(|j| x[j] * dot(&a[j * d..(j + 1) * d], x))
        .sum()
}

/// Lower Cholesky factor of a symmetric matrix, or `None` if not positive definite.
fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in (j + 1)..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * y[k];
        }
        y[i] = s / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= l[k * d + i] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    x
}

fn inverse_from_cholesky(l: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    let mut e = vec![0.0; d];
    for c in 0..d {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[c] = 1.0;
        let col = cholesky_solve(l, &e, d);
        for r in 0..d {
            inv[r * d + c] = col[r];
        }
    }
    // exact symmetry
    for j in 0..d {
        for k in (j + 1)..d {
            let v = 0.5 * (inv[j * d + k] + inv[k * d + j]);
            inv[j * d + k] = v;
            inv[k * d + j] = v;
        }
    }
    inv
}

fn logdet_from_cholesky(l: &[f64], d: usize) -> f64 {
    2.0 * (0..d).map(|i| l[i * d + i].ln()).sum::<f64>()
}
