//! Dense least-squares solves shared by both identification phases and the
//! sparse-regression baseline.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solution of `min ||A c - y||_2` with diagnostics.
#[derive(Debug, Clone)]
pub struct LsqSolution {
    /// Coefficient vector, one entry per column of `A`.
    pub coefficients: Vec<f64>,
    /// `||A c - y||_2` at the solution.
    pub residual_norm: f64,
    /// 2-norm condition estimate of `A` from its singular values.
    pub condition: f64,
}

/// Relative singular-value cutoff used by the scaled identification solves.
/// Directions of the unit-column system attenuated by more than ten orders
/// of magnitude carry no information at the noise level of sampled
/// trajectories; they take their minimum-norm value instead of amplifying
/// quadrature noise into large cancelling coefficients.
pub const SCALED_RCOND: f64 = 1e-10;

fn validate_system(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if a.nrows() != y.len() {
        return Err(Error::InvalidSignal(format!(
            "system has {} rows but {} observations",
            a.nrows(),
            y.len()
        )));
    }
    if a.ncols() == 0 {
        return Err(Error::EmptyLibrary);
    }
    if a.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// One-sided Jacobi (Hestenes) diagonalization: orthogonalizes the columns
/// of `w` in place by plane rotations, accumulating them into `v`. On exit
/// `w = U * diag(sigma)` column-wise and the input satisfied
/// `w_in = U * diag(sigma) * v^T`. Returns the (unsorted) singular values.
///
/// Used instead of the bidiagonalization SVD because Jacobi retains high
/// relative accuracy on clustered and near-degenerate spectra, which is
/// exactly the regime rank truncation has to judge.
fn one_sided_jacobi(w: &mut DMatrix<f64>, v: &mut DMatrix<f64>) -> Vec<f64> {
    let m = w.ncols();
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha = w.column(p).dot(&w.column(p));
                let beta = w.column(q).dot(&w.column(q));
                let gamma = w.column(p).dot(&w.column(q));
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..w.nrows() {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..m {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..m).map(|j| w.column(j).norm()).collect()
}

/// Least-squares solve via thin QR + Jacobi SVD of the R factor, truncating
/// singular values at `rcond` relative to the largest (truncated directions
/// take their minimum-norm value of zero). Returns the coefficient vector
/// and the untruncated condition estimate.
fn truncated_solve(a: &DMatrix<f64>, y: &DVector<f64>, rcond: f64) -> Result<(DVector<f64>, f64)> {
    let qr = a.clone().qr();
    let mut w = qr.r();
    let mut v = DMatrix::identity(a.ncols(), a.ncols());
    let sigmas = one_sided_jacobi(&mut w, &mut v);
    let s_max = sigmas.iter().cloned().fold(0.0, f64::max);
    let s_min = sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };

    let z = qr.q().transpose() * y;
    let mut c = DVector::zeros(a.ncols());
    for (j, &sigma) in sigmas.iter().enumerate() {
        if sigma > rcond * s_max && sigma > 0.0 {
            let coeff = w.column(j).dot(&z) / (sigma * sigma);
            c.axpy(coeff, &v.column(j).clone_owned(), 1.0);
        }
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSignal("least-squares solve produced non-finite values".to_string()));
    }
    Ok((c, condition))
}

/// Solves the linear system `A c = y` in the least-squares sense: the
/// minimum-residual solution via orthogonal factorization, and among
/// minimizers the minimum-norm one when `A` is rank-deficient at working
/// precision (or underdetermined).
pub fn solve_linear_ls(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<LsqSolution> {
    validate_system(a, y)?;
    let rcond = f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    let (c, condition) = truncated_solve(a, y, rcond)?;
    let residual_norm = (a * &c - y).norm();
    Ok(LsqSolution { coefficients: c.iter().copied().collect(), residual_norm, condition })
}

/// Scales each column of `A` to unit 2-norm, solves by SVD with singular
/// values below `SCALED_RCOND`-relative truncated to zero, and unscales the
/// coefficients. Scaling tames candidate terms that differ in magnitude by
/// many orders (e.g. `x` vs `x^3` at millimetre amplitudes); truncation
/// returns the minimum-norm answer along directions the data cannot
/// distinguish (e.g. collinear energy integrals of a periodic response).
/// Zero columns are left unscaled and get zero coefficients.
pub fn solve_scaled_ls(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<LsqSolution> {
    validate_system(a, y)?;
    let norms: Vec<f64> = (0..a.ncols()).map(|j| a.column(j).norm()).collect();
    let mut scaled = a.clone();
    for (j, &n) in norms.iter().enumerate() {
        if n > 0.0 {
            scaled.column_mut(j).scale_mut(1.0 / n);
        }
    }

    let (mut c, condition) = truncated_solve(&scaled, y, SCALED_RCOND)?;
    for (j, &n) in norms.iter().enumerate() {
        if n > 0.0 {
            c[j] /= n;
        } else {
            c[j] = 0.0;
        }
    }

    let residual_norm = (a * &c - y).norm();
    Ok(LsqSolution { coefficients: c.iter().copied().collect(), residual_norm, condition })
}

/// 2-norm condition of `A` after unit-column scaling — the conditioning the
/// identification solves actually see.
pub fn scaled_condition(a: &DMatrix<f64>) -> f64 {
    let mut scaled = a.clone();
    for j in 0..scaled.ncols() {
        let n = scaled.column(j).norm();
        if n > 0.0 {
            scaled.column_mut(j).scale_mut(1.0 / n);
        }
    }
    let mut w = scaled.clone().qr().r();
    let mut v = DMatrix::identity(scaled.ncols(), scaled.ncols());
    let sigmas = one_sided_jacobi(&mut w, &mut v);
    let s_max = sigmas.iter().cloned().fold(0.0, f64::max);
    let s_min = sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
    if s_min > 0.0 {
        s_max / s_min
    } else {
        f64::INFINITY
    }
}
