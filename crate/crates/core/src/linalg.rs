//! Hermitian matrix primitives shared by the rest of the crate:
//! eigendecomposition, PSD square root, Moore–Penrose pseudo-inverse,
//! support projection, and the tolerance policy used for every
//! approximate comparison.

use nalgebra::DMatrix;
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the working representation for all block data.
pub type CMat = DMatrix<Complex64>;

/// Numerical tolerance policy.
///
/// `abs_eps` governs Frobenius-norm equality checks; `eig_cut_rel` is the
/// eigenvalue cutoff relative to the largest eigenvalue magnitude, used for
/// rank decisions (pseudo-inverse, support projections, PSD clamping).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub eig_cut_rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_eps: 1e-9,
            eig_cut_rel: 1e-10,
        }
    }
}

/// Absolute floor for the eigenvalue cutoff when the spectrum is all zero,
/// so rank decisions stay meaningful on the zero matrix.
const EIG_CUT_FLOOR: f64 = 1e-14;

impl Tolerance {
    pub fn new(abs_eps: f64, eig_cut_rel: f64) -> Result<Self> {
        if !(abs_eps > 0.0) || !(eig_cut_rel > 0.0) {
            return Err(Error::InvalidTolerance(format!(
                "abs_eps and eig_cut_rel must be strictly positive (got {abs_eps}, {eig_cut_rel})"
            )));
        }
        Ok(Tolerance { abs_eps, eig_cut_rel })
    }

    /// Eigenvalue clamp band for a spectrum whose largest magnitude is `lambda_max`.
    pub fn eig_cut(&self, lambda_max: f64) -> f64 {
        (self.eig_cut_rel * lambda_max.abs()).max(EIG_CUT_FLOOR)
    }

    /// Frobenius closeness with relative-or-absolute mixing:
    /// `‖a−b‖_F ≤ max(abs_eps, abs_eps·max(‖a‖,‖b‖))`.
    pub fn fro_close(&self, a: &CMat, b: &CMat) -> bool {
        let scale = a.norm().max(b.norm());
        (a - b).norm() <= self.abs_eps.max(self.abs_eps * scale)
    }
}

/// Frobenius residual normalized by `max(1, ‖a‖, ‖b‖)`.
pub fn residual(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / 1.0_f64.max(a.norm()).max(b.norm())
}

/// Hermitian part `(M + M†)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_hermitian(m: &CMat, tol: Tolerance) -> Result<()> {
    check_square(m)?;
    let defect = (m - m.adjoint()).norm();
    if defect > tol.abs_eps * 1.0_f64.max(m.norm()) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, backed by LAPACK's Hermitian
/// solver.
///
/// Returns eigenvalues in descending order together with the unitary matrix
/// whose columns are the matching eigenvectors, so `M = V diag(λ) V†`.
pub fn herm_eig(m: &CMat, tol: Tolerance) -> Result<(Vec<f64>, CMat)> {
    check_hermitian(m, tol)?;
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let sym = hermitize(m);
    let arr = Array2::from_shape_fn((n, n), |(r, c)| sym[(r, c)]);
    let (raw_values, raw_vectors) = arr
        .eigh(UPLO::Lower)
        .map_err(|e| Error::InvalidInput(format!("eigendecomposition failed: {e}")))?;
    // LAPACK returns ascending eigenvalues
    let values: Vec<f64> = raw_values.iter().rev().copied().collect();
    let vectors = CMat::from_fn(n, n, |r, c| raw_vectors[(r, n - 1 - c)]);
    Ok((values, vectors))
}

/// Clamped eigendecomposition of a Hermitian PSD matrix: eigenvalues within
/// the clamp band of zero are set to 0, eigenvalues below the band are an
/// error.
fn psd_eig(m: &CMat, tol: Tolerance) -> Result<(Vec<f64>, CMat)> {
    let (mut values, vectors) = herm_eig(m, tol)?;
    let lambda_max = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cut = tol.eig_cut(lambda_max);
    for v in values.iter_mut() {
        if *v < -cut {
            return Err(Error::NotPsd { min_eigenvalue: *v });
        }
        if v.abs() <= cut {
            *v = 0.0;
        }
    }
    Ok((values, vectors))
}

fn from_spectrum(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = vectors.nrows();
    let mut out = CMat::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        let fv = f(v);
        if fv == 0.0 {
            continue;
        }
        let col = vectors.column(i);
        // out += f(v) |v_i><v_i|
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += Complex64::new(fv, 0.0) * col[r] * col[c].conj();
            }
        }
    }
    out
}

/// PSD square root: the unique Hermitian PSD `S` with `S·S = M`.
pub fn psd_sqrt(m: &CMat, tol: Tolerance) -> Result<CMat> {
    let (values, vectors) = psd_eig(m, tol)?;
    Ok(from_spectrum(&values, &vectors, f64::sqrt))
}

/// Moore–Penrose pseudo-inverse of a Hermitian PSD matrix: eigenvalues above
/// the cutoff are inverted, the rest are zeroed.
pub fn pinv_psd(m: &CMat, tol: Tolerance) -> Result<CMat> {
    let (values, vectors) = psd_eig(m, tol)?;
    Ok(from_spectrum(&values, &vectors, |v| if v > 0.0 { 1.0 / v } else { 0.0 }))
}

/// Support projection: the orthogonal projection onto the range of a
/// Hermitian PSD matrix, i.e. the minimal projection `P` with `PM = M = MP`.
pub fn support_projection(m: &CMat, tol: Tolerance) -> Result<CMat> {
    let (values, vectors) = psd_eig(m, tol)?;
    Ok(from_spectrum(&values, &vectors, |v| if v > 0.0 { 1.0 } else { 0.0 }))
}

/// Column-major vectorization; the inverse of [`unvec`].
pub fn vec_col(m: &CMat) -> Vec<Complex64> {
    m.as_slice().to_vec()
}

/// Reshape a column-major vector of length `rows*cols` into a matrix.
pub fn unvec(v: &[Complex64], rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v)
}

/// The trace functional as a row vector `t` with `t·vec(M) = Tr[M]`.
pub fn trace_functional(n: usize) -> CMat {
    let mut t = CMat::zeros(1, n * n);
    for i in 0..n {
        t[(0, i + n * i)] = Complex64::new(1.0, 0.0);
    }
    t
}
