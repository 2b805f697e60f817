//! Dense complex linear algebra primitives.
//!
//! Everything here operates on [`CMatrix`] (dynamically sized `Complex<f64>`
//! matrices). Decompositions are delegated to nalgebra; this module pins the
//! conventions the rest of the crate relies on: eigenvalues and singular
//! values sorted descending, a relative rank cutoff instead of determinant
//! tests, and explicit tolerances on Hermiticity and positivity checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = DVector<Complex64>;

/// Default relative cutoff below which singular values are treated as zero.
pub const DEFAULT_RTOL: f64 = 1e-10;
/// Eigenvalues above this (negative) threshold are clipped to zero in PSD checks.
pub const PSD_CLIP: f64 = -1e-10;
/// Asymmetry beyond this (relative) bound is rejected rather than symmetrized.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NumError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { asymmetry: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {lambda_min:.3e}")]
    NotPsd { lambda_min: f64 },
    #[error("tolerance {0} outside (0, 1)")]
    BadTolerance(f64),
}

/// Singular value decomposition `A = U diag(sigma) V^\dagger` with a relative
/// rank cutoff.
#[derive(Debug, Clone)]
pub struct SvdFactorization {
    /// Columns are left singular vectors.
    pub left_vectors: CMatrix,
    /// Non-negative, sorted descending.
    pub singular_values: Vec<f64>,
    /// Columns are right singular vectors.
    pub right_vectors: CMatrix,
    /// Relative tolerance used by [`SvdFactorization::rank`].
    pub rank_cutoff: f64,
}

impl SvdFactorization {
    /// Numerical rank: number of singular values above `rank_cutoff * sigma_max`.
    pub fn rank(&self) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        let cut = self.rank_cutoff * smax;
        self.singular_values.iter().filter(|&&s| s > cut).count()
    }

    /// Solve `A x = b` in the least-squares / minimal-norm sense through the
    /// factorization, inverting only singular values above the rank cutoff.
    pub fn solve(&self, b: &CVector) -> CVector {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let cut = self.rank_cutoff * smax;
        let uh_b = self.left_vectors.adjoint() * b;
        let mut coeffs = CVector::zeros(self.singular_values.len());
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s > cut {
                coeffs[k] = uh_b[k] / Complex64::new(s, 0.0);
            }
        }
        &self.right_vectors * coeffs
    }

    /// Moore-Penrose pseudo-inverse assembled from the factorization.
    pub fn pinv(&self) -> CMatrix {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let cut = self.rank_cutoff * smax;
        let n = self.right_vectors.nrows();
        let m = self.left_vectors.nrows();
        let mut out = CMatrix::zeros(n, m);
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s > cut {
                let vk = self.right_vectors.column(k);
                let uk = self.left_vectors.column(k);
                // out += v_k (1/s) u_k^dagger
                let inv = Complex64::new(1.0 / s, 0.0);
                out += vk * uk.adjoint() * inv;
            }
        }
        out
    }

    /// Orthonormal basis of the (numerical) null space: right singular vectors
    /// whose singular values fall below the cutoff.
    pub fn kernel_basis(&self) -> Vec<CVector> {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let cut = self.rank_cutoff * smax;
        let mut out = Vec::new();
        for k in 0..self.singular_values.len() {
            let below = if smax == 0.0 {
                true
            } else {
                self.singular_values[k] <= cut
            };
            if below {
                out.push(self.right_vectors.column(k).into_owned());
            }
        }
        // A square SVD has exactly ncols singular values, so this covers the
        // whole null space; rectangular inputs are not used by this crate.
        out
    }
}

fn check_finite(a: &CMatrix) -> Result<(), NumError> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(NumError::NonFinite)
    }
}

fn check_square(a: &CMatrix) -> Result<(), NumError> {
    if a.nrows() == a.ncols() {
        Ok(())
    } else {
        Err(NumError::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

/// Frobenius norm of the anti-Hermitian part `(A - A^dagger)/2`.
pub fn asymmetry(a: &CMatrix) -> f64 {
    let ah = (a - a.adjoint()) * Complex64::new(0.5, 0.0);
    ah.norm()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized as `(A + A^dagger)/2` when its asymmetry is within
/// `HERMITIAN_TOL` relative to its norm; larger asymmetry is an error.
/// Eigenvalues come back real and sorted descending, eigenvectors as the
/// columns of a unitary matrix in matching order.
pub fn eig_hermitian(a: &CMatrix) -> Result<(Vec<f64>, CMatrix), NumError> {
    check_square(a)?;
    check_finite(a)?;
    let scale = a.norm().max(1.0);
    let asym = asymmetry(a);
    if asym > HERMITIAN_TOL * scale {
        return Err(NumError::NotHermitian {
            asymmetry: asym,
            tol: HERMITIAN_TOL * scale,
        });
    }
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let se = h.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok((eigenvalues, vectors))
}

/// SVD with singular values sorted descending and the default rank cutoff.
pub fn svd(a: &CMatrix) -> Result<SvdFactorization, NumError> {
    svd_with_rtol(a, DEFAULT_RTOL)
}

/// SVD with an explicit relative rank cutoff.
pub fn svd_with_rtol(a: &CMatrix, rtol: f64) -> Result<SvdFactorization, NumError> {
    check_finite(a)?;
    if !(rtol > 0.0 && rtol < 1.0) {
        return Err(NumError::BadTolerance(rtol));
    }
    let f = a.clone().svd(true, true);
    let u = f.u.expect("svd requested u");
    let vt = f.v_t.expect("svd requested v_t");
    let k = f.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| f.singular_values[j].total_cmp(&f.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| f.singular_values[i]).collect();
    let mut left = CMatrix::zeros(u.nrows(), k);
    let mut right = CMatrix::zeros(vt.ncols(), k);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &vt.row(src).adjoint());
    }
    Ok(SvdFactorization {
        left_vectors: left,
        singular_values,
        right_vectors: right,
        rank_cutoff: rtol,
    })
}

/// Moore-Penrose pseudo-inverse with relative rank cutoff `rtol`.
pub fn pinv(a: &CMatrix, rtol: f64) -> Result<CMatrix, NumError> {
    Ok(svd_with_rtol(a, rtol)?.pinv())
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[PSD_CLIP, 0)` are clipped to zero; anything more negative
/// is a [`NumError::NotPsd`] error.
pub fn sqrtm_psd(a: &CMatrix) -> Result<CMatrix, NumError> {
    let (vals, vecs) = eig_hermitian(a)?;
    let scale = a.norm().max(1.0);
    let mut roots = Vec::with_capacity(vals.len());
    for &l in &vals {
        if l < PSD_CLIP * scale {
            return Err(NumError::NotPsd { lambda_min: l });
        }
        roots.push(Complex64::new(l.max(0.0).sqrt(), 0.0));
    }
    let d = CMatrix::from_diagonal(&CVector::from_vec(roots));
    Ok(&vecs * d * vecs.adjoint())
}

/// Result of a positive-semidefiniteness test, with the minimum eigenvalue as
/// a witness.
#[derive(Debug, Clone, Copy)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub lambda_min: f64,
}

/// Test `lambda_min(A) >= -tol` for Hermitian `A`.
pub fn is_psd(a: &CMatrix, tol: f64) -> Result<PsdCheck, NumError> {
    let (vals, _) = eig_hermitian(a)?;
    let lambda_min = vals.last().copied().unwrap_or(0.0);
    Ok(PsdCheck {
        is_psd: lambda_min >= -tol,
        lambda_min,
    })
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// d x d identity.
pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Build a complex matrix from a nested row-major array of (re, im) pairs.
pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> CMatrix {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nr, nc, |i, j| Complex64::new(rows[i][j].0, rows[i][j].1))
}

/// The 2x2 Pauli matrices `[identity, sigma_x, sigma_y, sigma_z]`.
pub fn pauli_matrices() -> [CMatrix; 4] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eig_identity_and_pauli_z() {
        let (vals, _) = eig_hermitian(&identity(2)).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);

        let sz = pauli_matrices()[3].clone();
        let (vals, vecs) = eig_hermitian(&sz).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] + 1.0).abs() < 1e-12);
        // orthonormal eigenvectors
        let g = vecs.adjoint() * &vecs;
        assert!((g - identity(2)).norm() < 1e-12);
    }

    #[test]
    fn eig_dual_of_pauli_channel_on_ground_state() {
        // E*(|0><0|) for the Pauli channel p = (0.7, 0.1, 0.1, 0.1) evaluates
        // to diag(0.8, 0.2) by summing p_i sigma_i |0><0| sigma_i.
        let a = CMatrix::from_row_slice(2, 2, &[c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.0)]);
        let (vals, _) = eig_hermitian(&a).unwrap();
        assert!((vals[0] - 0.8).abs() < 1e-12);
        assert!((vals[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(eig_hermitian(&a), Err(NumError::NotHermitian { .. })));
    }

    #[test]
    fn eig_rejects_non_square_and_non_finite() {
        let a = CMatrix::zeros(2, 3);
        assert!(matches!(eig_hermitian(&a), Err(NumError::NonSquare { .. })));
        let mut b = identity(2);
        b[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(eig_hermitian(&b), Err(NumError::NonFinite)));
    }

    #[test]
    fn svd_diag_and_unitary() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let f = svd(&a).unwrap();
        assert!((f.singular_values[0] - 1.0).abs() < 1e-12);
        assert!(f.singular_values[1].abs() < 1e-12);
        assert_eq!(f.rank(), 1);

        // Hadamard-like unitary: all singular values 1.
        let s = 1.0 / 2.0_f64.sqrt();
        let u = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        let f = svd(&u).unwrap();
        for sv in &f.singular_values {
            assert!((sv - 1.0).abs() < 1e-12);
        }
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn svd_reconstruction() {
        let a = CMatrix::from_fn(4, 4, |i, j| c((i * 7 + j) as f64 * 0.3 - 1.0, (i as f64) - (j as f64) * 0.5));
        let f = svd(&a).unwrap();
        let sig = CMatrix::from_diagonal(&CVector::from_vec(
            f.singular_values.iter().map(|&s| c(s, 0.0)).collect(),
        ));
        let rec = &f.left_vectors * sig * f.right_vectors.adjoint();
        assert!((rec - &a).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn pinv_of_invertible_matches_inverse() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]);
        let g = pinv(&a, DEFAULT_RTOL).unwrap();
        let inv = a.clone().try_inverse().unwrap();
        assert!((g - inv).norm() < 1e-10);
    }

    #[test]
    fn pinv_of_projector_is_itself() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let g = pinv(&a, DEFAULT_RTOL).unwrap();
        assert!((g - &a).norm() < 1e-12);
    }

    #[test]
    fn sqrtm_examples() {
        let b = sqrtm_psd(&identity(3)).unwrap();
        assert!((b - identity(3)).norm() < 1e-12);

        let a = CMatrix::from_row_slice(2, 2, &[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(9.0, 0.0)]);
        let b = sqrtm_psd(&a).unwrap();
        assert!((b[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((b[(1, 1)].re - 3.0).abs() < 1e-12);

        let half = identity(2) * c(0.5, 0.0);
        let b = sqrtm_psd(&half).unwrap();
        let r = 0.5_f64.sqrt();
        assert!((b[(0, 0)].re - r).abs() < 1e-12 && (b[(1, 1)].re - r).abs() < 1e-12);
    }

    #[test]
    fn sqrtm_rejects_indefinite() {
        let sz = pauli_matrices()[3].clone();
        assert!(matches!(sqrtm_psd(&sz), Err(NumError::NotPsd { .. })));
    }

    #[test]
    fn is_psd_examples() {
        let rho = identity(2) * c(0.5, 0.0);
        assert!(is_psd(&rho, 1e-10).unwrap().is_psd);

        let sz = pauli_matrices()[3].clone();
        let chk = is_psd(&sz, 1e-10).unwrap();
        assert!(!chk.is_psd);
        assert!((chk.lambda_min + 1.0).abs() < 1e-12);

        // Bloch vector of squared norm 1.21: lambda_min = (1 - 1.1)/2 = -0.05.
        let sx = pauli_matrices()[1].clone();
        let cand = (identity(2) + sx * c(1.1, 0.0)) * c(0.5, 0.0);
        let chk = is_psd(&cand, 1e-10).unwrap();
        assert!(!chk.is_psd);
        assert!((chk.lambda_min + 0.05).abs() < 1e-12);
    }

    #[test]
    fn kron_examples() {
        assert!((kron(&identity(2), &identity(2)) - identity(4)).norm() < 1e-15);

        let sx = pauli_matrices()[1].clone();
        let xx = kron(&sx, &sx);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i + j == 3 { 1.0 } else { 0.0 };
                assert!((xx[(i, j)] - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }
}
