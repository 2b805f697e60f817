//! Real embedding of complex Hermitian matrices.
//!
//! A Hermitian `H = A + iB` maps to the real symmetric `[[A, -B], [B, A]]`.
//! The embedding preserves positive semidefiniteness in both directions and
//! doubles every eigenvalue's multiplicity and every trace inner product:
//! `<embed(A), embed(B)> = 2 Re Tr(A B)`. Problem builders account for the
//! factor of two on constraint right-hand sides and objective values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::numcore::CMatrix;

/// `H = A + iB  ->  [[A, -B], [B, A]]` (symmetric when `H` is Hermitian).
pub fn embed(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        let z = h[(ii, jj)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            (1, 0) => z.im,
            _ => unreachable!(),
        }
    })
}

/// Recover the Hermitian matrix a real symmetric `2n x 2n` matrix represents.
///
/// For matrices in the image of [`embed`] this is the exact inverse. For a
/// general symmetric `X` it averages over the embedding symmetry
/// `X -> J X J^T`, which preserves feasibility and objective in any program
/// whose data lies in the embedded image.
pub fn deembed(x: &DMatrix<f64>) -> CMatrix {
    let n2 = x.nrows();
    debug_assert_eq!(n2 % 2, 0, "embedded matrix must have even dimension");
    let n = n2 / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
        let im = 0.5 * (x[(n + i, j)] - x[(i, n + j)]);
        Complex64::new(re, im)
    })
}
