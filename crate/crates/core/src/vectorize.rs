//! Row-stacking correspondence between operators and vectors.
//!
//! A `d x d` operator `A` maps to the length-`d^2` vector with `A[i][j]` at
//! position `i*d + j`. Under this convention `vec(K rho K^dagger) =
//! (K (x) K^*) vec(rho)`, which is what the transfer-matrix solver relies on.
//! Column-stacking would transpose the transfer matrix and swap the
//! conjugation onto the wrong factor, so the convention is pinned by tests.

use crate::channels::KrausChannel;
use crate::numcore::{CMatrix, CVector};

/// A vectorized `dim x dim` operator: entry `i*dim + j` holds `A[i][j]`.
#[derive(Debug, Clone)]
pub struct VectorizedOperator {
    pub dim: usize,
    pub entries: CVector,
}

impl VectorizedOperator {
    pub fn new(dim: usize, entries: CVector) -> Self {
        assert_eq!(entries.len(), dim * dim, "length must equal dim^2");
        Self { dim, entries }
    }
}

/// Row-stack a square matrix into a vector.
pub fn vec(a: &CMatrix) -> VectorizedOperator {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "vec expects a square matrix");
    let entries = CVector::from_fn(d * d, |k, _| a[(k / d, k % d)]);
    VectorizedOperator::new(d, entries)
}

/// Inverse of [`vec`]: reshape a length-`d^2` vector back into a matrix.
///
/// Index reshaping is mathematically identical to the partial-trace read-out
/// `A = Tr_B(|A>> sum_i <ii|)`; the partial-trace form is kept as a test
/// oracle.
pub fn devec(v: &VectorizedOperator) -> CMatrix {
    let d = v.dim;
    CMatrix::from_fn(d, d, |i, j| v.entries[i * d + j])
}

/// Residual `|| vec(sum_i K_i rho K_i^dagger) - (sum_i K_i (x) K_i^*) vec(rho) ||_2`.
///
/// Both sides are computed independently; the contract is that this vanishes
/// (to 1e-10 relative) for every valid channel/state pair.
pub fn vec_identity_check(ch: &KrausChannel, rho: &CMatrix) -> f64 {
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for k in ch.kraus() {
        out += k * rho * k.adjoint();
    }
    let lhs = vec(&out).entries;
    let m = ch.transfer_matrix_raw();
    let rhs = m * vec(rho).entries;
    (lhs - rhs).norm()
}

/// Permutation aligning the standard composite row-stacking order with the
/// bipartite `|i_A j_B i'_A j'_B>` component order.
///
/// Row-stacking a composite operator already enumerates indices as
/// `(i_A, i_B, j_A, j_B)`, which is exactly the bipartite order, so the
/// permutation is the identity. The function exists so that fact is stated
/// once and exercised by tests rather than silently assumed.
pub fn bipartite_index_permutation(dim_a: usize, dim_b: usize) -> Vec<usize> {
    (0..(dim_a * dim_b).pow(2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::KrausChannel;
    use crate::numcore::{identity, kron, pauli_matrices};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vec_basis_examples() {
        let v = vec(&identity(2));
        let want = [1.0, 0.0, 0.0, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((v.entries[k] - c(*w, 0.0)).norm() < 1e-15);
        }

        let sx = pauli_matrices()[1].clone();
        let v = vec(&sx);
        let want = [0.0, 1.0, 1.0, 0.0];
        for (k, w) in want.iter().enumerate() {
            assert!((v.entries[k] - c(*w, 0.0)).norm() < 1e-15);
        }

        // |0><1| has its single entry at row 0, column 1 -> position 1.
        let mut e01 = CMatrix::zeros(2, 2);
        e01[(0, 1)] = c(1.0, 0.0);
        let v = vec(&e01);
        assert!((v.entries[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(v.entries[0].norm() + v.entries[2].norm() + v.entries[3].norm() < 1e-15);
    }

    #[test]
    fn devec_inverts_vec() {
        for m in [identity(2), pauli_matrices()[1].clone(), pauli_matrices()[2].clone()] {
            let back = devec(&vec(&m));
            assert!((back - &m).norm() < 1e-15);
        }
    }

    /// Partial-trace oracle: A = Tr_B(|A>> sum_i <ii|), evaluated literally.
    fn devec_by_partial_trace(v: &VectorizedOperator) -> CMatrix {
        let d = v.dim;
        // |A>> sum_i <ii| is a d^2 x d^2 matrix; trace out the second factor.
        let mut bra = CVector::zeros(d * d);
        for i in 0..d {
            bra[i * d + i] = c(1.0, 0.0);
        }
        let big = &v.entries * bra.transpose();
        CMatrix::from_fn(d, d, |i, j| {
            (0..d).map(|k| big[(i * d + k, j * d + k)]).sum()
        })
    }

    #[test]
    fn devec_matches_partial_trace_oracle() {
        let a = CMatrix::from_fn(3, 3, |i, j| c(i as f64 - 0.3 * j as f64, 0.1 * (i * j) as f64));
        let v = vec(&a);
        let by_reshape = devec(&v);
        let by_trace = devec_by_partial_trace(&v);
        assert!((by_reshape - by_trace).norm() < 1e-14);
    }

    #[test]
    fn identity_channel_residual_is_zero() {
        let ch = KrausChannel::new(vec![identity(2)]).unwrap();
        let rho = identity(2) * c(0.5, 0.0);
        assert!(vec_identity_check(&ch, &rho) < 1e-15);
    }

    #[test]
    fn pauli_and_damping_residuals_vanish() {
        use crate::channels::{amplitude_damping_qutrit, pauli_channel, random_density, Ensemble};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);

        let ch = pauli_channel([0.7, 0.1, 0.1, 0.1]).unwrap();
        let rho = random_density(2, Ensemble::HilbertSchmidt, &mut rng).unwrap();
        assert!(vec_identity_check(&ch, rho.matrix()) <= 1e-12);

        let ch = amplitude_damping_qutrit(0.3).unwrap();
        let rho = random_density(3, Ensemble::HilbertSchmidt, &mut rng).unwrap();
        assert!(vec_identity_check(&ch, rho.matrix()) <= 1e-12);
    }

    #[test]
    fn bipartite_permutation_is_identity() {
        // Enumerate the components of |H>> = sum H_{(iA iB),(jA jB)} |iA iB jA jB>
        // and compare against row-stacking positions.
        let (da, db) = (2, 2);
        let d = da * db;
        let h = CMatrix::from_fn(d, d, |i, j| c((i * d + j) as f64, (i + j) as f64));
        let v = vec(&h);
        for ia in 0..da {
            for ib in 0..db {
                for ja in 0..da {
                    for jb in 0..db {
                        let row = ia * db + ib;
                        let col = ja * db + jb;
                        let pos = ((ia * db + ib) * da + ja) * db + jb;
                        assert_eq!(pos, row * d + col);
                        assert!((v.entries[pos] - h[(row, col)]).norm() < 1e-15);
                    }
                }
            }
        }
        let perm = bipartite_index_permutation(da, db);
        assert_eq!(perm, (0..16).collect::<Vec<_>>());
        assert_eq!(bipartite_index_permutation(1, 3), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn bipartite_transfer_matrix_matches_tensor_form() {
        use crate::channels::amplitude_damping_qutrit;
        // M of the extended channel equals sum_i 1 (x) K_i (x) 1 (x) K_i^*.
        let ch = amplitude_damping_qutrit(0.4).unwrap();
        let ext = ch.extend_bipartite(2);
        let m_ext = ext.transfer_matrix_raw();
        let mut m_tensor = CMatrix::zeros(36, 36);
        let id = identity(2);
        for k in ch.kraus() {
            m_tensor += kron(&kron(&id, k), &kron(&id, &k.map(|z| z.conj())));
        }
        assert!((m_ext - m_tensor).norm() < 1e-12);
    }

    #[test]
    fn vec_is_linear() {
        let a = CMatrix::from_fn(3, 3, |i, j| c(i as f64, j as f64));
        let b = CMatrix::from_fn(3, 3, |i, j| c((i * j) as f64, -1.0));
        let alpha = c(0.3, -0.7);
        let beta = c(-1.2, 0.4);
        let lhs = vec(&(&a * alpha + &b * beta)).entries;
        let rhs = vec(&a).entries * alpha + vec(&b).entries * beta;
        assert!((lhs - rhs).norm() < 1e-13);
    }
}
