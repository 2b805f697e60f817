//! Analytic input-state design.
//!
//! Classifies a (channel, target) pair by the rank of the transfer matrix
//! `M = sum_i K_i (x) K_i^*` and the position of the vectorized target
//! relative to its range:
//!
//! - `M` invertible, candidate `devec(M^{-1} vec(rho_t))` a valid state ->
//!   [`PrecompResult::Unique`] (case 1a);
//! - `M` invertible, candidate fails positivity -> infeasible with
//!   [`InfeasibleReason::CandidateNotPsd`] (case 1b);
//! - `M` singular, target outside the range -> infeasible with
//!   [`InfeasibleReason::NotInRange`] (case 2a);
//! - `M` singular, target in range -> the affine solution family
//!   `M^g vec(rho_t) + ker M`, searched for a PSD member via the feasibility
//!   program (case 2b).
//!
//! Rank decisions use the relative singular-value cutoff from [`numcore`],
//! never a determinant.

use thiserror::Error;

use crate::channels::{
    from_bloch, to_bloch, BlochVector, ChannelError, DensityMatrix, KrausChannel,
    PauliChannelParams,
};
use crate::numcore::{
    self, eig_hermitian, identity, pauli_matrices, svd_with_rtol, CMatrix, CVector, NumError,
    DEFAULT_RTOL, PSD_CLIP,
};
use crate::sdp::{self, SdpError};
use crate::vectorize::{devec, vec, VectorizedOperator};

use num_complex::Complex64;

/// Relative residual above which the target is declared outside range(M).
pub const RANGE_TOL: f64 = 1e-8;
/// Hermiticity tolerance on the reconstructed candidate.
const CANDIDATE_HERM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum PrecompError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("feasibility search over the solution family failed: {0}")]
    Sdp(#[from] SdpError),
    #[error("candidate state is not Hermitian (asymmetry {asymmetry:.3e}); transfer matrix too ill-conditioned")]
    CandidateNotHermitian { asymmetry: f64 },
    #[error("candidate trace {trace} drifted from 1; transfer matrix too ill-conditioned")]
    TraceDrift { trace: f64 },
}

/// Why no input state exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// `M M^g vec(rho_t) != vec(rho_t)`: the linear system has no solution.
    NotInRange,
    /// The unique linear solution is not positive semidefinite.
    CandidateNotPsd,
}

/// Outcome of the analytic procedure.
#[derive(Debug, Clone)]
pub enum PrecompResult {
    /// The single input state mapping onto the target, with the achieved
    /// residual `||E(rho_in) - rho_t||_F`.
    Unique { rho_in: DensityMatrix, residual: f64 },
    /// An affine family of linear solutions: `vec(delta0) + span(kernel)`.
    /// `psd_member` holds one valid state from the family when any exists.
    Family {
        particular: CMatrix,
        kernel_basis: Vec<CVector>,
        psd_member: Option<DensityMatrix>,
    },
    /// No input state exists. The certificate is the range residual for
    /// [`InfeasibleReason::NotInRange`] and the minimum eigenvalue of the
    /// candidate for [`InfeasibleReason::CandidateNotPsd`].
    Infeasible {
        reason: InfeasibleReason,
        certificate: f64,
    },
}

impl PrecompResult {
    /// Whether a valid input state was produced.
    pub fn is_feasible(&self) -> bool {
        match self {
            PrecompResult::Unique { .. } => true,
            PrecompResult::Family { psd_member, .. } => psd_member.is_some(),
            PrecompResult::Infeasible { .. } => false,
        }
    }

    /// The input state, when one exists.
    pub fn rho_in(&self) -> Option<&DensityMatrix> {
        match self {
            PrecompResult::Unique { rho_in, .. } => Some(rho_in),
            PrecompResult::Family { psd_member, .. } => psd_member.as_ref(),
            PrecompResult::Infeasible { .. } => None,
        }
    }

    /// Procedure case: "1a" unique, "1b" candidate not PSD, "2a" not in
    /// range, "2b" solution family.
    pub fn case_tag(&self) -> &'static str {
        match self {
            PrecompResult::Unique { .. } => "1a",
            PrecompResult::Infeasible {
                reason: InfeasibleReason::CandidateNotPsd,
                ..
            } => "1b",
            PrecompResult::Infeasible {
                reason: InfeasibleReason::NotInRange,
                ..
            } => "2a",
            PrecompResult::Family { .. } => "2b",
        }
    }
}

/// Run the analytic procedure for a single-partite channel and target.
pub fn solve_exact(
    ch: &KrausChannel,
    rho_t: &DensityMatrix,
    rtol: f64,
) -> Result<PrecompResult, PrecompError> {
    let d = ch.dim();
    if rho_t.dim() != d {
        return Err(ChannelError::DimMismatch {
            expected: d,
            got: rho_t.dim(),
        }
        .into());
    }
    let m = ch.transfer_matrix_raw();
    let fac = svd_with_rtol(&m, rtol)?;
    let v_t = vec(rho_t.matrix());
    let x = fac.solve(&v_t.entries);

    if fac.rank() == d * d {
        // Case 1: unique linear solution; validity decides 1a vs 1b.
        let delta = devec(&VectorizedOperator::new(d, x));
        candidate_to_result(ch, rho_t, &delta)
    } else {
        // Case 2: singular transfer matrix.
        let residual = (&m * &x - &v_t.entries).norm();
        if residual > RANGE_TOL * v_t.entries.norm() {
            return Ok(PrecompResult::Infeasible {
                reason: InfeasibleReason::NotInRange,
                certificate: residual,
            });
        }
        let particular = devec(&VectorizedOperator::new(d, x));
        let kernel_basis = fac.kernel_basis();
        let psd_member = match sdp::feasibility(ch, rho_t)? {
            sdp::Feasibility::Feasible { rho_in, .. } => Some(rho_in),
            sdp::Feasibility::Infeasible { .. } => None,
        };
        Ok(PrecompResult::Family {
            particular,
            kernel_basis,
            psd_member,
        })
    }
}

/// Validate a full-rank candidate and classify 1a / 1b.
fn candidate_to_result(
    ch: &KrausChannel,
    rho_t: &DensityMatrix,
    delta: &CMatrix,
) -> Result<PrecompResult, PrecompError> {
    let scale = delta.norm().max(1.0);
    let asym = numcore::asymmetry(delta);
    if asym > CANDIDATE_HERM_TOL * scale {
        return Err(PrecompError::CandidateNotHermitian { asymmetry: asym });
    }
    let herm = (delta + delta.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = herm.trace().re;
    // Trace preservation forces Tr rho_in = Tr rho_t.
    if (tr - 1.0).abs() > 1e-9 {
        return Err(PrecompError::TraceDrift { trace: tr });
    }
    let (vals, _) = eig_hermitian(&herm)?;
    let lambda_min = vals.last().copied().unwrap_or(0.0);
    if lambda_min < PSD_CLIP {
        return Ok(PrecompResult::Infeasible {
            reason: InfeasibleReason::CandidateNotPsd,
            certificate: lambda_min,
        });
    }
    let rho_in = DensityMatrix::project(&herm)?;
    let out = ch.apply(&rho_in)?;
    let residual = (out.matrix() - rho_t.matrix()).norm();
    Ok(PrecompResult::Unique { rho_in, residual })
}

/// Bipartite variant: the channel acts on subsystem B of an `A (x) B` target;
/// the reduction `1 (x) E` is exact, so this delegates to [`solve_exact`] on
/// the extended channel.
pub fn solve_exact_bipartite(
    ch: &KrausChannel,
    dim_a: usize,
    rho_t_ab: &DensityMatrix,
    rtol: f64,
) -> Result<PrecompResult, PrecompError> {
    let extended = ch.extend_bipartite(dim_a);
    if rho_t_ab.dim() != extended.dim() {
        return Err(ChannelError::DimMismatch {
            expected: extended.dim(),
            got: rho_t_ab.dim(),
        }
        .into());
    }
    solve_exact(&extended, rho_t_ab, rtol)
}

/// Closed-form procedure for qubit Pauli channels.
///
/// With contraction factors `q_i` and target Bloch vector `r`:
/// all `q_i` nonzero gives the unique candidate `R_i = r_i / q_i`, valid
/// exactly when `sum R_i^2 <= 1`; a vanishing `q_k` requires `r_k = 0`
/// (otherwise out of range) and leaves `R_k` free, reported as a family whose
/// minimal-norm representative sets the free components to zero.
///
/// `q_i` with `|q_i| <= rtol` are treated as zero, mirroring the singular
/// value cutoff of the transfer matrix (whose spectrum is exactly `{1, |q_i|}`).
pub fn pauli_qubit_analytic(
    params: &PauliChannelParams,
    rho_t: &DensityMatrix,
    rtol: f64,
) -> Result<PrecompResult, PrecompError> {
    let q = params.q();
    let r = to_bloch(rho_t)?;
    let zero: Vec<bool> = (1..4).map(|i| q[i].abs() <= rtol).collect();

    if zero.iter().all(|z| !z) {
        let big_r = BlochVector::new(r.r[0] / q[1], r.r[1] / q[2], r.r[2] / q[3]);
        let lambda_min = (1.0 - big_r.norm()) / 2.0;
        if lambda_min < PSD_CLIP {
            return Ok(PrecompResult::Infeasible {
                reason: InfeasibleReason::CandidateNotPsd,
                certificate: lambda_min,
            });
        }
        let rho_in = DensityMatrix::project(&bloch_matrix(&big_r))?;
        let out = params.channel().apply(&rho_in)?;
        let residual = (out.matrix() - rho_t.matrix()).norm();
        return Ok(PrecompResult::Unique { rho_in, residual });
    }

    // Range condition: vanished directions must carry no target component.
    // || M M^g v - v || = sqrt(sum_k r_k^2 / 2) over the zeroed axes.
    let blocked_sq: f64 = zero
        .iter()
        .enumerate()
        .filter(|(_, &z)| z)
        .map(|(i, _)| r.r[i] * r.r[i])
        .sum();
    let residual = (blocked_sq / 2.0).sqrt();
    let vt_norm = ((1.0 + r.norm() * r.norm()) / 2.0).sqrt();
    if residual > RANGE_TOL * vt_norm {
        return Ok(PrecompResult::Infeasible {
            reason: InfeasibleReason::NotInRange,
            certificate: residual,
        });
    }

    // Family: minimal-norm representative zeroes the free components.
    let mut big_r = [0.0; 3];
    for i in 0..3 {
        if !zero[i] {
            big_r[i] = r.r[i] / q[i + 1];
        }
    }
    let rv = BlochVector { r: big_r };
    let particular = bloch_matrix(&rv);
    let paulis = pauli_matrices();
    let kernel_basis: Vec<CVector> = zero
        .iter()
        .enumerate()
        .filter(|(_, &z)| z)
        .map(|(i, _)| vec(&paulis[i + 1]).entries / Complex64::new(2.0_f64.sqrt(), 0.0))
        .collect();
    let psd_member = if rv.norm() <= 1.0 - 2.0 * PSD_CLIP {
        Some(from_bloch(&rv)?)
    } else {
        None
    };
    Ok(PrecompResult::Family {
        particular,
        kernel_basis,
        psd_member,
    })
}

/// `(1 + R . sigma)/2` without state validation (the norm may exceed 1).
fn bloch_matrix(r: &BlochVector) -> CMatrix {
    let paulis = pauli_matrices();
    let mut m = identity(2);
    for i in 0..3 {
        m += &paulis[i + 1] * Complex64::new(r.r[i], 0.0);
    }
    m * Complex64::new(0.5, 0.0)
}

/// Convenience wrapper with the default rank cutoff.
pub fn solve(ch: &KrausChannel, rho_t: &DensityMatrix) -> Result<PrecompResult, PrecompError> {
    solve_exact(ch, rho_t, DEFAULT_RTOL)
}
