//! Quantum states and channels in Kraus form.
//!
//! [`DensityMatrix`] and [`KrausChannel`] are validated at construction and
//! immutable afterwards. Channels failing the completeness relation
//! `sum_i K_i^dagger K_i = 1` (to 1e-8) are rejected rather than silently
//! renormalized. The module also carries the named channel constructors used
//! by the rest of the crate (Pauli, depolarizing, qutrit amplitude damping),
//! Bloch-vector conversions, seeded random-state ensembles, and the Uhlmann
//! fidelity.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::{
    self, eig_hermitian, identity, kron, pauli_matrices, sqrtm_psd, svd, CMatrix, CVector,
    NumError, SvdFactorization,
};
use crate::vectorize;

/// Tolerance on `sum K_i^dagger K_i = 1` at channel construction.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Tolerances on the density-matrix invariants.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("Kraus set violates completeness: ||sum K^dag K - 1|| = {0:.3e}")]
    IncompleteKraus(f64),
    #[error("channel needs at least one Kraus operator")]
    EmptyKraus,
    #[error("Kraus operators must be square and of equal dimension")]
    MalformedKraus,
    #[error("probabilities must be non-negative and sum to 1 (got sum {0})")]
    BadProbabilities(f64),
    #[error("parameter {name} = {value} outside [0, 1]")]
    ParamRange { name: &'static str, value: f64 },
    #[error("Bloch vector norm {0} exceeds 1")]
    BlochNorm(f64),
    #[error("ensemble {0:?} requires dimension 2, got {1}")]
    EnsembleDim(Ensemble, usize),
    #[error(transparent)]
    Num(#[from] NumError),
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// A validated quantum state: Hermitian, unit trace, positive semidefinite
/// (all to 1e-10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct DensityMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a matrix as a quantum state.
    pub fn new(matrix: CMatrix) -> Result<Self, ChannelError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(ChannelError::DimMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let scale = matrix.norm().max(1.0);
        let asym = numcore::asymmetry(&matrix);
        if asym > STATE_TOL * scale {
            return Err(ChannelError::NotHermitian(asym));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(ChannelError::TraceNotOne(tr.re));
        }
        let herm = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let (vals, _) = eig_hermitian(&herm)?;
        let lmin = vals.last().copied().unwrap_or(0.0);
        if lmin < -STATE_TOL {
            return Err(ChannelError::NotPsd(lmin));
        }
        Ok(Self {
            dim: herm.nrows(),
            matrix: herm,
        })
    }

    /// Project a near-state onto a valid density matrix: symmetrize, clip
    /// negative eigenvalues to zero, renormalize the trace. Intended for
    /// solver outputs that satisfy the invariants only up to solver tolerance.
    pub fn project(matrix: &CMatrix) -> Result<Self, ChannelError> {
        let herm = (matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let (vals, vecs) = eig_hermitian(&herm)?;
        let clipped: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            return Err(ChannelError::NotPsd(vals.last().copied().unwrap_or(0.0)));
        }
        let diag = CMatrix::from_diagonal(&CVector::from_vec(
            clipped.iter().map(|&l| Complex64::new(l / total, 0.0)).collect(),
        ));
        let m = &vecs * diag * vecs.adjoint();
        Ok(Self {
            dim: m.nrows(),
            matrix: m,
        })
    }

    /// Pure state `|psi><psi|` from a (not necessarily normalized) vector.
    pub fn pure(psi: &CVector) -> Result<Self, ChannelError> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(ChannelError::TraceNotOne(0.0));
        }
        let v = psi / Complex64::new(n, 0.0);
        let m = &v * v.adjoint();
        Ok(Self {
            dim: m.nrows(),
            matrix: m,
        })
    }

    /// Computational basis state `|k><k|`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self { dim, matrix: m }
    }

    /// Maximally mixed state `1/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            dim,
            matrix: identity(dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Purity `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

// ---------------------------------------------------------------------------
// Bloch vectors
// ---------------------------------------------------------------------------

/// Qubit Bloch vector `(r_1, r_2, r_3)`; valid states have norm at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub r: [f64; 3],
}

impl BlochVector {
    pub fn new(r1: f64, r2: f64, r3: f64) -> Self {
        Self { r: [r1, r2, r3] }
    }

    pub fn norm(&self) -> f64 {
        self.r.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Qubit state `(1 + r . sigma)/2` from a Bloch vector.
pub fn from_bloch(r: &BlochVector) -> Result<DensityMatrix, ChannelError> {
    if r.norm() > 1.0 + STATE_TOL {
        return Err(ChannelError::BlochNorm(r.norm()));
    }
    let paulis = pauli_matrices();
    let mut m = identity(2);
    for i in 0..3 {
        m += &paulis[i + 1] * Complex64::new(r.r[i], 0.0);
    }
    DensityMatrix::new(m * Complex64::new(0.5, 0.0))
}

/// Bloch components `r_i = Tr(sigma_i rho)` of a qubit state.
pub fn to_bloch(rho: &DensityMatrix) -> Result<BlochVector, ChannelError> {
    if rho.dim() != 2 {
        return Err(ChannelError::DimMismatch {
            expected: 2,
            got: rho.dim(),
        });
    }
    let paulis = pauli_matrices();
    let mut r = [0.0; 3];
    for i in 0..3 {
        r[i] = (&paulis[i + 1] * rho.matrix()).trace().re;
    }
    Ok(BlochVector { r })
}

// ---------------------------------------------------------------------------
// Kraus channels
// ---------------------------------------------------------------------------

/// A CPTP map `rho -> sum_i K_i rho K_i^dagger` given by square Kraus
/// operators satisfying `sum_i K_i^dagger K_i = 1` to 1e-8.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self, ChannelError> {
        let first = kraus.first().ok_or(ChannelError::EmptyKraus)?;
        let d = first.nrows();
        if kraus.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return Err(ChannelError::MalformedKraus);
        }
        let mut sum = CMatrix::zeros(d, d);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = (sum - identity(d)).norm();
        if dev > COMPLETENESS_TOL {
            return Err(ChannelError::IncompleteKraus(dev));
        }
        Ok(Self { dim: d, kraus })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Identity channel on dimension `d`.
    pub fn identity(d: usize) -> Self {
        Self {
            dim: d,
            kraus: vec![identity(d)],
        }
    }

    /// Apply the channel: `sum_i K_i rho K_i^dagger`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, ChannelError> {
        if rho.dim() != self.dim {
            return Err(ChannelError::DimMismatch {
                expected: self.dim,
                got: rho.dim(),
            });
        }
        let out = self.apply_raw(rho.matrix());
        DensityMatrix::new(out)
    }

    /// Apply to an arbitrary operator without state validation.
    pub fn apply_raw(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * a * k.adjoint();
        }
        out
    }

    /// Dual (adjoint) map `E*(A) = sum_i K_i^dagger A K_i`.
    pub fn dual_apply(&self, a: &CMatrix) -> Result<CMatrix, ChannelError> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(ChannelError::DimMismatch {
                expected: self.dim,
                got: a.nrows(),
            });
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k.adjoint() * a * k;
        }
        Ok(out)
    }

    /// The transfer matrix `M = sum_i K_i (x) K_i^*` without factorization.
    pub fn transfer_matrix_raw(&self) -> CMatrix {
        let d2 = self.dim * self.dim;
        let mut m = CMatrix::zeros(d2, d2);
        for k in &self.kraus {
            m += kron(k, &k.map(|z| z.conj()));
        }
        m
    }

    /// Transfer matrix together with its cached SVD.
    pub fn transfer_matrix(&self) -> Result<TransferMatrix, ChannelError> {
        let m = self.transfer_matrix_raw();
        let f = svd(&m)?;
        Ok(TransferMatrix { matrix: m, svd: f })
    }

    /// Extend to `1_{d_A} (x) E` acting on a composite system with an
    /// untouched subsystem of dimension `dim_a` in front.
    pub fn extend_bipartite(&self, dim_a: usize) -> KrausChannel {
        let id = identity(dim_a);
        let kraus = self.kraus.iter().map(|k| kron(&id, k)).collect();
        KrausChannel {
            dim: dim_a * self.dim,
            kraus,
        }
    }
}

/// `M = sum_i K_i (x) K_i^*` acting on row-stacked operators, with its SVD.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub matrix: CMatrix,
    pub svd: SvdFactorization,
}

impl TransferMatrix {
    pub fn dim_sq(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.dim_sq()
    }
}

// ---------------------------------------------------------------------------
// Named constructors
// ---------------------------------------------------------------------------

/// Pauli channel parameters `p = (p_0, .., p_3)` and the induced Bloch
/// contraction factors `q_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliChannelParams {
    pub p: [f64; 4],
}

impl PauliChannelParams {
    pub fn new(p: [f64; 4]) -> Result<Self, ChannelError> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&x| x < 0.0 || x > 1.0) || (sum - 1.0).abs() > COMPLETENESS_TOL {
            return Err(ChannelError::BadProbabilities(sum));
        }
        Ok(Self { p })
    }

    /// Contraction factors: `q_0 = 1`, `q_1 = p0+p1-p2-p3`,
    /// `q_2 = p0-p1+p2-p3`, `q_3 = p0-p1-p2+p3`.
    pub fn q(&self) -> [f64; 4] {
        let [p0, p1, p2, p3] = self.p;
        [
            p0 + p1 + p2 + p3,
            p0 + p1 - p2 - p3,
            p0 - p1 + p2 - p3,
            p0 - p1 - p2 + p3,
        ]
    }

    pub fn channel(&self) -> KrausChannel {
        let paulis = pauli_matrices();
        let kraus = self
            .p
            .iter()
            .zip(paulis.iter())
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, s)| s * Complex64::new(pi.sqrt(), 0.0))
            .collect();
        KrausChannel { dim: 2, kraus }
    }
}

/// Qubit Pauli channel with Kraus set `{sqrt(p_i) sigma_i}`.
pub fn pauli_channel(p: [f64; 4]) -> Result<KrausChannel, ChannelError> {
    Ok(PauliChannelParams::new(p)?.channel())
}

/// Depolarizing channel: Pauli channel `(1-p, p/3, p/3, p/3)`.
pub fn depolarizing(p: f64) -> Result<KrausChannel, ChannelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ChannelError::ParamRange {
            name: "p",
            value: p,
        });
    }
    pauli_channel([1.0 - p, p / 3.0, p / 3.0, p / 3.0])
}

/// Qutrit amplitude damping channel with rate `gamma`:
///
/// ```text
/// A_0 = |0><0| + sqrt(1-g)|1><1| + (1-g)|2><2|
/// A_1 = sqrt(g)|0><1| + sqrt(2g(1-g))|1><2|
/// A_2 = g|0><2|
/// ```
pub fn amplitude_damping_qutrit(gamma: f64) -> Result<KrausChannel, ChannelError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ChannelError::ParamRange {
            name: "gamma",
            value: gamma,
        });
    }
    let g = gamma;
    let mut a0 = CMatrix::zeros(3, 3);
    a0[(0, 0)] = Complex64::new(1.0, 0.0);
    a0[(1, 1)] = Complex64::new((1.0 - g).sqrt(), 0.0);
    a0[(2, 2)] = Complex64::new(1.0 - g, 0.0);
    let mut a1 = CMatrix::zeros(3, 3);
    a1[(0, 1)] = Complex64::new(g.sqrt(), 0.0);
    a1[(1, 2)] = Complex64::new((2.0 * g * (1.0 - g)).sqrt(), 0.0);
    let mut a2 = CMatrix::zeros(3, 3);
    a2[(0, 2)] = Complex64::new(g, 0.0);
    KrausChannel::new(vec![a0, a1, a2])
}

// ---------------------------------------------------------------------------
// Random states and channels
// ---------------------------------------------------------------------------

/// Random-state ensembles. The choice matters for every Monte Carlo fraction,
/// so it is always an explicit parameter and is echoed in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// `G G^dagger / Tr(G G^dagger)` for a complex Ginibre matrix `G`.
    HilbertSchmidt,
    /// Bloch vector uniform in the unit ball (qubits only).
    BlochBallUniform,
    /// Projector onto a Haar-random pure state.
    HaarPure,
}

impl Ensemble {
    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::HilbertSchmidt => "hilbert-schmidt",
            Ensemble::BlochBallUniform => "bloch-ball-uniform",
            Ensemble::HaarPure => "haar-pure",
        }
    }
}

impl std::str::FromStr for Ensemble {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hilbert-schmidt" => Ok(Ensemble::HilbertSchmidt),
            "bloch-ball-uniform" => Ok(Ensemble::BlochBallUniform),
            "haar-pure" => Ok(Ensemble::HaarPure),
            other => Err(format!(
                "unknown ensemble {other:?}; expected hilbert-schmidt, bloch-ball-uniform, or haar-pure"
            )),
        }
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Ginibre matrix with i.i.d. standard complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| complex_normal(rng))
}

/// Sample a random density matrix from the given ensemble.
pub fn random_density<R: Rng + ?Sized>(
    dim: usize,
    ensemble: Ensemble,
    rng: &mut R,
) -> Result<DensityMatrix, ChannelError> {
    match ensemble {
        Ensemble::HilbertSchmidt => {
            let g = ginibre(dim, rng);
            let m = &g * g.adjoint();
            let tr = m.trace().re;
            DensityMatrix::new(m * Complex64::new(1.0 / tr, 0.0))
        }
        Ensemble::BlochBallUniform => {
            if dim != 2 {
                return Err(ChannelError::EnsembleDim(ensemble, dim));
            }
            let mut n = [0.0; 3];
            loop {
                for x in n.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
                let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
                if len > 1e-12 {
                    let u: f64 = rng.random();
                    let radius = u.cbrt();
                    for x in n.iter_mut() {
                        *x *= radius / len;
                    }
                    break;
                }
            }
            from_bloch(&BlochVector { r: n })
        }
        Ensemble::HaarPure => {
            let mut v = CVector::from_fn(dim, |_, _| complex_normal(rng));
            let norm = v.norm();
            v /= Complex64::new(norm, 0.0);
            DensityMatrix::pure(&v)
        }
    }
}

/// Sample a random channel: Ginibre Kraus candidates whitened so the
/// completeness relation holds exactly.
pub fn random_channel<R: Rng + ?Sized>(
    dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Result<KrausChannel, ChannelError> {
    let gs: Vec<CMatrix> = (0..n_kraus.max(1)).map(|_| ginibre(dim, rng)).collect();
    let mut t = CMatrix::zeros(dim, dim);
    for g in &gs {
        t += g.adjoint() * g;
    }
    // T is PD almost surely; whiten with T^{-1/2}.
    let (vals, vecs) = eig_hermitian(&t)?;
    let inv_sqrt = CMatrix::from_diagonal(&DVector::from_vec(
        vals.iter()
            .map(|&l| Complex64::new(1.0 / l.max(1e-300).sqrt(), 0.0))
            .collect(),
    ));
    let whiten = &vecs * inv_sqrt * vecs.adjoint();
    KrausChannel::new(gs.into_iter().map(|g| g * &whiten).collect())
}

// ---------------------------------------------------------------------------
// Fidelity
// ---------------------------------------------------------------------------

/// Uhlmann fidelity `F(rho_1, rho_2) = Tr sqrt(sqrt(rho_1) rho_2 sqrt(rho_1))`,
/// computed as the nuclear norm of `sqrt(rho_1) sqrt(rho_2)` and clamped to
/// `[0, 1]`.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64, ChannelError> {
    if rho1.dim() != rho2.dim() {
        return Err(ChannelError::DimMismatch {
            expected: rho1.dim(),
            got: rho2.dim(),
        });
    }
    let s1 = sqrtm_psd(rho1.matrix())?;
    let s2 = sqrtm_psd(rho2.matrix())?;
    let f = svd(&(s1 * s2))?;
    Ok(f.singular_values.iter().sum::<f64>().clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// JSON wire formats
// ---------------------------------------------------------------------------

type ComplexJson = [f64; 2];

fn matrix_to_json(m: &CMatrix) -> Vec<Vec<ComplexJson>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(rows: &[Vec<ComplexJson>], dim: usize) -> Result<CMatrix, String> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(format!("matrix must be {dim}x{dim}"));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Wire format: `{"dim": d, "matrix": [[[re, im], ...], ...]}`.
#[derive(Serialize, Deserialize)]
struct StateJson {
    dim: usize,
    matrix: Vec<Vec<ComplexJson>>,
}

impl From<DensityMatrix> for StateJson {
    fn from(s: DensityMatrix) -> Self {
        StateJson {
            dim: s.dim,
            matrix: matrix_to_json(&s.matrix),
        }
    }
}

impl TryFrom<StateJson> for DensityMatrix {
    type Error = String;
    fn try_from(j: StateJson) -> Result<Self, Self::Error> {
        let m = matrix_from_json(&j.matrix, j.dim)?;
        DensityMatrix::new(m).map_err(|e| e.to_string())
    }
}

/// Wire format: `{"dim": d, "kraus": [[[[re, im], ...], ...], ...]}`.
#[derive(Serialize, Deserialize)]
struct ChannelJson {
    dim: usize,
    kraus: Vec<Vec<Vec<ComplexJson>>>,
}

impl From<KrausChannel> for ChannelJson {
    fn from(c: KrausChannel) -> Self {
        ChannelJson {
            dim: c.dim,
            kraus: c.kraus.iter().map(matrix_to_json).collect(),
        }
    }
}

impl TryFrom<ChannelJson> for KrausChannel {
    type Error = String;
    fn try_from(j: ChannelJson) -> Result<Self, Self::Error> {
        let kraus = j
            .kraus
            .iter()
            .map(|k| matrix_from_json(k, j.dim))
            .collect::<Result<Vec<_>, _>>()?;
        KrausChannel::new(kraus).map_err(|e| e.to_string())
    }
}

/// Residual of the vectorization identity for this channel on a state; thin
/// wrapper so callers need not import both modules.
pub fn vec_identity_residual(ch: &KrausChannel, rho: &DensityMatrix) -> f64 {
    vectorize::vec_identity_check(ch, rho.matrix())
}
