//! Primal-dual interior-point solver for small dense semidefinite programs.
//!
//! Standard form over a block-diagonal PSD cone:
//!
//! ```text
//! minimize   <C, X>
//! such that  <A_m, X> = b_m,  m = 1..M
//!            X >= 0
//! ```
//!
//! The algorithm is a Mehrotra predictor-corrector path-following method with
//! Nesterov-Todd scaling, started from `X = S = 1`, `y = 0`. Constraints are
//! orthonormalized up front; rows that are linearly dependent are dropped, and
//! a right-hand side outside the row space yields an immediate infeasibility
//! certificate. Primal infeasibility of the cone problem itself is detected
//! through the dual ray `A^T(y) + S ~ 0, b^T y > 0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Block-diagonal real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMat {
    pub blocks: Vec<DMatrix<f64>>,
}

impl BlockMat {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    /// Total matrix dimension (sum of block sizes).
    pub fn order(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &BlockMat) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, t: f64) -> BlockMat {
        BlockMat {
            blocks: self.blocks.iter().map(|b| b * t).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &BlockMat, t: f64) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * t;
        }
    }

    pub fn symmetrize(&mut self) {
        for b in self.blocks.iter_mut() {
            let t = (&*b + b.transpose()) * 0.5;
            *b = t;
        }
    }

    /// Minimum eigenvalue across blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                if b.nrows() == 1 {
                    b[(0, 0)]
                } else {
                    b.clone()
                        .symmetric_eigen()
                        .eigenvalues
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn svec_len(dims: &[usize]) -> usize {
        dims.iter().map(|&n| n * (n + 1) / 2).sum()
    }

    /// Pack into the isometric vectorization of the symmetric part
    /// (off-diagonals scaled by sqrt(2), so dot products are preserved).
    fn svec(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(Self::svec_len(&self.dims()));
        let r2 = std::f64::consts::SQRT_2;
        for b in &self.blocks {
            let n = b.nrows();
            for j in 0..n {
                for i in j..n {
                    out.push(if i == j { b[(i, j)] } else { r2 * b[(i, j)] });
                }
            }
        }
        DVector::from_vec(out)
    }

    fn from_svec(dims: &[usize], v: &DVector<f64>) -> Self {
        let r2inv = 1.0 / std::f64::consts::SQRT_2;
        let mut blocks = Vec::with_capacity(dims.len());
        let mut k = 0;
        for &n in dims {
            let mut b = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in j..n {
                    let x = v[k];
                    k += 1;
                    if i == j {
                        b[(i, j)] = x;
                    } else {
                        b[(i, j)] = r2inv * x;
                        b[(j, i)] = r2inv * x;
                    }
                }
            }
            blocks.push(b);
        }
        Self { blocks }
    }
}

/// A standard-form semidefinite program.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub objective: BlockMat,
    pub constraints: Vec<BlockMat>,
    pub rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>) -> Self {
        let objective = BlockMat::zeros(&block_dims);
        Self {
            block_dims,
            objective,
            constraints: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, c: BlockMat) {
        debug_assert_eq!(c.dims(), self.block_dims);
        self.objective = c;
    }

    pub fn add_constraint(&mut self, a: BlockMat, b: f64) {
        debug_assert_eq!(a.dims(), self.block_dims);
        self.constraints.push(a);
        self.rhs.push(b);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Relative primal/dual feasibility tolerance.
    pub feas_tol: f64,
    /// Complementarity gap tolerance (relative to max(1, objective scale)).
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken each step.
    pub step_frac: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            max_iter: 200,
            step_frac: 0.98,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: BlockMat,
    pub y: DVector<f64>,
    pub s: BlockMat,
    /// `<C, X>` at the returned iterate.
    pub objective: f64,
    /// `b^T y` at the returned iterate.
    pub dual_objective: f64,
    /// Complementarity `<X, S>`.
    pub gap: f64,
    /// Relative primal residual `||b - A(X)|| / (1 + ||b||)`.
    pub primal_residual: f64,
    /// Relative dual residual `||C - S - A^T(y)||_F / (1 + ||C||_F)`.
    pub dual_residual: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Farkas dual ray when status is Infeasible.
    pub infeasibility_certificate: Option<DVector<f64>>,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("problem has no PSD blocks")]
    Empty,
    #[error("constraint count {constraints} does not match rhs count {rhs}")]
    ShapeMismatch { constraints: usize, rhs: usize },
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

/// Lyapunov solve `(Lambda R + R Lambda)/2 = RHS` for diagonal `Lambda`.
fn lyapunov_inv(lambda: &[f64], rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lambda.len();
    DMatrix::from_fn(n, n, |i, j| 2.0 * rhs[(i, j)] / (lambda[i] + lambda[j]))
}

/// Largest step `alpha` with `I + alpha * D` staying PSD, where
/// `D = Lambda^{-1/2} M Lambda^{-1/2}`; `f64::INFINITY` when unrestricted.
fn max_step(lambda: &[f64], m: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    if n == 1 {
        let d = m[(0, 0)] / lambda[0];
        return if d >= 0.0 { f64::INFINITY } else { -1.0 / d };
    }
    let d = DMatrix::from_fn(n, n, |i, j| m[(i, j)] / (lambda[i] * lambda[j]).sqrt());
    let sym = (&d + d.transpose()) * 0.5;
    let min = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

struct Scaling {
    /// Per block: G with G^{-1} X G^{-T} = G^T S G = diag(lambda).
    g: Vec<DMatrix<f64>>,
    /// Per block: W = G G^T.
    w: Vec<DMatrix<f64>>,
    /// Per block: the scaled-point spectrum.
    lambda: Vec<Vec<f64>>,
}

fn nt_scaling(x: &BlockMat, s: &BlockMat) -> Result<Scaling, SolverError> {
    let mut g = Vec::new();
    let mut w = Vec::new();
    let mut lambda = Vec::new();
    for (xb, sb) in x.blocks.iter().zip(&s.blocks) {
        let lx = xb
            .clone()
            .cholesky()
            .ok_or_else(|| SolverError::Numerical("X left the cone".into()))?;
        let ls = sb
            .clone()
            .cholesky()
            .ok_or_else(|| SolverError::Numerical("S left the cone".into()))?;
        let lx = lx.l();
        let ls = ls.l();
        let q = ls.transpose() * &lx;
        let svd = q.svd(true, true);
        let u = svd.u.as_ref().expect("svd with u");
        let vt = svd.v_t.as_ref().expect("svd with v_t");
        let _ = u;
        let sig: Vec<f64> = svd.singular_values.iter().cloned().collect();
        if sig.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(SolverError::Numerical("degenerate NT scaling point".into()));
        }
        // G = Lx * V * Sigma^{-1/2}
        let v = vt.transpose();
        let mut gb = &lx * v;
        for (k, &s) in sig.iter().enumerate() {
            let f = 1.0 / s.sqrt();
            gb.column_mut(k).scale_mut(f);
        }
        let wb = &gb * gb.transpose();
        g.push(gb);
        w.push(wb);
        lambda.push(sig);
    }
    Ok(Scaling { g, w, lambda })
}

/// Presolved constraint system: orthonormal rows in svec coordinates.
struct Presolved {
    cons: Vec<BlockMat>,
    rhs: DVector<f64>,
    /// Maps reduced dual variables back to original ones: `y = back * y_red`.
    back: DMatrix<f64>,
}

enum PresolveOutcome {
    Reduced(Presolved),
    /// The linear system `A(X) = b` has no symmetric solution at all.
    Inconsistent { certificate: DVector<f64> },
}

fn presolve(prob: &SdpProblem) -> PresolveOutcome {
    let m = prob.constraints.len();
    let svlen = BlockMat::svec_len(&prob.block_dims);
    let mut amat = DMatrix::<f64>::zeros(m, svlen);
    for (i, a) in prob.constraints.iter().enumerate() {
        amat.set_row(i, &a.svec().transpose());
    }
    let b = DVector::from_vec(prob.rhs.clone());

    let svd = amat.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cut = smax * 1e-12;
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();

    // Consistency of b against the row space.
    let mut b_proj = DVector::zeros(m);
    for k in 0..rank {
        let uk = u.column(k);
        let coeff = uk.dot(&b);
        b_proj += uk * coeff;
    }
    let b_perp = &b - &b_proj;
    if b_perp.norm() > 1e-10 * (1.0 + b.norm()) {
        // A^T(y) = 0 with b^T y > 0: Farkas certificate of linear infeasibility.
        let cert = &b_perp / b_perp.norm();
        return PresolveOutcome::Inconsistent { certificate: cert };
    }

    let mut cons = Vec::with_capacity(rank);
    let mut rhs = DVector::zeros(rank);
    let mut back = DMatrix::zeros(m, rank);
    for k in 0..rank {
        let row = vt.row(k).transpose();
        cons.push(BlockMat::from_svec(&prob.block_dims, &row));
        let sk = svd.singular_values[k];
        rhs[k] = u.column(k).dot(&b) / sk;
        let scaled = u.column(k) / sk;
        back.set_column(k, &scaled);
    }
    PresolveOutcome::Reduced(Presolved { cons, rhs, back })
}

/// Solve a standard-form SDP with a Mehrotra predictor-corrector NT method.
pub fn solve_sdp(prob: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, SolverError> {
    if prob.block_dims.is_empty() {
        return Err(SolverError::Empty);
    }
    if prob.constraints.len() != prob.rhs.len() {
        return Err(SolverError::ShapeMismatch {
            constraints: prob.constraints.len(),
            rhs: prob.rhs.len(),
        });
    }

    let pre = match presolve(prob) {
        PresolveOutcome::Reduced(p) => p,
        PresolveOutcome::Inconsistent { certificate } => {
            let dims = &prob.block_dims;
            return Ok(SdpSolution {
                x: BlockMat::identity(dims),
                y: DVector::zeros(prob.constraints.len()),
                s: BlockMat::identity(dims),
                objective: f64::NAN,
                dual_objective: f64::NAN,
                gap: f64::NAN,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                status: SdpStatus::Infeasible,
                iterations: 0,
                infeasibility_certificate: Some(certificate),
            });
        }
    };

    let dims = prob.block_dims.clone();
    let c = &prob.objective;
    let cons = &pre.cons;
    let b = &pre.rhs;
    let m = cons.len();
    let nu: usize = dims.iter().sum();

    let mut x = BlockMat::identity(&dims);
    let mut s = BlockMat::identity(&dims);
    let mut y = DVector::<f64>::zeros(m);

    let b_norm = b.norm();
    let c_norm = c.norm();

    let apply_a = |v: &BlockMat| -> DVector<f64> {
        DVector::from_fn(m, |i, _| cons[i].dot(v))
    };
    let apply_at = |yv: &DVector<f64>| -> BlockMat {
        let mut out = BlockMat::zeros(&dims);
        for i in 0..m {
            out.add_scaled(&cons[i], yv[i]);
        }
        out
    };

    let finish = |x: BlockMat,
                  y_red: DVector<f64>,
                  s: BlockMat,
                  status: SdpStatus,
                  iterations: usize,
                  cert: Option<DVector<f64>>| {
        let p_obj = prob.objective.dot(&x);
        let y_full = &pre.back * &y_red;
        let d_obj: f64 = prob
            .rhs
            .iter()
            .zip(y_full.iter())
            .map(|(bi, yi)| bi * yi)
            .sum();
        let gap = x.dot(&s);
        let rp = {
            let ax = apply_a(&x);
            (b - ax).norm() / (1.0 + b_norm)
        };
        let rd = {
            let mut r = prob.objective.clone();
            r.add_scaled(&s, -1.0);
            r.add_scaled(&apply_at(&y_red), -1.0);
            r.norm() / (1.0 + c_norm)
        };
        SdpSolution {
            x,
            y: y_full,
            s,
            objective: p_obj,
            dual_objective: d_obj,
            gap,
            primal_residual: rp,
            dual_residual: rd,
            status,
            iterations,
            infeasibility_certificate: cert,
        }
    };

    for iter in 0..opts.max_iter {
        // Residuals and complementarity at the current iterate.
        let ax = apply_a(&x);
        let r_p = b - &ax;
        let mut r_d = c.clone();
        r_d.add_scaled(&s, -1.0);
        r_d.add_scaled(&apply_at(&y), -1.0);
        let gap = x.dot(&s);
        let mu = gap / nu as f64;

        let p_obj = c.dot(&x);
        let d_obj = b.dot(&y);
        let rel_p = r_p.norm() / (1.0 + b_norm);
        let rel_d = r_d.norm() / (1.0 + c_norm);
        let scale = 1.0_f64.max(p_obj.abs()).max(d_obj.abs());

        if rel_p <= opts.feas_tol && rel_d <= opts.feas_tol && gap <= opts.gap_tol * scale {
            return Ok(finish(x, y, s, SdpStatus::Optimal, iter, None));
        }

        // Dual-ray test for primal infeasibility: A^T(y) + S ~ 0, b^T y > 0.
        if d_obj > 0.0 {
            let mut ray_res = apply_at(&y);
            ray_res.add_scaled(&s, 1.0);
            if ray_res.norm() <= 1e-8 * d_obj {
                let y_full = &pre.back * &y;
                let cert = &y_full / d_obj;
                return Ok(finish(x, y, s, SdpStatus::Infeasible, iter, Some(cert)));
            }
        }

        let scaling = match nt_scaling(&x, &s) {
            Ok(sc) => sc,
            Err(_) => return Ok(finish(x, y, s, SdpStatus::MaxIter, iter, None)),
        };

        // Schur complement M_ij = <A_i, W A_j W>, SPD for independent rows.
        let waw: Vec<BlockMat> = cons
            .iter()
            .map(|a| BlockMat {
                blocks: a
                    .blocks
                    .iter()
                    .zip(&scaling.w)
                    .map(|(ab, wb)| wb * ab * wb)
                    .collect(),
            })
            .collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = cons[i].dot(&waw[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let mut chol = schur.clone().cholesky();
        if chol.is_none() {
            // Tiny diagonal lift against rounding; constraint rows are
            // orthonormal so the scale of the lift is benign.
            let lift = 1e-13 * (schur.trace() / m.max(1) as f64).max(1e-30);
            for i in 0..m {
                schur[(i, i)] += lift;
            }
            chol = schur.clone().cholesky();
        }
        let Some(schur_chol) = chol else {
            return Ok(finish(x, y, s, SdpStatus::MaxIter, iter, None));
        };

        // W r_d W appears in both predictor and corrector right-hand sides.
        let wrdw = BlockMat {
            blocks: r_d
                .blocks
                .iter()
                .zip(&scaling.w)
                .map(|(rb, wb)| wb * rb * wb)
                .collect(),
        };
        let a_wrdw = apply_a(&wrdw);

        // One Newton solve for a given complementarity target (in scaled space).
        let solve_direction = |rc: &Vec<DMatrix<f64>>| {
            // t1 = Lyapunov^{-1}(Rc), then G t1 G^T
            let t1: Vec<DMatrix<f64>> = rc
                .iter()
                .zip(&scaling.lambda)
                .map(|(r, l)| lyapunov_inv(l, r))
                .collect();
            let gt1gt = BlockMat {
                blocks: t1
                    .iter()
                    .zip(&scaling.g)
                    .map(|(t, g)| g * t * g.transpose())
                    .collect(),
            };
            let rhs_y = &r_p - apply_a(&gt1gt) + &a_wrdw;
            let dy = schur_chol.solve(&rhs_y);
            let mut ds = r_d.clone();
            ds.add_scaled(&apply_at(&dy), -1.0);
            // scaled dual step and scaled primal step
            let ds_hat: Vec<DMatrix<f64>> = ds
                .blocks
                .iter()
                .zip(&scaling.g)
                .map(|(d, g)| g.transpose() * d * g)
                .collect();
            let dx_hat: Vec<DMatrix<f64>> = t1
                .iter()
                .zip(&ds_hat)
                .map(|(t, dsh)| t - dsh)
                .collect();
            let mut dx = BlockMat {
                blocks: dx_hat
                    .iter()
                    .zip(&scaling.g)
                    .map(|(d, g)| g * d * g.transpose())
                    .collect(),
            };
            dx.symmetrize();
            (dx, dy, ds, dx_hat, ds_hat)
        };

        // Predictor: drive straight toward complementarity zero.
        let rc_aff: Vec<DMatrix<f64>> = scaling
            .lambda
            .iter()
            .map(|l| {
                DMatrix::from_fn(l.len(), l.len(), |i, j| {
                    if i == j {
                        -l[i] * l[i]
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        let (_dx_aff, _dy_aff, _ds_aff, dxh_aff, dsh_aff) = solve_direction(&rc_aff);

        let alpha_p_aff = scaling
            .lambda
            .iter()
            .zip(&dxh_aff)
            .map(|(l, d)| max_step(l, d))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let alpha_d_aff = scaling
            .lambda
            .iter()
            .zip(&dsh_aff)
            .map(|(l, d)| max_step(l, d))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);

        // Predicted complementarity after the affine step, computed in the
        // scaled space where X-hat = S-hat = diag(lambda).
        let mut gap_aff = 0.0;
        for (bi, l) in scaling.lambda.iter().enumerate() {
            let dxh = &dxh_aff[bi];
            let dsh = &dsh_aff[bi];
            let n = l.len();
            for i in 0..n {
                for j in 0..n {
                    let xh = if i == j { l[i] } else { 0.0 } + alpha_p_aff * dxh[(i, j)];
                    let sh = if i == j { l[i] } else { 0.0 } + alpha_d_aff * dsh[(i, j)];
                    gap_aff += xh * sh;
                }
            }
        }
        gap_aff = gap_aff.max(0.0);
        let sigma = ((gap_aff / gap).powi(3)).clamp(1e-12, 1.0);

        // Corrector with Mehrotra second-order term.
        let rc_comb: Vec<DMatrix<f64>> = scaling
            .lambda
            .iter()
            .zip(dxh_aff.iter().zip(&dsh_aff))
            .map(|(l, (dxh, dsh))| {
                let n = l.len();
                let cross = (dxh * dsh + dsh * dxh) * 0.5;
                DMatrix::from_fn(n, n, |i, j| {
                    let base = if i == j {
                        sigma * mu - l[i] * l[i]
                    } else {
                        0.0
                    };
                    base - cross[(i, j)]
                })
            })
            .collect();
        let (dx, dy, ds, dxh, dsh) = solve_direction(&rc_comb);

        let alpha_p = (opts.step_frac
            * scaling
                .lambda
                .iter()
                .zip(&dxh)
                .map(|(l, d)| max_step(l, d))
                .fold(f64::INFINITY, f64::min))
        .min(1.0);
        let alpha_d = (opts.step_frac
            * scaling
                .lambda
                .iter()
                .zip(&dsh)
                .map(|(l, d)| max_step(l, d))
                .fold(f64::INFINITY, f64::min))
        .min(1.0);

        if alpha_p < 1e-10 && alpha_d < 1e-10 {
            return Ok(finish(x, y, s, SdpStatus::MaxIter, iter, None));
        }

        x.add_scaled(&dx, alpha_p);
        x.symmetrize();
        y += &dy * alpha_d;
        s.add_scaled(&ds, alpha_d);
        s.symmetrize();
    }

    Ok(finish(x, y, s, SdpStatus::MaxIter, opts.max_iter, None))
}
