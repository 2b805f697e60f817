//! Desk-scale numerical studies.
//!
//! - [`monte_carlo`]: sample random targets for a fixed channel, solve each
//!   one analytically and by SDP, and report the fraction reachable exactly
//!   and the fidelity distribution. Samples draw per-index RNG streams from
//!   the master seed, so reports are reproducible regardless of thread count.
//! - [`example2_closed_form`]: the closed-form two-qutrit input state for the
//!   amplitude-damping example, used as an entrywise oracle against the
//!   generic bipartite solver.
//! - [`qecc_fidelity`] / [`qepc_depolarizing_fidelity`] / [`find_crossover`]:
//!   the fidelity curves comparing pre-compensation against the 9- and
//!   5-qubit codes under depolarizing noise, and the crossover points between
//!   them.

use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{
    to_bloch, ChannelError, DensityMatrix, Ensemble, KrausChannel, PauliChannelParams,
};
use crate::numcore::{CMatrix, DEFAULT_RTOL, PSD_CLIP};
use crate::precomp::{self, PrecompError, RANGE_TOL};
use crate::sdp::{self, SdpError, FEASIBILITY_SLACK_TOL};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Precomp(#[from] PrecompError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("analytic and SDP classifications disagree on sample {sample}: analytic {analytic}, SDP slack {slack:.3e}")]
    PathsDisagree {
        sample: usize,
        analytic: bool,
        slack: f64,
    },
    #[error("no sign change of f - g in the interval")]
    NoSignChange,
    #[error("multiple sign changes of f - g in the interval; narrow it")]
    MultipleSignChanges,
    #[error("parameter {name} = {value} outside {range}")]
    ParamRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Threshold on the SDP fidelity for counting a sample as exactly reachable.
pub const PERFECT_FIDELITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub target: DensityMatrix,
    pub fidelity: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdFraction {
    pub threshold: f64,
    pub fraction: f64,
}

/// Outcome of a Monte Carlo run. Serializes to a self-describing JSON
/// document; equal configurations produce byte-identical documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub channel: KrausChannel,
    pub ensemble: Ensemble,
    pub samples: usize,
    pub seed: u64,
    /// Fraction with SDP fidelity at least `1 - 1e-6`.
    pub fraction_perfect: f64,
    /// Fractions above each requested threshold, in the given order.
    pub fraction_above: Vec<ThresholdFraction>,
    pub records: Vec<SampleRecord>,
}

/// Default report thresholds.
pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.99, 0.90];

/// Sample `n` targets, solve each analytically and by SDP, and aggregate.
///
/// Per sample: the analytic procedure decides reachability, the feasibility
/// program cross-checks it (a decisive disagreement aborts the run), and the
/// fidelity-maximization program supplies the fidelity. Samples whose
/// feasibility slack is within ten tolerances of the decision boundary are
/// exempt from the cross-check; the two paths legitimately dither there.
pub fn monte_carlo(
    ch: &KrausChannel,
    n_samples: usize,
    ensemble: Ensemble,
    seed: u64,
    thresholds: &[f64],
) -> Result<MonteCarloReport, ExperimentError> {
    let results: Result<Vec<SampleRecord>, ExperimentError> = (0..n_samples)
        .into_par_iter()
        .map(|i| sample_one(ch, ensemble, seed, i))
        .collect();
    let records = results?;

    let n = n_samples.max(1) as f64;
    let fraction_perfect = records
        .iter()
        .filter(|r| r.fidelity >= 1.0 - PERFECT_FIDELITY_TOL)
        .count() as f64
        / n;
    let fraction_above = thresholds
        .iter()
        .map(|&t| ThresholdFraction {
            threshold: t,
            fraction: records.iter().filter(|r| r.fidelity > t).count() as f64 / n,
        })
        .collect();

    Ok(MonteCarloReport {
        channel: ch.clone(),
        ensemble,
        samples: n_samples,
        seed,
        fraction_perfect,
        fraction_above,
        records,
    })
}

fn sample_one(
    ch: &KrausChannel,
    ensemble: Ensemble,
    seed: u64,
    index: usize,
) -> Result<SampleRecord, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    let target = crate::channels::random_density(ch.dim(), ensemble, &mut rng)?;

    let analytic = precomp::solve_exact(ch, &target, DEFAULT_RTOL)?;
    let feasible = analytic.is_feasible();

    let sdp_check = sdp::feasibility(ch, &target)?;
    let slack = match &sdp_check {
        sdp::Feasibility::Feasible { slack, .. } => *slack,
        sdp::Feasibility::Infeasible { slack } => *slack,
    };
    let decisive = (slack - FEASIBILITY_SLACK_TOL).abs() > 10.0 * FEASIBILITY_SLACK_TOL;
    if decisive && sdp_check.is_feasible() != feasible {
        return Err(ExperimentError::PathsDisagree {
            sample: index,
            analytic: feasible,
            slack,
        });
    }

    let fid = sdp::max_fidelity(ch, &target)?;
    Ok(SampleRecord {
        target,
        fidelity: fid.fidelity,
        feasible,
    })
}

/// Closed-form reachability predicate for qubit Pauli channels: vanished
/// contraction axes must carry no target component, and the surviving
/// rescaled components must fit inside the Bloch ball.
pub fn pauli_perfect_condition(params: &PauliChannelParams, rho_t: &DensityMatrix) -> bool {
    let q = params.q();
    let r = match to_bloch(rho_t) {
        Ok(r) => r,
        Err(_) => return false,
    };
    let mut norm_sq = 0.0;
    for i in 0..3 {
        if q[i + 1].abs() <= DEFAULT_RTOL {
            if r.r[i].abs() > RANGE_TOL {
                return false;
            }
        } else {
            let ri = r.r[i] / q[i + 1];
            norm_sq += ri * ri;
        }
    }
    norm_sq.sqrt() <= 1.0 - 2.0 * PSD_CLIP
}

// ---------------------------------------------------------------------------
// Code-comparison fidelity curves
// ---------------------------------------------------------------------------

/// Post-correction fidelity of an `n`-qubit code correcting any single-qubit
/// error under total error probability `p`:
/// `sqrt((1-p)^{n-1} (1 - p + n p))`.
pub fn qecc_fidelity(n: usize, p: f64) -> f64 {
    let pb = 1.0 - p;
    (pb.powi(n as i32 - 1) * (pb + n as f64 * p)).max(0.0).sqrt()
}

/// Best pre-compensated fidelity for the target `|0>` under depolarizing
/// noise: `sqrt(1/2 + |1/2 - 2p/3|)`.
pub fn qepc_depolarizing_fidelity(p: f64) -> f64 {
    (0.5 + (0.5 - 2.0 * p / 3.0).abs()).sqrt()
}

/// Locate the single zero of `f - g` inside `(lo, hi)` by bisection to 1e-6.
///
/// The interval is scanned first; zero sign changes or more than one are
/// errors rather than a silently wrong root.
pub fn find_crossover(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    interval: (f64, f64),
) -> Result<f64, ExperimentError> {
    let (lo, hi) = interval;
    let h = |x: f64| f(x) - g(x);
    let scan = 1024;
    // Bracket strict sign changes between the last points of nonzero sign,
    // so grid points landing exactly on a root are not miscounted.
    let mut brackets = Vec::new();
    let mut last_nonzero: Option<(f64, f64)> = None;
    for k in 0..=scan {
        let x = lo + (hi - lo) * k as f64 / scan as f64;
        let hx = h(x);
        if hx == 0.0 {
            continue;
        }
        if let Some((px, ph)) = last_nonzero {
            if ph * hx < 0.0 {
                brackets.push((px, x));
            }
        }
        last_nonzero = Some((x, hx));
    }
    match brackets.len() {
        0 => Err(ExperimentError::NoSignChange),
        1 => {
            let (mut a, mut b) = brackets[0];
            let mut ha = h(a);
            while b - a > 1e-6 {
                let mid = 0.5 * (a + b);
                let hm = h(mid);
                if ha * hm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    ha = hm;
                }
            }
            Ok(0.5 * (a + b))
        }
        _ => Err(ExperimentError::MultipleSignChanges),
    }
}

/// A named fidelity curve over an error-probability grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QeccCurve {
    pub code: String,
    /// Physical qubit count of the code; 1 for the pre-compensation curve.
    pub n: usize,
    pub points: Vec<(f64, f64)>,
    /// Error probability where this code's fidelity crosses the
    /// pre-compensation curve, when the grid brackets one.
    pub crossover_p: Option<f64>,
}

/// Pre-compensation curve plus the requested code curves on a common grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QeccComparison {
    pub grid: Vec<f64>,
    pub qepc: QeccCurve,
    pub codes: Vec<QeccCurve>,
}

/// Qubit counts of the supported codes.
pub fn code_qubits(code: &str) -> Option<usize> {
    match code {
        "shor" => Some(9),
        "five" => Some(5),
        _ => None,
    }
}

/// Build comparison curves for the named codes over `grid`, locating each
/// code's crossover against the pre-compensation curve on `(1e-3, 0.5)`.
pub fn qecc_comparison(codes: &[String], grid: &[f64]) -> Result<QeccComparison, ExperimentError> {
    let qepc = QeccCurve {
        code: "qepc".to_string(),
        n: 1,
        points: grid.iter().map(|&p| (p, qepc_depolarizing_fidelity(p))).collect(),
        crossover_p: None,
    };
    let mut curves = Vec::new();
    for code in codes {
        let n = code_qubits(code).ok_or(ExperimentError::ParamRange {
            name: "code",
            value: f64::NAN,
            range: "shor | five",
        })?;
        let crossover =
            find_crossover(qepc_depolarizing_fidelity, |p| qecc_fidelity(n, p), (1e-3, 0.5)).ok();
        curves.push(QeccCurve {
            code: code.clone(),
            n,
            points: grid.iter().map(|&p| (p, qecc_fidelity(n, p))).collect(),
            crossover_p: crossover,
        });
    }
    Ok(QeccComparison {
        grid: grid.to_vec(),
        qepc,
        codes: curves,
    })
}

// ---------------------------------------------------------------------------
// Two-qutrit amplitude-damping closed form
// ---------------------------------------------------------------------------

/// The isotropic-plus-entangled two-qutrit target
/// `p |psi+><psi+| + (1-p) 1/9` with `|psi+> = (|00> + |11>)/sqrt(2)`.
pub fn example2_target(p: f64) -> Result<DensityMatrix, ExperimentError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ExperimentError::ParamRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    let mut m = CMatrix::identity(9, 9) * Complex64::new((1.0 - p) / 9.0, 0.0);
    let half_p = Complex64::new(p / 2.0, 0.0);
    // |00> and |11> sit at composite indices 0 and 4.
    m[(0, 0)] += half_p;
    m[(4, 4)] += half_p;
    m[(0, 4)] += half_p;
    m[(4, 0)] += half_p;
    Ok(DensityMatrix::new(m)?)
}

/// Closed-form candidate input for the two-qutrit amplitude-damping example,
/// and whether it is a valid state (`gamma <= 1/3` and
/// `p <= (2 - 6 gb g) / (2 + 3 gb g)` with `gb = 1 - gamma`).
pub fn example2_closed_form(gamma: f64, p: f64) -> Result<(CMatrix, bool), ExperimentError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(ExperimentError::ParamRange {
            name: "gamma",
            value: gamma,
            range: "[0, 1)",
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(ExperimentError::ParamRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    let g = gamma;
    let gb = 1.0 - g;
    let pb = 1.0 - p;
    let a = [
        2.0 - 6.0 * gb * g + p * (7.0 - 12.0 * g + 3.0 * g * g),
        2.0 * pb * (1.0 - 3.0 * g),
        2.0 * pb,
        2.0 - 6.0 * gb * g - p * (2.0 + 3.0 * gb * g),
        2.0 + 7.0 * p - 3.0 * (2.0 + p) * g,
        2.0 * pb,
        2.0 * pb * (1.0 - 3.0 * gb * g),
        2.0 * pb * (1.0 - 3.0 * g),
        2.0 * pb,
    ];
    let b = 9.0 * p * gb.powf(1.5);
    let c = 18.0 * gb * gb;

    let mut m = CMatrix::zeros(9, 9);
    for (i, &ai) in a.iter().enumerate() {
        m[(i, i)] = Complex64::new(ai / c, 0.0);
    }
    m[(0, 4)] = Complex64::new(b / c, 0.0);
    m[(4, 0)] = Complex64::new(b / c, 0.0);

    let p_limit = (2.0 - 6.0 * gb * g) / (2.0 + 3.0 * gb * g);
    let valid = g <= 1.0 / 3.0 + 1e-12 && p <= p_limit + 1e-12;
    Ok((m, valid))
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

/// Write a Monte Carlo report as pretty JSON (byte-stable for equal inputs).
pub fn write_monte_carlo_json(
    report: &MonteCarloReport,
    path: &Path,
) -> Result<(), ExperimentError> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, report)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Write comparison curves as CSV with columns `p, f_qepc, f_<code>...`.
pub fn write_qecc_csv(cmp: &QeccComparison, path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["p".to_string(), "f_qepc".to_string()];
    for c in &cmp.codes {
        header.push(format!("f_{}", c.code));
    }
    w.write_record(&header)?;
    for (i, &p) in cmp.grid.iter().enumerate() {
        let mut row = vec![format!("{p}"), format!("{}", cmp.qepc.points[i].1)];
        for c in &cmp.codes {
            row.push(format!("{}", c.points[i].1));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write comparison curves as JSON.
pub fn write_qecc_json(cmp: &QeccComparison, path: &Path) -> Result<(), ExperimentError> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, cmp)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{from_bloch, pauli_channel, BlochVector};
    use crate::precomp::PrecompResult;

    #[test]
    fn monte_carlo_identity_channel_all_perfect() {
        let ch = KrausChannel::identity(2);
        let report =
            monte_carlo(&ch, 50, Ensemble::HilbertSchmidt, 7, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(report.samples, 50);
        assert!((report.fraction_perfect - 1.0).abs() < 1e-12);
        for r in &report.records {
            assert!(r.feasible);
        }
    }

    #[test]
    fn monte_carlo_fractions_monotone_and_deterministic() {
        let ch = pauli_channel([0.7, 0.1, 0.1, 0.1]).unwrap();
        let a = monte_carlo(&ch, 300, Ensemble::BlochBallUniform, 42, &DEFAULT_THRESHOLDS).unwrap();
        let b = monte_carlo(&ch, 300, Ensemble::BlochBallUniform, 42, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.fraction_perfect <= a.fraction_above[0].fraction);
        assert!(a.fraction_above[0].fraction <= a.fraction_above[1].fraction);
        // ballpark of the 0.216 volume fraction even at low sample count
        assert!((a.fraction_perfect - 0.216).abs() < 0.08);
    }

    #[test]
    fn monte_carlo_haar_pure_fidelities_cluster() {
        // Every pure target under this channel yields fidelity sqrt(0.8).
        let ch = pauli_channel([0.7, 0.1, 0.1, 0.1]).unwrap();
        let report = monte_carlo(&ch, 100, Ensemble::HaarPure, 3, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(report.fraction_perfect, 0.0);
        for r in &report.records {
            assert!(
                (r.fidelity - 0.8_f64.sqrt()).abs() < 1e-6,
                "fidelity {}",
                r.fidelity
            );
            assert!(!r.feasible);
        }
    }

    #[test]
    fn perfect_condition_examples() {
        let params = PauliChannelParams::new([0.7, 0.1, 0.1, 0.1]).unwrap();
        // boundary: r = (0.6, 0, 0) with q = 0.6 -> R = (1,0,0)
        let boundary = from_bloch(&BlochVector::new(0.6, 0.0, 0.0)).unwrap();
        assert!(pauli_perfect_condition(&params, &boundary));
        // maximally mixed target is reachable for any channel
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(pauli_perfect_condition(&params, &mixed));
        let degenerate = PauliChannelParams::new([0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(pauli_perfect_condition(&degenerate, &mixed));
        // q_2 = 0 with r_2 != 0 is unreachable
        let off_axis = from_bloch(&BlochVector::new(0.0, 0.3, 0.0)).unwrap();
        assert!(!pauli_perfect_condition(&degenerate, &off_axis));
    }

    #[test]
    fn perfect_condition_matches_solver() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let raw: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
            let total: f64 = raw.iter().sum();
            let p = [
                raw[0] / total,
                raw[1] / total,
                raw[2] / total,
                raw[3] / total,
            ];
            let params = PauliChannelParams::new(p).unwrap();
            let target =
                crate::channels::random_density(2, Ensemble::BlochBallUniform, &mut rng).unwrap();
            let predicted = pauli_perfect_condition(&params, &target);
            let solved = precomp::solve_exact(&params.channel(), &target, DEFAULT_RTOL)
                .unwrap()
                .is_feasible();
            assert_eq!(predicted, solved, "p = {p:?}");
        }
    }

    #[test]
    fn qecc_fidelity_examples() {
        assert!((qecc_fidelity(9, 0.0) - 1.0).abs() < 1e-15);
        let p = 0.13_f64;
        let want9 = ((1.0 - p).powi(8) * (1.0 + 8.0 * p)).sqrt();
        assert!((qecc_fidelity(9, p) - want9).abs() < 1e-15);
        let want5 = ((1.0 - p).powi(4) * (1.0 + 4.0 * p)).sqrt();
        assert!((qecc_fidelity(5, p) - want5).abs() < 1e-15);
    }

    #[test]
    fn qepc_curve_examples() {
        assert!((qepc_depolarizing_fidelity(0.0) - 1.0).abs() < 1e-15);
        assert!((qepc_depolarizing_fidelity(0.75) - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!((qepc_depolarizing_fidelity(1.0) - (2.0_f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn qepc_matches_eigenvalue_shortcut_on_grid() {
        use crate::numcore::CVector;
        let psi = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        for k in 0..=1000 {
            let p = k as f64 / 1000.0;
            let ch = crate::channels::depolarizing(p).unwrap();
            let (f, _) = sdp::max_fidelity_pure(&ch, &psi).unwrap();
            assert!(
                (f - qepc_depolarizing_fidelity(p)).abs() < 1e-9,
                "p = {p}: {f} vs {}",
                qepc_depolarizing_fidelity(p)
            );
        }
    }

    #[test]
    fn crossovers_match_reported_values() {
        let shor = find_crossover(
            qepc_depolarizing_fidelity,
            |p| qecc_fidelity(9, p),
            (0.001, 0.5),
        )
        .unwrap();
        assert!((shor - 0.0204).abs() < 0.0005, "shor crossover {shor}");
        let five = find_crossover(
            qepc_depolarizing_fidelity,
            |p| qecc_fidelity(5, p),
            (0.001, 0.5),
        )
        .unwrap();
        assert!((five - 0.0782).abs() < 0.0005, "five crossover {five}");
    }

    #[test]
    fn crossover_brackets_bracket() {
        assert!(qepc_depolarizing_fidelity(0.01) < qecc_fidelity(9, 0.01));
        assert!(qepc_depolarizing_fidelity(0.05) > qecc_fidelity(9, 0.05));
    }

    #[test]
    fn crossover_rejects_degenerate_inputs() {
        assert!(matches!(
            find_crossover(|p| p, |p| p, (0.0, 1.0)),
            Err(ExperimentError::NoSignChange)
        ));
        assert!(matches!(
            find_crossover(|p| (6.0 * p - 1.0).sin(), |_| 0.0, (0.0, 2.0)),
            Err(ExperimentError::MultipleSignChanges)
        ));
    }

    #[test]
    fn example2_noiseless_limit_returns_target() {
        for p in [0.0, 0.3, 0.9] {
            let (m, valid) = example2_closed_form(0.0, p).unwrap();
            assert!(valid);
            let target = example2_target(p).unwrap();
            assert!((m - target.matrix()).norm() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn example2_validity_threshold() {
        // gamma = 0.2: p <= 1.04/2.48
        let limit: f64 = 1.04 / 2.48;
        let (_, valid) = example2_closed_form(0.2, limit - 0.01).unwrap();
        assert!(valid);
        let (_, valid) = example2_closed_form(0.2, limit + 0.01).unwrap();
        assert!(!valid);
        // gamma beyond 1/3 is invalid for every p
        for k in 1..=10 {
            let (_, valid) = example2_closed_form(0.4, k as f64 / 10.0).unwrap();
            assert!(!valid);
        }
    }

    #[test]
    fn example2_valid_states_map_to_target() {
        let ch = crate::channels::amplitude_damping_qutrit(0.2).unwrap();
        let ext = ch.extend_bipartite(3);
        for p in [0.0, 0.1, 0.3, 0.41] {
            let (m, valid) = example2_closed_form(0.2, p).unwrap();
            assert!(valid, "p = {p} inside the validity region");
            let rho_in = DensityMatrix::new(m).unwrap();
            let out = ext.apply(&rho_in).unwrap();
            let target = example2_target(p).unwrap();
            assert!(
                (out.matrix() - target.matrix()).norm() < 1e-9,
                "p = {p}"
            );
        }
    }

    #[test]
    fn example2_oracle_matches_bipartite_solver() {
        let ch = crate::channels::amplitude_damping_qutrit(0.2).unwrap();
        let target = example2_target(0.3).unwrap();
        let res = precomp::solve_exact_bipartite(&ch, 3, &target, DEFAULT_RTOL).unwrap();
        let (oracle, valid) = example2_closed_form(0.2, 0.3).unwrap();
        assert!(valid);
        match res {
            PrecompResult::Unique { rho_in, .. } => {
                let diff = (rho_in.matrix() - &oracle).norm();
                assert!(diff < 1e-8, "entrywise deviation {diff}");
            }
            other => panic!("expected Unique, got {other:?}"),
        }
    }

    #[test]
    fn example2_full_damping_is_out_of_range() {
        let ch = crate::channels::amplitude_damping_qutrit(1.0).unwrap();
        let target = example2_target(0.3).unwrap();
        let res = precomp::solve_exact_bipartite(&ch, 3, &target, DEFAULT_RTOL).unwrap();
        match res {
            PrecompResult::Infeasible { reason, .. } => {
                assert_eq!(reason, crate::precomp::InfeasibleReason::NotInRange);
            }
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn report_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let ch = pauli_channel([0.7, 0.1, 0.1, 0.1]).unwrap();
        let report =
            monte_carlo(&ch, 20, Ensemble::BlochBallUniform, 1, &DEFAULT_THRESHOLDS).unwrap();
        let path = dir.path().join("mc.json");
        write_monte_carlo_json(&report, &path).unwrap();
        let back: MonteCarloReport =
            serde_json::from_reader(std::fs::File::open(&path).unwrap()).unwrap();
        assert_eq!(back.samples, report.samples);
        assert_eq!(back.fraction_perfect, report.fraction_perfect);

        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let cmp = qecc_comparison(&["shor".into(), "five".into()], &grid).unwrap();
        let path = dir.path().join("qecc.csv");
        write_qecc_csv(&cmp, &path).unwrap();
        let mut rdr = csv::Reader::from_path(&path).unwrap();
        let headers = rdr.headers().unwrap().clone();
        assert_eq!(headers, csv::StringRecord::from(vec!["p", "f_qepc", "f_shor", "f_five"]));
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), grid.len());
        let f: f64 = rows[10][1].parse().unwrap();
        assert!((f - qepc_depolarizing_fidelity(0.1)).abs() < 1e-12);
    }
}
