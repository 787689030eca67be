//! Detectors over a run's history: exponential decay of the oscillation,
//! the maximum principle, Harnack-type monotonicity, a priori bound shapes,
//! and the limiting elliptic equation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::OperatorKind;
use crate::field::ScalarField;
use crate::flow::{rhs, FlowError, FlowProblem};

/// Field order is the CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: u64,
    pub dt: f64,
    pub rhs_min: f64,
    pub rhs_max: f64,
    pub rhs_mean: f64,
    pub theta: f64,
    pub cone_margin: f64,
    pub osc_phi: f64,
    pub grad_sup: f64,
    pub lap_sup: f64,
    pub ratio_c2: f64,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "t",
    "step",
    "dt",
    "rhs_min",
    "rhs_max",
    "rhs_mean",
    "theta",
    "cone_margin",
    "osc_phi",
    "grad_sup",
    "lap_sup",
    "ratio_c2",
];

/// Records before this time are transient and excluded from fits.
pub const DECAY_WINDOW_START: f64 = 1.0;
pub const MIN_FIT_POINTS: usize = 20;
pub const MONOTONE_SLACK: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagError {
    #[error("decay window has {found} records, need at least {needed}")]
    WindowTooShort { found: usize, needed: usize },
    #[error("shift B = {shift} leaves ψ = ∂ₜφ + B non-positive at step {step} (inf ψ = {psi_min})")]
    InvalidShift { shift: f64, step: u64, psi_min: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub delta_hat: f64,
    pub c_hat: f64,
    pub r2: f64,
    pub window: [f64; 2],
    pub points: usize,
}

/// Least-squares fit of `log θ = log c − δ t` over records with
/// `t ≥ 1` and `θ > 10·tol`.
pub fn fit_decay(history: &[DiagnosticsRecord], tol: f64) -> Result<DecayFit, DiagError> {
    let window: Vec<&DiagnosticsRecord> = history
        .iter()
        .filter(|r| r.t >= DECAY_WINDOW_START && r.theta > 10.0 * tol)
        .collect();
    if window.len() < MIN_FIT_POINTS {
        return Err(DiagError::WindowTooShort {
            found: window.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    // Ratios to the first θ make the fit blind to a common scale factor.
    let theta0 = window[0].theta;
    let xs: Vec<f64> = window.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = window.iter().map(|r| (r.theta / theta0).ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ybar - slope * xbar;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(DecayFit {
        delta_hat: -slope,
        c_hat: theta0 * intercept.exp(),
        r2,
        window: [xs[0], xs[xs.len() - 1]],
        points: window.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step: u64,
    pub t: f64,
    pub quantity: String,
    pub increase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub passed: bool,
    pub records: usize,
    pub first_violation: Option<Violation>,
}

fn monotone_bounds(history: &[DiagnosticsRecord], shift: f64, upper: &str, lower: &str) -> MonotoneReport {
    let scale = history
        .first()
        .map_or(1.0, |r| 1f64.max((r.rhs_max + shift).abs()).max((r.rhs_min + shift).abs()));
    let slack = MONOTONE_SLACK * scale;
    let mut first_violation = None;
    for pair in history.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let up = (b.rhs_max + shift) - (a.rhs_max + shift);
        let down = (a.rhs_min + shift) - (b.rhs_min + shift);
        let found = if up > slack {
            Some((upper, up))
        } else if down > slack {
            Some((lower, down))
        } else {
            None
        };
        if let Some((quantity, increase)) = found {
            first_violation = Some(Violation {
                step: b.step,
                t: b.t,
                quantity: quantity.to_string(),
                increase,
            });
            break;
        }
    }
    MonotoneReport {
        passed: first_violation.is_none(),
        records: history.len(),
        first_violation,
    }
}

/// `max ∂ₜφ` non-increasing and `min ∂ₜφ` non-decreasing between consecutive
/// records, up to `1e-7·scale`.
pub fn check_max_principle(history: &[DiagnosticsRecord]) -> MonotoneReport {
    monotone_bounds(history, 0.0, "rhs_max", "rhs_min")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub shift: f64,
    pub monotone: MonotoneReport,
    /// Largest `θ(m)/θ(m−1)` over unit time intervals inside the history.
    pub q: Option<f64>,
    pub intervals: usize,
    pub passed: bool,
}

/// `θ` at time `t`, interpolating `log θ` linearly between records.
fn theta_at(history: &[DiagnosticsRecord], t: f64) -> f64 {
    let i = history.partition_point(|r| r.t < t);
    if i == 0 {
        return history[0].theta;
    }
    if i == history.len() {
        return history[i - 1].theta;
    }
    let (a, b) = (&history[i - 1], &history[i]);
    if b.t == a.t || a.theta <= 0.0 || b.theta <= 0.0 {
        return b.theta;
    }
    let w = (t - a.t) / (b.t - a.t);
    (a.theta.ln() * (1.0 - w) + b.theta.ln() * w).exp()
}

/// Monotonicity of `sup ψ` and `inf ψ` for `ψ = ∂ₜφ + B`, and the unit-time
/// contraction factor of the oscillation.
pub fn check_harnack_monotone(history: &[DiagnosticsRecord], shift: f64) -> Result<HarnackReport, DiagError> {
    if let Some(bad) = history.iter().find(|r| !(r.rhs_min + shift > 0.0)) {
        return Err(DiagError::InvalidShift {
            shift,
            step: bad.step,
            psi_min: bad.rhs_min + shift,
        });
    }
    let monotone = monotone_bounds(history, shift, "sup_psi", "inf_psi");
    let mut q: Option<f64> = None;
    let mut intervals = 0;
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        let mut t0 = first.t;
        while t0 + 1.0 <= last.t {
            let (a, b) = (theta_at(history, t0), theta_at(history, t0 + 1.0));
            if a > 0.0 {
                let ratio = b / a;
                q = Some(q.map_or(ratio, |m: f64| m.max(ratio)));
                intervals += 1;
            }
            t0 += 1.0;
        }
    }
    let passed = monotone.passed && q.is_none_or(|q| q < 1.0);
    Ok(HarnackReport {
        shift,
        monotone,
        q,
        intervals,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantityBound {
    pub name: String,
    pub max: f64,
    pub early_max: f64,
    pub late_max: f64,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub quantities: Vec<QuantityBound>,
    pub passed: bool,
}

/// Max over time of `ratio_c2`, `grad_sup` and `osc_phi`, and a check that
/// none grows: over records with `t ≥ 1`, the last-quartile maximum is at
/// most twice the first-quartile maximum.
pub fn track_apriori(history: &[DiagnosticsRecord]) -> AprioriReport {
    type Getter = fn(&DiagnosticsRecord) -> f64;
    let getters: [(&str, Getter); 3] = [
        ("ratio_c2", |r| r.ratio_c2),
        ("grad_sup", |r| r.grad_sup),
        ("osc_phi", |r| r.osc_phi),
    ];
    let late: Vec<&DiagnosticsRecord> = history.iter().filter(|r| r.t >= DECAY_WINDOW_START).collect();
    let quarter = late.len() / 4;
    let quantities: Vec<QuantityBound> = getters
        .iter()
        .map(|(name, get)| {
            let max = history.iter().map(get).fold(f64::NEG_INFINITY, f64::max);
            let (early_max, late_max, bounded) = if quarter == 0 {
                (max, max, max.is_finite())
            } else {
                let early = late[..quarter].iter().map(|r| get(r)).fold(f64::NEG_INFINITY, f64::max);
                let tail = late[late.len() - quarter..]
                    .iter()
                    .map(|r| get(r))
                    .fold(f64::NEG_INFINITY, f64::max);
                (early, tail, tail.is_finite() && tail <= 2.0 * early.max(0.0))
            };
            QuantityBound {
                name: name.to_string(),
                max,
                early_max,
                late_max,
                bounded,
            }
        })
        .collect();
    AprioriReport {
        passed: quantities.iter().all(|q| q.bounded),
        quantities,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticReport {
    pub b: f64,
    /// `‖f(λ(A[φ])) − h − b‖_∞`
    pub residual: f64,
    pub min_margin: f64,
    /// `|exp(b) − mean(σ_k/C(n,k)) / mean(e^h)|` for the pure Hessian flows.
    pub multiplicative_gap: Option<f64>,
}

/// Checks how well `φ` solves `f(λ(Ω + Hess_ℍ φ)) = h + b`.
pub fn verify_elliptic(phi: &ScalarField, problem: &FlowProblem) -> Result<EllipticReport, FlowError> {
    let eval = rhs(problem, phi)?;
    let b = eval.rhs.mean();
    let residual = eval.rhs.shift(-b).sup_norm();
    let multiplicative_gap = match problem.op().kind() {
        OperatorKind::LogSigmaK(_) | OperatorKind::LogMooreMA => {
            // σ_k/C(n,k) = e^f and f = ∂ₜφ + h.
            let quotient = eval.rhs.add_scaled(1.0, problem.h())?.map(f64::exp).mean();
            let eh = problem.h().map(f64::exp).mean();
            Some((b.exp() - quotient / eh).abs())
        }
        _ => None,
    };
    Ok(EllipticReport {
        b,
        residual,
        min_margin: eval.min_margin,
        multiplicative_gap,
    })
}
