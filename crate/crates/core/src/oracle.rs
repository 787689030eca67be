//! Brute-force cross-checks of the fast paths, runnable from the command
//! line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cone::{binomial, sigma, OperatorKind, OperatorSpec};
use crate::field::{crf_derivative, Coord, CrfVariant, Mode, ModeSum, TorusGrid};
use crate::quat::{moore_det_expansion, HyperhermitianMatrix, Quaternion};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl OracleReport {
    fn new(name: &str, samples: usize, max_error: f64, tolerance: f64) -> Self {
        OracleReport {
            name: name.to_string(),
            samples,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
            note: None,
        }
    }
}

pub fn random_quaternion(rng: &mut impl Rng) -> Quaternion {
    Quaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}

/// Entries uniform in `[−1, 1]`, real diagonal.
pub fn random_hyperhermitian(n: usize, rng: &mut impl Rng) -> HyperhermitianMatrix {
    HyperhermitianMatrix::from_upper(n, |r, s| {
        if r == s {
            Quaternion::real(rng.random_range(-1.0..1.0))
        } else {
            random_quaternion(rng)
        }
    })
}

/// `|Mdet² − det χ| / max(1, |det χ|)` and the gap to the cycle expansion.
pub fn moore_vs_chi(samples: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut square_err = 0.0f64;
    let mut expansion_err = 0.0f64;
    for i in 0..samples {
        let n = 1 + i % 4;
        let h = random_hyperhermitian(n, &mut rng);
        let det_chi = h.complex_adjoint().determinant();
        let mdet = h.moore_det().unwrap_or(f64::NAN);
        let scale = det_chi.abs().max(1.0);
        square_err = square_err.max(nan_max((mdet * mdet - det_chi).abs() / scale));
        let cycles = moore_det_expansion(&h);
        expansion_err = expansion_err.max(nan_max((mdet - cycles).abs() / cycles.abs().max(1.0)));
    }
    vec![
        OracleReport::new("moore_squared_vs_chi_det", samples, square_err, 1e-8),
        OracleReport::new("moore_vs_cycle_expansion", samples, expansion_err, 1e-8),
    ]
}

fn nan_max(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Eigenvalues pair up in `χ(H)` and multiply to the Moore determinant.
pub fn eigen_pairing(samples: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pair_gap = 0.0f64;
    let mut product_err = 0.0f64;
    for i in 0..samples {
        let n = 1 + i % 4;
        let h = random_hyperhermitian(n, &mut rng);
        let chi = h.complex_adjoint().eigenvalues();
        let radius = chi.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for p in chi.chunks(2) {
            pair_gap = pair_gap.max((p[0] - p[1]).abs() / radius);
        }
        match h.eigenvalues() {
            Ok(ev) => {
                let prod: f64 = ev.iter().product();
                let scale = ev.iter().map(|v| v.abs()).product::<f64>().max(1.0);
                let mdet = h.moore_det().unwrap_or(f64::NAN);
                product_err = product_err.max(nan_max((prod - mdet).abs() / scale));
            }
            Err(_) => product_err = f64::INFINITY,
        }
    }
    vec![
        OracleReport::new("chi_eigenvalue_pairing", samples, pair_gap, 1e-8),
        OracleReport::new("eigenvalue_product_vs_moore", samples, product_err, 1e-8),
    ]
}

/// The operators exercised by the operator suites, with their dimension.
pub fn operator_catalog() -> Vec<OperatorSpec> {
    let kinds = [
        (OperatorKind::LogSigmaK(1), 3),
        (OperatorKind::LogSigmaK(2), 3),
        (OperatorKind::LogSigmaK(3), 4),
        (OperatorKind::LogMooreMA, 2),
        (OperatorKind::LogMooreMA, 3),
        (OperatorKind::LogHessianQuotient { k: 1, l: 2 }, 2),
        (OperatorKind::LogHessianQuotient { k: 1, l: 3 }, 3),
        (OperatorKind::NMinusOnePsh, 2),
        (OperatorKind::NMinusOnePsh, 3),
    ];
    kinds
        .iter()
        .map(|&(k, n)| OperatorSpec::new(k, n).expect("catalog entries are valid"))
        .collect()
}

/// A point of the operator's cone: mostly positive entries, with some
/// negative ones when the cone allows them.
pub fn random_admissible(op: &OperatorSpec, rng: &mut impl Rng) -> Vec<f64> {
    let cone = op.cone();
    loop {
        let lambda: Vec<f64> = (0..op.n())
            .map(|_| {
                if rng.random_bool(0.2) {
                    rng.random_range(-1.0..0.5)
                } else {
                    rng.random_range(0.05..3.0)
                }
            })
            .collect();
        if cone.margin(&lambda) > 1e-3 {
            return lambda;
        }
    }
}

/// Central differences with step `1e-6` against the analytic gradient.
pub fn gradient_fd(samples: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-6;
    operator_catalog()
        .into_iter()
        .map(|op| {
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let lambda = random_admissible(&op, &mut rng);
                let g = op.gradient(&lambda).expect("admissible");
                for i in 0..op.n() {
                    let mut up = lambda.clone();
                    let mut dn = lambda.clone();
                    up[i] += step;
                    dn[i] -= step;
                    let fd = match (op.value(&up), op.value(&dn)) {
                        (Ok(a), Ok(b)) => (a - b) / (2.0 * step),
                        _ => continue,
                    };
                    worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
                }
            }
            OracleReport::new(&format!("gradient_fd[{:?}, n={}]", op.kind(), op.n()), samples, worst, 1e-6)
        })
        .collect()
}

/// Commuting nilpotent generators `ω_i` (`ω_i² = 0`), with elements stored
/// as coefficients over subsets (bit masks).
#[derive(Clone, Debug, PartialEq)]
struct Exterior {
    coef: Vec<f64>,
}

impl Exterior {
    fn linear(weights: &[f64]) -> Self {
        let mut coef = vec![0.0; 1 << weights.len()];
        for (i, w) in weights.iter().enumerate() {
            coef[1 << i] = *w;
        }
        Exterior { coef }
    }

    fn one(n: usize) -> Self {
        let mut coef = vec![0.0; 1 << n];
        coef[0] = 1.0;
        Exterior { coef }
    }

    fn wedge(&self, other: &Exterior) -> Exterior {
        let mut coef = vec![0.0; self.coef.len()];
        for (a, &x) in self.coef.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (b, &y) in other.coef.iter().enumerate() {
                if a & b == 0 && y != 0.0 {
                    coef[a | b] += x * y;
                }
            }
        }
        Exterior { coef }
    }

    fn top(&self) -> f64 {
        *self.coef.last().expect("non-empty algebra")
    }
}

/// `Ω_λ^k ∧ Ω_0^{n−k} / Ω_0^n` for diagonal `Ω_λ = Σ λ_i ω_i`, `Ω_0 = Σ ω_i`.
pub fn wedge_quotient(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    let om = Exterior::linear(lambda);
    let om0 = Exterior::linear(&vec![1.0; n]);
    let mut num = Exterior::one(n);
    for _ in 0..k {
        num = num.wedge(&om);
    }
    let mut den = Exterior::one(n);
    for _ in 0..n - k {
        num = num.wedge(&om0);
    }
    for _ in 0..n {
        den = den.wedge(&om0);
    }
    num.top() / den.top()
}

/// The wedge quotient against `exp f` for `f = log σ_k`, which fixes the
/// normalization constant of the Hessian operators.
pub fn wedge_normalization(samples: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=4 {
        for k in 1..=n {
            let op = OperatorSpec::new(OperatorKind::LogSigmaK(k), n).expect("valid");
            for _ in 0..samples {
                let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
                let wedge = wedge_quotient(&lambda, k);
                let from_f = op.value(&lambda).expect("positive orthant").exp();
                let direct = sigma(k, &lambda) / binomial(n, k);
                worst = worst.max((wedge - from_f).abs() / wedge.abs()).max((wedge - direct).abs() / wedge.abs());
                count += 1;
            }
        }
    }
    vec![OracleReport::new("wedge_normalization", count, worst, 1e-12)]
}

/// Spectral CRF derivatives against 4th-order central differences on the
/// grid. The gap is the difference stencil's truncation error, so the
/// reported error is the distance of the observed order from 4.
pub fn crf_finite_differences(seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = ModeSum::new(
        (0..3)
            .map(|_| {
                Mode::new(
                    rng.random_range(-1.0..1.0),
                    vec![rng.random_range(-2..=2), rng.random_range(-2..=2)],
                    rng.random_range(0.0..6.0),
                )
            })
            .collect(),
    );
    let errors: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&m| {
            let grid = TorusGrid::new(1, vec![Coord::new(0, 0), Coord::new(2, 0)], vec![m, m]).expect("valid grid");
            let u = modes.sample(&grid).expect("band-limited");
            let d = crf_derivative(&u, 0, CrfVariant::Bar).expect("r in range");
            let h = grid.spacing(0);
            let vals = u.values();
            let at = |i: isize, j: isize| {
                let (i, j) = (i.rem_euclid(m as isize) as usize, j.rem_euclid(m as isize) as usize);
                vals[i * m + j]
            };
            let mut worst = 0.0f64;
            for i in 0..m as isize {
                for j in 0..m as isize {
                    let fd0 = (-at(i + 2, j) + 8.0 * at(i + 1, j) - 8.0 * at(i - 1, j) + at(i - 2, j)) / (12.0 * h);
                    let fd2 = (-at(i, j + 2) + 8.0 * at(i, j + 1) - 8.0 * at(i, j - 1) + at(i, j - 2)) / (12.0 * h);
                    let q = d.at(i as usize * m + j as usize);
                    worst = worst.max((q.e0 - fd0).abs()).max((q.e2 - fd2).abs());
                    worst = worst.max(q.e1.abs()).max(q.e3.abs());
                }
            }
            worst
        })
        .collect();
    let order = |a: f64, b: f64| (a / b.max(f64::MIN_POSITIVE)).log2();
    let orders = [order(errors[0], errors[1]), order(errors[1], errors[2])];
    let worst = orders.iter().fold(0.0f64, |m, o| m.max((o - 4.0).abs()));
    let mut report = OracleReport::new("crf_vs_fd4_order", 3, nan_max(worst), 0.3);
    report.note = Some(format!(
        "fd4 gaps {:.3e} {:.3e} {:.3e}, observed orders {:.3} {:.3}",
        errors[0], errors[1], errors[2], orders[0], orders[1]
    ));
    vec![report]
}

/// Every suite with its default sample count.
pub fn run_all(samples: usize, seed: u64) -> Vec<OracleReport> {
    let mut out = moore_vs_chi(samples, seed);
    out.extend(eigen_pairing(samples, seed.wrapping_add(1)));
    out.extend(gradient_fd(samples, seed.wrapping_add(2)));
    out.extend(wedge_normalization(samples.min(200), seed.wrapping_add(3)));
    out.extend(crf_finite_differences(seed.wrapping_add(4)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_quotient_small_cases() {
        // n = 2, k = 1: (λ₁ω₁ + λ₂ω₂)∧(ω₁ + ω₂) / (ω₁ + ω₂)² = (λ₁ + λ₂)/2
        assert!((wedge_quotient(&[3.0, 5.0], 1) - 4.0).abs() < 1e-15);
        assert!((wedge_quotient(&[3.0, 5.0], 2) - 15.0).abs() < 1e-15);
        assert!((wedge_quotient(&[1.0, 2.0, 3.0], 2) - 11.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn all_suites_pass() {
        for r in run_all(200, 7) {
            assert!(r.passed, "{r:?}");
        }
    }
}
