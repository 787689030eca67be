//! Symmetric operators `f(λ)` on their cones Γ.
//!
//! Every operator is normalized so that `f(1, …, 1) = 0`: the k-Hessian
//! operators divide `σ_k` by `C(n, k)`, which is the value of the wedge
//! quotient `Ω^k ∧ Ω₀^{n−k} / Ω₀ⁿ` for a diagonal form with eigenvalues λ.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

pub type Lambda = SmallVec<[f64; 8]>;

/// Sample points for the limits `lim_{s→∞} f(…, s)`.
pub const LIMIT_SAMPLES: [f64; 3] = [1e3, 1e6, 1e9];

/// Agreement between the two largest samples that declares a finite limit.
pub const LIMIT_AGREEMENT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("eigenvalues outside the cone (margin {margin:e})")]
    NotAdmissible { margin: f64 },
    #[error("T map needs n >= 2")]
    TMapDimension,
    #[error("expected {expected} eigenvalues, found {found}")]
    Dimension { expected: usize, found: usize },
}

/// Elementary symmetric polynomials `σ_0, …, σ_n` by the product recursion
/// of `Π (1 + λ_i x)`.
pub fn sigma_all(lambda: &[f64]) -> Lambda {
    let n = lambda.len();
    let mut e: Lambda = SmallVec::new();
    e.resize(n + 1, 0.0);
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

/// Stack-only variant of [`sigma_all`] for `n ≤ 8`, used by the hot path.
fn with_sigmas<R>(lambda: &[f64], body: impl FnOnce(&[f64]) -> R) -> R {
    let n = lambda.len();
    if n > 8 {
        return body(&sigma_all(lambda));
    }
    let mut e = [0.0; 9];
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += l * e[j - 1];
        }
    }
    body(&e[..=n])
}

/// `λ` in ascending order, so that values do not depend on the input order
/// even to the last bit.
fn canonical(lambda: &[f64]) -> Lambda {
    let mut out: Lambda = lambda.iter().copied().collect();
    out.sort_unstable_by(f64::total_cmp);
    out
}

/// `σ_k(λ)`; `σ_0 = 1` and `σ_k = 0` for `k > n`.
pub fn sigma(k: usize, lambda: &[f64]) -> f64 {
    if k > lambda.len() {
        return 0.0;
    }
    sigma_all(lambda)[k]
}

/// `σ_k(λ | i)`: λ with the i-th entry removed.
pub fn sigma_excluding(k: usize, lambda: &[f64], i: usize) -> f64 {
    let reduced: Lambda = lambda
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, v)| *v)
        .collect();
    sigma(k, &reduced)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `T(λ)_k = (1/(n−1)) Σ_{i≠k} λ_i`.
pub fn t_map(lambda: &[f64]) -> Result<Lambda, ConeError> {
    let n = lambda.len();
    if n < 2 {
        return Err(ConeError::TMapDimension);
    }
    let total: f64 = lambda.iter().sum();
    let inv = 1.0 / (n - 1) as f64;
    Ok(if n == 2 {
        // exact swap
        SmallVec::from_slice(&[lambda[1] * inv, lambda[0] * inv])
    } else {
        lambda.iter().map(|&l| (total - l) * inv).collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// `{σ_1, …, σ_k > 0}`
    GammaK(usize),
    /// positive orthant
    GammaN,
    /// `T⁻¹(Γ_n)`
    PullbackT,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub n: usize,
}

impl ConeSpec {
    pub fn new(kind: ConeKind, n: usize) -> Self {
        ConeSpec { kind, n }
    }

    /// The smallest of the defining quantities; λ ∈ Γ iff it is positive.
    pub fn margin(&self, lambda: &[f64]) -> f64 {
        match self.kind {
            ConeKind::GammaK(k) => {
                let s = sigma_all(lambda);
                s[1..=k.min(lambda.len())].iter().copied().fold(f64::INFINITY, f64::min)
            }
            ConeKind::GammaN => lambda.iter().copied().fold(f64::INFINITY, f64::min),
            ConeKind::PullbackT => match t_map(lambda) {
                Ok(t) => t.iter().copied().fold(f64::INFINITY, f64::min),
                Err(_) => f64::NEG_INFINITY,
            },
        }
    }

    pub fn contains(&self, lambda: &[f64]) -> (bool, f64) {
        let m = self.margin(lambda);
        (m > 0.0, m)
    }
}

pub fn cone_contains(cone: &ConeSpec, lambda: &[f64]) -> (bool, f64) {
    cone.contains(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    LogSigmaK(usize),
    LogMooreMA,
    LogHessianQuotient { k: usize, l: usize },
    NMinusOnePsh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundedness {
    Unbounded,
    Bounded,
}

/// Value, cone margin and `Σ_i f_i` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub margin: f64,
    pub gradient_sum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    n: usize,
    cone: ConeSpec,
    /// `C(n, k)` and `C(n, l)` (the second also for the single-index kinds).
    norm: [f64; 2],
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, n: usize) -> Result<Self, ConeError> {
        if n == 0 {
            return Err(ConeError::InvalidOperator("n must be at least 1".into()));
        }
        let cone = match kind {
            OperatorKind::LogSigmaK(k) => {
                if k == 0 || k > n {
                    return Err(ConeError::InvalidOperator(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
                }
                ConeKind::GammaK(k)
            }
            OperatorKind::LogMooreMA => ConeKind::GammaN,
            OperatorKind::LogHessianQuotient { k, l } => {
                if k == 0 || k >= l || l > n {
                    return Err(ConeError::InvalidOperator(format!(
                        "quotient indices must satisfy 1 <= k < l <= n (k = {k}, l = {l}, n = {n})"
                    )));
                }
                ConeKind::GammaK(l)
            }
            OperatorKind::NMinusOnePsh => {
                if n < 2 {
                    return Err(ConeError::InvalidOperator("(n-1)-psh operator needs n >= 2".into()));
                }
                ConeKind::PullbackT
            }
        };
        let norm = match kind {
            OperatorKind::LogSigmaK(k) => [1.0, binomial(n, k)],
            OperatorKind::LogMooreMA => [1.0, 1.0],
            OperatorKind::LogHessianQuotient { k, l } => [binomial(n, k), binomial(n, l)],
            OperatorKind::NMinusOnePsh => [1.0, 1.0],
        };
        Ok(OperatorSpec {
            kind,
            n,
            cone: ConeSpec::new(cone, n),
            norm,
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cone(&self) -> ConeSpec {
        self.cone
    }

    /// The Hessian order `k` for the `log σ_k` family.
    pub fn hessian_order(&self) -> Option<usize> {
        match self.kind {
            OperatorKind::LogSigmaK(k) => Some(k),
            OperatorKind::LogMooreMA => Some(self.n),
            _ => None,
        }
    }

    fn check_len(&self, lambda: &[f64]) -> Result<(), ConeError> {
        if lambda.len() != self.n {
            return Err(ConeError::Dimension {
                expected: self.n,
                found: lambda.len(),
            });
        }
        Ok(())
    }

    fn admissible(&self, lambda: &[f64]) -> Result<f64, ConeError> {
        self.check_len(lambda)?;
        let margin = self.cone.margin(lambda);
        if margin > 0.0 {
            Ok(margin)
        } else {
            Err(ConeError::NotAdmissible { margin })
        }
    }

    pub fn value(&self, lambda: &[f64]) -> Result<f64, ConeError> {
        self.admissible(lambda)?;
        Ok(self.value_unchecked(&canonical(lambda)))
    }

    fn value_unchecked(&self, lambda: &[f64]) -> f64 {
        let n = self.n;
        match self.kind {
            OperatorKind::LogSigmaK(k) => (sigma(k, lambda) / binomial(n, k)).ln(),
            OperatorKind::LogMooreMA => (sigma(n, lambda) / binomial(n, n)).ln(),
            OperatorKind::LogHessianQuotient { k, l } => {
                let s = sigma_all(lambda);
                (s[l] / binomial(n, l)).ln() - (s[k] / binomial(n, k)).ln()
            }
            OperatorKind::NMinusOnePsh => {
                let t = t_map(lambda).expect("n >= 2 checked at construction");
                t.iter().product::<f64>().ln()
            }
        }
    }

    pub fn gradient(&self, lambda: &[f64]) -> Result<Lambda, ConeError> {
        self.admissible(lambda)?;
        Ok(self.gradient_unchecked(lambda))
    }

    fn gradient_unchecked(&self, lambda: &[f64]) -> Lambda {
        let n = self.n;
        let log_sigma_grad = |k: usize| -> Lambda {
            let sk = sigma(k, lambda);
            (0..n).map(|i| sigma_excluding(k - 1, lambda, i) / sk).collect()
        };
        match self.kind {
            OperatorKind::LogSigmaK(k) => log_sigma_grad(k),
            OperatorKind::LogMooreMA => log_sigma_grad(n),
            OperatorKind::LogHessianQuotient { k, l } => {
                let gl = log_sigma_grad(l);
                let gk = log_sigma_grad(k);
                gl.iter().zip(&gk).map(|(a, b)| a - b).collect()
            }
            OperatorKind::NMinusOnePsh => {
                let t = t_map(lambda).expect("n >= 2 checked at construction");
                let inv_t: Lambda = t.iter().map(|v| 1.0 / v).collect();
                let total: f64 = inv_t.iter().sum();
                let scale = 1.0 / (n - 1) as f64;
                inv_t.iter().map(|v| (total - v) * scale).collect()
            }
        }
    }

    /// Value, margin and gradient sum in one pass; the flow's pointwise kernel.
    /// Uses `Σ_i σ_{k−1}(λ|i) = (n−k+1)·σ_{k−1}(λ)` for the gradient sum.
    pub fn evaluate(&self, lambda: &[f64]) -> Result<PointEval, ConeError> {
        let n = self.n;
        if lambda.len() != n {
            return Err(ConeError::Dimension {
                expected: n,
                found: lambda.len(),
            });
        }
        let lambda = &canonical(lambda)[..];
        let check = |margin: f64| {
            if margin > 0.0 {
                Ok(margin)
            } else {
                Err(ConeError::NotAdmissible { margin })
            }
        };
        let log_sigma_sum = |s: &[f64], k: usize| (n - k + 1) as f64 * s[k - 1] / s[k];
        let (value, margin, gradient_sum) = match self.kind {
            OperatorKind::LogMooreMA => {
                let margin = check(lambda.iter().copied().fold(f64::INFINITY, f64::min))?;
                with_sigmas(lambda, |s| ((s[n] / self.norm[1]).ln(), margin, log_sigma_sum(s, n)))
            }
            OperatorKind::LogSigmaK(k) => with_sigmas(lambda, |s| {
                let margin = check(s[1..=k].iter().copied().fold(f64::INFINITY, f64::min))?;
                Ok(((s[k] / self.norm[1]).ln(), margin, log_sigma_sum(s, k)))
            })?,
            OperatorKind::LogHessianQuotient { k, l } => with_sigmas(lambda, |s| {
                let margin = check(s[1..=l].iter().copied().fold(f64::INFINITY, f64::min))?;
                let value = (s[l] / self.norm[1]).ln() - (s[k] / self.norm[0]).ln();
                Ok((value, margin, log_sigma_sum(s, l) - log_sigma_sum(s, k)))
            })?,
            OperatorKind::NMinusOnePsh => {
                let t = t_map(lambda)?;
                let margin = check(t.iter().copied().fold(f64::INFINITY, f64::min))?;
                let value = t.iter().product::<f64>().ln();
                (value, margin, t.iter().map(|v| 1.0 / v).sum())
            }
        };
        Ok(PointEval {
            value,
            margin,
            gradient_sum,
        })
    }

    /// `f(λ′, s)` with `λ′ = (1, …, 1)` of length `n − 1`.
    fn tail_probe(&self, s: f64) -> f64 {
        let mut lambda: Lambda = SmallVec::from_elem(1.0, self.n);
        lambda[self.n - 1] = s;
        self.value(&lambda).unwrap_or(f64::NAN)
    }

    /// Trudinger's dichotomy, decided by sampling `f(λ′, s)` over decades.
    pub fn classify_f_infinity(&self) -> Boundedness {
        let samples: Vec<f64> = LIMIT_SAMPLES.iter().map(|&s| self.tail_probe(s)).collect();
        if limit_from_samples(&samples).is_some() {
            Boundedness::Bounded
        } else {
            Boundedness::Unbounded
        }
    }

    /// `L_i = lim_{s→∞} f(λ + s e_i)`; `+∞` for unbounded operators.
    pub fn directional_limits(&self, lambda: &[f64]) -> Result<Lambda, ConeError> {
        self.admissible(lambda)?;
        if self.classify_f_infinity() == Boundedness::Unbounded {
            return Ok(SmallVec::from_elem(f64::INFINITY, self.n));
        }
        let mut out = Lambda::new();
        for i in 0..self.n {
            let samples: Vec<f64> = LIMIT_SAMPLES
                .iter()
                .map(|&s| {
                    let mut shifted: Lambda = SmallVec::from_slice(lambda);
                    shifted[i] += s;
                    self.value(&shifted).unwrap_or(f64::NAN)
                })
                .collect();
            out.push(limit_from_samples(&samples).unwrap_or(f64::INFINITY));
        }
        Ok(out)
    }
}

/// Finite limit from samples at `LIMIT_SAMPLES`, with a `1/s` Richardson
/// correction, or `None` when the last two decades disagree.
fn limit_from_samples(samples: &[f64]) -> Option<f64> {
    let (g2, g3) = (samples[1], samples[2]);
    if !(g2.is_finite() && g3.is_finite()) || (g3 - g2).abs() >= LIMIT_AGREEMENT {
        return None;
    }
    let ratio = LIMIT_SAMPLES[2] / LIMIT_SAMPLES[1];
    Some(g3 + (g3 - g2) / (ratio - 1.0))
}

pub fn f_value(op: &OperatorSpec, lambda: &[f64]) -> Result<f64, ConeError> {
    op.value(lambda)
}

pub fn f_gradient(op: &OperatorSpec, lambda: &[f64]) -> Result<Lambda, ConeError> {
    op.gradient(lambda)
}

pub fn classify_f_infinity(op: &OperatorSpec) -> Boundedness {
    op.classify_f_infinity()
}

/// Outcome of the parabolic 𝒞-subsolution test at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CSubReport {
    /// Candidate δ (half the margin ρ when it passes).
    pub delta: f64,
    /// Candidate R from axis crossings of the level set.
    pub r_bound: f64,
    /// Directional limits `L_i`.
    pub margins: Vec<f64>,
    pub classification: Boundedness,
    /// `min_i L_i − ∂ₜφ̲ − h`.
    pub rho: f64,
    pub passes: bool,
}

/// Checks `lim_{s→∞} f(λ + s e_i) − ∂ₜφ̲ > h` in every direction.
pub fn csub_margin(
    op: &OperatorSpec,
    lambda: &[f64],
    h_val: f64,
    dt_sub: f64,
) -> Result<CSubReport, ConeError> {
    let limits = op.directional_limits(lambda)?;
    let classification = op.classify_f_infinity();
    let min_limit = limits.iter().copied().fold(f64::INFINITY, f64::min);
    let rho = min_limit - dt_sub - h_val;
    let passes = rho > 0.0;
    let delta = if rho.is_finite() { 0.5 * rho.max(0.0) } else { 1.0 };
    let r_bound = if passes {
        let level = h_val + dt_sub + delta;
        let crossings: f64 = (0..op.n()).map(|i| axis_crossing(op, lambda, i, level)).sum();
        crossings + (op.n() as f64 + 1.0) * delta
    } else {
        f64::INFINITY
    };
    Ok(CSubReport {
        delta,
        r_bound,
        margins: limits.to_vec(),
        classification,
        rho,
        passes,
    })
}

/// Smallest `s ≥ 0` with `f(λ + s e_i) ≥ level`, by bisection.
fn axis_crossing(op: &OperatorSpec, lambda: &[f64], i: usize, level: f64) -> f64 {
    let probe = |s: f64| {
        let mut shifted: Lambda = SmallVec::from_slice(lambda);
        shifted[i] += s;
        op.value(&shifted).unwrap_or(f64::NEG_INFINITY)
    };
    if probe(0.0) >= level {
        return 0.0;
    }
    let mut hi = 1.0;
    while probe(hi) < level {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if probe(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(kind: OperatorKind, n: usize) -> OperatorSpec {
        OperatorSpec::new(kind, n).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(2, &[1.0, 2.0, 3.0]), 11.0);
        assert_eq!(sigma(3, &[1.0, 2.0, 3.0]), 6.0);
        assert_eq!(sigma(0, &[1.0, 2.0]), 1.0);
        assert_eq!(sigma(3, &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn sigma_matches_subset_enumeration() {
        let lambda = [0.7, -1.3, 2.2, 0.05, -0.4, 1.9];
        for k in 0..=6 {
            let mut brute = 0.0;
            for mask in 0u32..64 {
                if mask.count_ones() as usize == k {
                    brute += (0..6).filter(|i| mask & (1 << i) != 0).map(|i| lambda[i]).product::<f64>();
                }
            }
            assert!((sigma(k, &lambda) - brute).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn cone_examples() {
        let g2 = ConeSpec::new(ConeKind::GammaK(2), 3);
        let (inside, margin) = g2.contains(&[1.0, 1.0, -0.1]);
        assert!(inside);
        assert!((margin - 0.8).abs() < 1e-15);

        let gn = ConeSpec::new(ConeKind::GammaN, 2);
        let (inside, margin) = cone_contains(&gn, &[1.0, -0.01]);
        assert!(!inside);
        assert_eq!(margin, -0.01);

        let pt = ConeSpec::new(ConeKind::PullbackT, 3);
        let (inside, margin) = pt.contains(&[-1.0, 2.0, 2.0]);
        assert!(inside);
        assert_eq!(margin, 0.5);
    }

    #[test]
    fn value_ignores_order_bitwise() {
        let op = OperatorSpec::new(OperatorKind::LogSigmaK(2), 4).unwrap();
        let a = [2.5, -0.3, 1.1, 0.7];
        let b = [0.7, 1.1, 2.5, -0.3];
        assert_eq!(op.value(&a).unwrap().to_bits(), op.value(&b).unwrap().to_bits());
        assert_eq!(op.evaluate(&a).unwrap().value.to_bits(), op.evaluate(&b).unwrap().value.to_bits());
    }

    #[test]
    fn evaluate_agrees_with_separate_calls() {
        let cases = [
            (OperatorKind::LogSigmaK(1), 3),
            (OperatorKind::LogSigmaK(2), 3),
            (OperatorKind::LogMooreMA, 3),
            (OperatorKind::LogHessianQuotient { k: 1, l: 3 }, 3),
            (OperatorKind::NMinusOnePsh, 3),
        ];
        let points = [[1.0, 2.0, 3.0], [0.5, 0.25, 4.0], [2.0, 2.0, 0.1]];
        for (kind, n) in cases {
            let o = op(kind, n);
            for p in &points {
                let e = o.evaluate(p).unwrap();
                assert!((e.value - o.value(p).unwrap()).abs() < 1e-14);
                assert_eq!(e.margin, o.cone().margin(p));
                let g: f64 = o.gradient(p).unwrap().iter().sum();
                assert!((e.gradient_sum - g).abs() < 1e-13 * g.abs().max(1.0), "{kind:?} {p:?}");
            }
        }
        let ma = op(OperatorKind::LogMooreMA, 2);
        assert_eq!(ma.evaluate(&[1.0, -0.5]).unwrap_err(), ConeError::NotAdmissible { margin: -0.5 });
    }

    #[test]
    fn t_map_examples() {
        assert_eq!(t_map(&[1.0, 2.0, 3.0]).unwrap().as_slice(), &[2.5, 2.0, 1.5]);
        assert_eq!(t_map(&[4.0, -7.0]).unwrap().as_slice(), &[-7.0, 4.0]);
        assert!(t_map(&[0.3; 4]).unwrap().iter().all(|v| (v - 0.3).abs() < 1e-15));
        assert_eq!(t_map(&[1.0]).unwrap_err(), ConeError::TMapDimension);
    }

    #[test]
    fn value_examples() {
        assert_eq!(op(OperatorKind::LogSigmaK(1), 2).value(&[1.0, 1.0]).unwrap(), 0.0);
        let v = op(OperatorKind::LogSigmaK(2), 3).value(&[1.0, 2.0, 3.0]).unwrap();
        assert!((v - (11.0f64 / 3.0).ln()).abs() < 1e-15);
        let v = op(OperatorKind::NMinusOnePsh, 2).value(&[1.0, 4.0]).unwrap();
        assert!((v - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let g = op(OperatorKind::LogSigmaK(1), 2).gradient(&[1.0, 1.0]).unwrap();
        assert_eq!(g.as_slice(), &[0.5, 0.5]);
        let g = op(OperatorKind::LogSigmaK(2), 3).gradient(&[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in g.iter().zip([5.0 / 11.0, 4.0 / 11.0, 3.0 / 11.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn outside_cone_is_an_error() {
        let err = op(OperatorKind::LogMooreMA, 2).value(&[1.0, -0.5]).unwrap_err();
        assert_eq!(err, ConeError::NotAdmissible { margin: -0.5 });
        assert!(op(OperatorKind::LogSigmaK(2), 2).gradient(&[1.0]).is_err());
    }

    #[test]
    fn invalid_operators_rejected() {
        assert!(OperatorSpec::new(OperatorKind::LogSigmaK(3), 2).is_err());
        assert!(OperatorSpec::new(OperatorKind::LogHessianQuotient { k: 2, l: 2 }, 2).is_err());
        assert!(OperatorSpec::new(OperatorKind::NMinusOnePsh, 1).is_err());
    }

    #[test]
    fn dichotomy_examples() {
        assert_eq!(op(OperatorKind::LogSigmaK(2), 3).classify_f_infinity(), Boundedness::Unbounded);
        assert_eq!(op(OperatorKind::LogSigmaK(1), 1).classify_f_infinity(), Boundedness::Unbounded);
        assert_eq!(op(OperatorKind::LogMooreMA, 3).classify_f_infinity(), Boundedness::Unbounded);
        assert_eq!(op(OperatorKind::NMinusOnePsh, 3).classify_f_infinity(), Boundedness::Unbounded);
        let q = op(OperatorKind::LogHessianQuotient { k: 1, l: 2 }, 2);
        assert_eq!(q.classify_f_infinity(), Boundedness::Bounded);
        // f(1, s) = log(2s / (1 + s)) → log 2
        let limits = q.directional_limits(&[1.0, 1.0]).unwrap();
        for l in limits {
            assert!((l - 2f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn csub_examples() {
        let ma = op(OperatorKind::LogSigmaK(2), 3);
        let report = csub_margin(&ma, &[1.0, 2.0, 0.5], 100.0, 3.0).unwrap();
        assert!(report.passes);
        assert!(report.margins.iter().all(|m| m.is_infinite()));

        let q = op(OperatorKind::LogHessianQuotient { k: 1, l: 2 }, 2);
        let report = csub_margin(&q, &[1.0, 1.0], 10.0, 0.0).unwrap();
        assert!(!report.passes);
        assert!((report.rho - (2f64.ln() - 10.0)).abs() < 1e-8);

        let report = csub_margin(&q, &[10.0, 10.0], 0.0, 0.0).unwrap();
        assert!(report.passes);
        assert!((report.rho - 20f64.ln()).abs() < 1e-8);
        assert!(report.delta > 0.0 && report.r_bound.is_finite());
    }

    #[test]
    fn psh_coincides_with_two_dimensional_monge_ampere() {
        let psh = op(OperatorKind::NMinusOnePsh, 2);
        let ma = op(OperatorKind::LogMooreMA, 2);
        for lambda in [[1.0, 4.0], [0.3, 2.5], [7.0, 0.01]] {
            assert_eq!(psh.value(&lambda).unwrap(), (lambda[0] * lambda[1]).ln());
            assert_eq!(psh.value(&lambda).unwrap(), ma.value(&lambda).unwrap());
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 3), 1.0);
        assert_eq!(binomial(6, 0), 1.0);
    }
}
