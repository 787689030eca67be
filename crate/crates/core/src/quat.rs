//! Quaternion arithmetic and hyperhermitian matrix algebra.
//!
//! Eigenvalues and the Moore determinant are computed through the complex
//! adjoint embedding `q = a + b·j ↦ [[a, b], [−b̄, ā]]`. The cycle expansion
//! of the Moore determinant is kept as an independent reference route.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Absolute tolerance on `entry(s, r) - conj(entry(r, s))`.
pub const HYPERHERMITIAN_TOL: f64 = 1e-12;

/// Relative gap allowed between the two copies of each eigenvalue of χ(H).
pub const PAIRING_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not hyperhermitian at entry ({row}, {col}): deviation {deviation:e}")]
    NotHyperhermitian { row: usize, col: usize, deviation: f64 },
    #[error("eigenvalue pairing failed: gap {gap:e} exceeds {bound:e}")]
    PairingFailure { gap: f64, bound: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(e0: f64, e1: f64, e2: f64, e3: f64) -> Self {
        Quaternion { e0, e1, e2, e3 }
    }

    pub const fn real(x: f64) -> Self {
        Quaternion::new(x, 0.0, 0.0, 0.0)
    }

    /// The unit `e_i` for `i` in `0..4` (1, i, j, k).
    pub fn unit(i: usize) -> Self {
        match i {
            0 => Self::ONE,
            1 => Self::I,
            2 => Self::J,
            3 => Self::K,
            _ => panic!("quaternion unit index {i} out of range"),
        }
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Quaternion::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.e0, self.e1, self.e2, self.e3]
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.e0, -self.e1, -self.e2, -self.e3)
    }

    pub fn norm_sqr(self) -> f64 {
        self.e0 * self.e0 + self.e1 * self.e1 + self.e2 * self.e2 + self.e3 * self.e3
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn imag_norm_sqr(self) -> f64 {
        self.e1 * self.e1 + self.e2 * self.e2 + self.e3 * self.e3
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.e0 * s, self.e1 * s, self.e2 * s, self.e3 * s)
    }

    /// Max-abs componentwise distance.
    pub fn dist_max(self, other: Quaternion) -> f64 {
        let d = self - other;
        d.e0.abs().max(d.e1.abs()).max(d.e2.abs()).max(d.e3.abs())
    }

    /// The complex pair `(a, b)` with `q = a + b·j`.
    pub fn complex_pair(self) -> (Complex64, Complex64) {
        (Complex64::new(self.e0, self.e1), Complex64::new(self.e2, self.e3))
    }

    /// 2×2 complex block `[[a, b], [−b̄, ā]]`.
    pub fn complex_block(self) -> [[Complex64; 2]; 2] {
        let (a, b) = self.complex_pair();
        [[a, b], [-b.conj(), a.conj()]]
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.e0, self.e1, self.e2, self.e3)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.e0 + o.e0, self.e1 + o.e1, self.e2 + o.e2, self.e3 + o.e3)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.e0 - o.e0, self.e1 - o.e1, self.e2 - o.e2, self.e3 - o.e3)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.e0, -self.e1, -self.e2, -self.e3)
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.e0 * b.e0 - a.e1 * b.e1 - a.e2 * b.e2 - a.e3 * b.e3,
            a.e0 * b.e1 + a.e1 * b.e0 + a.e2 * b.e3 - a.e3 * b.e2,
            a.e0 * b.e2 - a.e1 * b.e3 + a.e2 * b.e0 + a.e3 * b.e1,
            a.e0 * b.e3 + a.e1 * b.e2 - a.e2 * b.e1 + a.e3 * b.e0,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

/// Complex adjoint of a general n×n quaternionic matrix stored row-major.
pub fn complex_adjoint_of(n: usize, entries: &[Quaternion]) -> DMatrix<Complex64> {
    assert_eq!(entries.len(), n * n);
    let mut m = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for r in 0..n {
        for s in 0..n {
            let block = entries[r * n + s].complex_block();
            for (a, row) in block.iter().enumerate() {
                for (b, &z) in row.iter().enumerate() {
                    m[(2 * r + a, 2 * s + b)] = z;
                }
            }
        }
    }
    m
}

/// An n×n quaternionic matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperhermitianMatrix {
    n: usize,
    entries: Vec<Quaternion>,
}

impl HyperhermitianMatrix {
    /// Validates hyperhermitian-ness to [`HYPERHERMITIAN_TOL`] and stores the
    /// exactly symmetrized matrix.
    pub fn new(n: usize, entries: Vec<Quaternion>) -> Result<Self, LinalgError> {
        if entries.len() != n * n {
            return Err(LinalgError::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        if let Some((row, col, deviation)) = max_asymmetry(n, &entries) {
            if deviation > HYPERHERMITIAN_TOL {
                return Err(LinalgError::NotHyperhermitian { row, col, deviation });
            }
        }
        Ok(Self::symmetrized(n, entries))
    }

    /// `(H + H†)/2` without validation.
    pub fn symmetrized(n: usize, mut entries: Vec<Quaternion>) -> Self {
        assert_eq!(entries.len(), n * n);
        for r in 0..n {
            let d = entries[r * n + r];
            entries[r * n + r] = Quaternion::real(d.e0);
            for s in r + 1..n {
                let avg = (entries[r * n + s] + entries[s * n + r].conj()).scale(0.5);
                entries[r * n + s] = avg;
                entries[s * n + r] = avg.conj();
            }
        }
        HyperhermitianMatrix { n, entries }
    }

    /// Builds from the upper triangle; the lower triangle is its conjugate.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut entries = vec![Quaternion::ZERO; n * n];
        for r in 0..n {
            entries[r * n + r] = Quaternion::real(upper(r, r).e0);
            for s in r + 1..n {
                let q = upper(r, s);
                entries[r * n + s] = q;
                entries[s * n + r] = q.conj();
            }
        }
        HyperhermitianMatrix { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_upper(n, |r, s| if r == s { Quaternion::real(d[r]) } else { Quaternion::ZERO })
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_upper(n, |_, _| Quaternion::ZERO)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, r: usize, s: usize) -> Quaternion {
        self.entries[r * self.n + s]
    }

    pub fn entries(&self) -> &[Quaternion] {
        &self.entries
    }

    pub fn add(&self, other: &HyperhermitianMatrix) -> HyperhermitianMatrix {
        assert_eq!(self.n, other.n);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| *a + *b)
            .collect();
        HyperhermitianMatrix { n: self.n, entries }
    }

    pub fn scale(&self, s: f64) -> HyperhermitianMatrix {
        HyperhermitianMatrix {
            n: self.n,
            entries: self.entries.iter().map(|q| q.scale(s)).collect(),
        }
    }

    /// Real part of the trace.
    pub fn real_trace(&self) -> f64 {
        (0..self.n).map(|r| self.entry(r, r).e0).sum()
    }

    /// `U† H U` for a square quaternionic `U` given row-major.
    pub fn conjugate_by(&self, u: &[Quaternion]) -> HyperhermitianMatrix {
        let n = self.n;
        assert_eq!(u.len(), n * n);
        let mut hu = vec![Quaternion::ZERO; n * n];
        for r in 0..n {
            for s in 0..n {
                let mut acc = Quaternion::ZERO;
                for l in 0..n {
                    acc += self.entry(r, l) * u[l * n + s];
                }
                hu[r * n + s] = acc;
            }
        }
        let mut out = vec![Quaternion::ZERO; n * n];
        for r in 0..n {
            for s in 0..n {
                let mut acc = Quaternion::ZERO;
                for l in 0..n {
                    acc += u[l * n + r].conj() * hu[l * n + s];
                }
                out[r * n + s] = acc;
            }
        }
        Self::symmetrized(n, out)
    }

    pub fn complex_adjoint(&self) -> ComplexAdjoint {
        complex_adjoint(self)
    }

    pub fn moore_det(&self) -> Result<f64, LinalgError> {
        moore_det(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        eigenvalues(self)
    }
}

/// Largest `|entry(s, r) - conj(entry(r, s))|` over `r <= s`, with location.
pub fn max_asymmetry(n: usize, entries: &[Quaternion]) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for r in 0..n {
        for s in r..n {
            let dev = entries[s * n + r].dist_max(entries[r * n + s].conj());
            let dev = if r == s { dev.max(entries[r * n + r].imag_norm_sqr().sqrt()) } else { dev };
            if worst.is_none_or(|w| dev > w.2) {
                worst = Some((r, s, dev));
            }
        }
    }
    worst
}

/// χ(H): the 2n×2n complex Hermitian matrix of a hyperhermitian H.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexAdjoint {
    matrix: DMatrix<Complex64>,
}

impl ComplexAdjoint {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Max-abs deviation of χ from χ†.
    pub fn hermitian_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.clone().determinant().re
    }

    /// All 2n real eigenvalues, sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

pub fn complex_adjoint(h: &HyperhermitianMatrix) -> ComplexAdjoint {
    ComplexAdjoint {
        matrix: complex_adjoint_of(h.n, &h.entries),
    }
}

/// Eigenvalues of a hyperhermitian matrix, one per χ-pair, sorted descending.
pub fn eigenvalues(h: &HyperhermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    let all = complex_adjoint(h).eigenvalues();
    let radius = all.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = PAIRING_TOL * radius;
    let mut out = Vec::with_capacity(h.n);
    for pair in all.chunks(2) {
        let gap = (pair[0] - pair[1]).abs();
        if gap > bound {
            return Err(LinalgError::PairingFailure { gap, bound });
        }
        out.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(out)
}

/// Closed form for `[[a, q], [q̄, d]]`, returned descending.
pub fn eigenvalues_2x2(a: f64, d: f64, q: Quaternion) -> (f64, f64) {
    let mid = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = (half * half + q.norm_sqr()).sqrt();
    (mid + rad, mid - rad)
}

/// Moore determinant through χ: `|Mdet| = sqrt(det χ(H))`, sign from the
/// parity of negative quaternionic eigenvalues.
pub fn moore_det(h: &HyperhermitianMatrix) -> Result<f64, LinalgError> {
    let chi = complex_adjoint(h);
    let det = chi.determinant();
    let ev = eigenvalues(h)?;
    let negatives = ev.iter().filter(|&&v| v < 0.0).count();
    let magnitude = det.max(0.0).sqrt();
    Ok(if negatives % 2 == 1 { -magnitude } else { magnitude })
}

/// Moore's cycle expansion: every permutation is written as disjoint cycles,
/// each cycle led by its smallest index, cycles ordered by decreasing leader,
/// and the entries multiplied in that order. Factorial cost, for n ≤ 8.
pub fn moore_det_expansion(h: &HyperhermitianMatrix) -> f64 {
    let n = h.n;
    assert!(n <= 8, "cycle expansion limited to n <= 8");
    if n == 0 {
        return 1.0;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Quaternion::ZERO;
    let mut cycles: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    loop {
        cycles.clear();
        seen.iter_mut().for_each(|s| *s = false);
        // Scanning leaders in ascending order, each new cycle starts at its minimum.
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut next = perm[start];
            while next != start {
                seen[next] = true;
                cyc.push(next);
                next = perm[next];
            }
            cycles.push(cyc);
        }
        let sign = if (n - cycles.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut term = Quaternion::real(sign);
        for cyc in cycles.iter().rev() {
            for (idx, &a) in cyc.iter().enumerate() {
                let b = cyc[(idx + 1) % cyc.len()];
                term = term * h.entry(a, b);
            }
        }
        total += term;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    total.e0
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Quaternionic Hessian realized from a 4n×4n real Hessian with real
/// coordinate ordering `4·r + p`: `H_rs = ¼ Σ_ij D[(r,i),(s,j)] e_i ē_j`.
pub fn quaternionic_hessian_from_real(d2: &DMatrix<f64>) -> Result<HyperhermitianMatrix, LinalgError> {
    let m = d2.nrows();
    if !m.is_multiple_of(4) || d2.ncols() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: 4 * (m / 4).max(1),
            found: m,
        });
    }
    let n = m / 4;
    let mut entries = vec![Quaternion::ZERO; n * n];
    for r in 0..n {
        for s in 0..n {
            let mut acc = Quaternion::ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    let unit = Quaternion::unit(i) * Quaternion::unit(j).conj();
                    acc += unit.scale(d2[(4 * r + i, 4 * s + j)]);
                }
            }
            entries[r * n + s] = acc.scale(0.25);
        }
    }
    Ok(HyperhermitianMatrix::symmetrized(n, entries))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HessianComparison {
    Holds,
    Violated,
    /// `D2` is not positive semidefinite; the inequality makes no claim.
    Skipped,
}

/// Checks `det(D2) ≤ 2^{4n} · Mdet(H)^4` for a convex real Hessian `D2` and
/// its quaternionic Hessian `H`.
pub fn real_hessian_comparison(
    h: &HyperhermitianMatrix,
    d2: &DMatrix<f64>,
) -> Result<HessianComparison, LinalgError> {
    let n = h.n();
    if d2.nrows() != 4 * n || d2.ncols() != 4 * n {
        return Err(LinalgError::DimensionMismatch {
            expected: 4 * n,
            found: d2.nrows(),
        });
    }
    let ev = d2.clone().symmetric_eigenvalues();
    let scale = ev.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if ev.iter().any(|&v| v < -1e-12 * scale) {
        return Ok(HessianComparison::Skipped);
    }
    let lhs = d2.determinant();
    let mdet = moore_det(h)?;
    let rhs = 2f64.powi(4 * n as i32) * mdet.powi(4);
    let slack = 1e-8 * scale.powi(4 * n as i32);
    Ok(if lhs <= rhs + slack {
        HessianComparison::Holds
    } else {
        HessianComparison::Violated
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(e0: f64, e1: f64, e2: f64, e3: f64) -> Quaternion {
        Quaternion::new(e0, e1, e2, e3)
    }

    #[test]
    fn unit_relations() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::I, -Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::K, Quaternion::I);
        assert_eq!(Quaternion::K * Quaternion::I, Quaternion::J);
        assert_eq!(Quaternion::I * Quaternion::I, Quaternion::real(-1.0));
        let a = q(1.0, 1.0, 0.0, 0.0);
        let b = q(1.0, -1.0, 0.0, 0.0);
        assert_eq!(quat_mul(a, b), Quaternion::real(2.0));
    }

    #[test]
    fn conj_reverses_products() {
        let a = q(0.3, -1.2, 0.7, 2.0);
        let b = q(-0.5, 0.1, 1.5, -0.9);
        let lhs = (a * b).conj();
        let rhs = b.conj() * a.conj();
        assert!(lhs.dist_max(rhs) < 1e-15);
        assert!(((a * a.conj()).e0 - a.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn adjoint_of_identity() {
        let chi = complex_adjoint(&HyperhermitianMatrix::identity(1));
        assert_eq!(chi.matrix(), &DMatrix::<Complex64>::identity(2, 2));
    }

    #[test]
    fn j_is_rejected() {
        let err = HyperhermitianMatrix::new(1, vec![Quaternion::J]).unwrap_err();
        assert!(matches!(err, LinalgError::NotHyperhermitian { row: 0, col: 0, .. }));
    }

    #[test]
    fn asymmetric_offdiagonal_rejected() {
        let entries = vec![Quaternion::ONE, Quaternion::J, Quaternion::J, Quaternion::ONE];
        let err = HyperhermitianMatrix::new(2, entries).unwrap_err();
        assert!(matches!(err, LinalgError::NotHyperhermitian { row: 0, col: 1, .. }));
    }

    fn singular_example() -> HyperhermitianMatrix {
        HyperhermitianMatrix::new(2, vec![Quaternion::ONE, Quaternion::J, -Quaternion::J, Quaternion::ONE]).unwrap()
    }

    #[test]
    fn moore_examples() {
        assert!((moore_det(&HyperhermitianMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((moore_det(&HyperhermitianMatrix::diagonal(&[2.0, 3.0])).unwrap() - 6.0).abs() < 1e-12);
        assert!(moore_det(&singular_example()).unwrap().abs() < 1e-7);
        assert_eq!(moore_det_expansion(&singular_example()), 0.0);
        assert_eq!(moore_det_expansion(&HyperhermitianMatrix::diagonal(&[2.0, 3.0, -0.5])), -3.0);
    }

    #[test]
    fn singular_example_adjoint_determinant() {
        // Independent route: Laplace expansion of the 4×4 complex determinant.
        let chi = complex_adjoint(&singular_example());
        let m = chi.matrix();
        let mut rows: Vec<Vec<Complex64>> = (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect();
        fn laplace(rows: &mut Vec<Vec<Complex64>>) -> Complex64 {
            let n = rows.len();
            if n == 1 {
                return rows[0][0];
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..n {
                let mut minor: Vec<Vec<Complex64>> = rows[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                acc += rows[0][col] * laplace(&mut minor) * sign;
            }
            acc
        }
        assert!(laplace(&mut rows).norm() < 1e-14);
    }

    #[test]
    fn eigenvalue_examples() {
        let ev = eigenvalues(&HyperhermitianMatrix::identity(3)).unwrap();
        assert!(ev.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let ev = eigenvalues(&HyperhermitianMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        for (a, b) in ev.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let ev = eigenvalues(&singular_example()).unwrap();
        assert!((ev[0] - 2.0).abs() < 1e-12 && ev[1].abs() < 1e-12);
    }

    #[test]
    fn closed_form_2x2_matches_adjoint() {
        let h = HyperhermitianMatrix::from_upper(2, |r, s| match (r, s) {
            (0, 0) => Quaternion::real(1.3),
            (1, 1) => Quaternion::real(-0.4),
            _ => q(0.2, -0.7, 0.5, 0.1),
        });
        let ev = eigenvalues(&h).unwrap();
        let (a, b) = eigenvalues_2x2(1.3, -0.4, q(0.2, -0.7, 0.5, 0.1));
        assert!((ev[0] - a).abs() < 1e-13 && (ev[1] - b).abs() < 1e-13);
    }

    #[test]
    fn unit_ball_quadratic_comparison() {
        // w = ½|x|² in 4n variables: D²w = I and Hess_ℍ w = I.
        for n in 1..=3 {
            let d2 = DMatrix::<f64>::identity(4 * n, 4 * n);
            let h = quaternionic_hessian_from_real(&d2).unwrap();
            assert!(h.dist_identity() < 1e-15);
            assert_eq!(real_hessian_comparison(&h, &d2).unwrap(), HessianComparison::Holds);
            let lhs = d2.determinant();
            let rhs = 2f64.powi(4 * n as i32) * moore_det(&h).unwrap().powi(4);
            assert!((rhs / lhs - 2f64.powi(4 * n as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn nonconvex_comparison_is_skipped() {
        let mut d2 = DMatrix::<f64>::identity(4, 4);
        d2[(2, 2)] = -1.0;
        let h = quaternionic_hessian_from_real(&d2).unwrap();
        assert_eq!(real_hessian_comparison(&h, &d2).unwrap(), HessianComparison::Skipped);
        let bad = DMatrix::<f64>::identity(5, 5);
        assert!(real_hessian_comparison(&h, &bad).is_err());
    }

    impl HyperhermitianMatrix {
        fn dist_identity(&self) -> f64 {
            let id = HyperhermitianMatrix::identity(self.n);
            self.entries
                .iter()
                .zip(id.entries())
                .fold(0.0, |m, (a, b)| m.max(a.dist_max(*b)))
        }
    }
}
