//! Test-local reference implementations. Nothing here calls into the
//! library's numerics, so agreement is evidence rather than tautology.
#![allow(dead_code)]

use std::path::PathBuf;

use hktflow::io::{parse_config, ExperimentConfig};
use hktflow::quat::{HyperhermitianMatrix, Quaternion};
use num_complex::Complex64;
use rand::Rng;

pub type Q = [f64; 4];

pub fn qmul(a: Q, b: Q) -> Q {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn qconj(a: Q) -> Q {
    [a[0], -a[1], -a[2], -a[3]]
}

pub fn unit(i: usize) -> Q {
    let mut q = [0.0; 4];
    q[i] = 1.0;
    q
}

/// Random hyperhermitian entries, row-major, uniform in `[−1, 1]`.
pub fn random_entries(n: usize, rng: &mut impl Rng) -> Vec<Q> {
    let mut e = vec![[0.0; 4]; n * n];
    for r in 0..n {
        e[r * n + r] = [rng.random_range(-1.0..1.0), 0.0, 0.0, 0.0];
        for s in r + 1..n {
            let q: Q = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            e[r * n + s] = q;
            e[s * n + r] = qconj(q);
        }
    }
    e
}

pub fn to_matrix(n: usize, e: &[Q]) -> HyperhermitianMatrix {
    HyperhermitianMatrix::new(n, e.iter().map(|&q| Quaternion::from_array(q)).collect()).expect("hyperhermitian")
}

/// `q = z₁ + z₂ j ↦ [[z₁, z₂], [−z̄₂, z̄₁]]`, blockwise.
pub fn chi(n: usize, e: &[Q]) -> Vec<Vec<Complex64>> {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; 2 * n];
    for r in 0..n {
        for s in 0..n {
            let q = e[r * n + s];
            let z1 = Complex64::new(q[0], q[1]);
            let z2 = Complex64::new(q[2], q[3]);
            m[2 * r][2 * s] = z1;
            m[2 * r][2 * s + 1] = z2;
            m[2 * r + 1][2 * s] = -z2.conj();
            m[2 * r + 1][2 * s + 1] = z1.conj();
        }
    }
    m
}

/// Cofactor expansion along the first row.
pub fn laplace_det(m: &[Vec<Complex64>]) -> Complex64 {
    let k = m.len();
    if k == 1 {
        return m[0][0];
    }
    let mut total = Complex64::new(0.0, 0.0);
    for c in 0..k {
        if m[0][c] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let minor: Vec<Vec<Complex64>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| *v).collect())
            .collect();
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        total += m[0][c] * laplace_det(&minor) * sign;
    }
    total
}

/// Eigenvalues of the Hermitian matrix `χ`, ascending.
pub fn chi_eigenvalues(m: &[Vec<Complex64>]) -> Vec<f64> {
    let k = m.len();
    let mat = nalgebra::DMatrix::from_fn(k, k, |i, j| m[i][j]);
    let mut ev: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `σ_k` as a sum over all `k`-subsets.
pub fn sigma_subsets(k: usize, lambda: &[f64]) -> f64 {
    let n = lambda.len();
    if k == 0 {
        return 1.0;
    }
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| lambda[i]).product::<f64>())
        .sum()
}

pub fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Reference operator values from the defining formulas.
pub fn f_reference(kind: &str, k: usize, l: usize, lambda: &[f64]) -> f64 {
    let n = lambda.len();
    match kind {
        "sigma" => (sigma_subsets(k, lambda) / choose(n, k)).ln(),
        "ma" => lambda.iter().product::<f64>().ln(),
        "quotient" => (sigma_subsets(l, lambda) / choose(n, l)).ln() - (sigma_subsets(k, lambda) / choose(n, k)).ln(),
        "psh" => {
            let total: f64 = lambda.iter().sum();
            lambda.iter().map(|&x| ((total - x) / (n - 1) as f64).ln()).sum()
        }
        other => panic!("unknown kind {other}"),
    }
}

/// Membership margin in `Γ_k`: the smallest of `σ_1, …, σ_k`.
pub fn gamma_margin(k: usize, lambda: &[f64]) -> f64 {
    (1..=k).map(|j| sigma_subsets(j, lambda)).fold(f64::INFINITY, f64::min)
}

/// Top coefficient of `Ω_λ^k ∧ Ω_0^{n−k}` over that of `Ω_0^n`, where
/// `Ω_λ = Σ λ_i ω_i` for commuting generators with `ω_i² = 0`. Elements are
/// coefficient vectors over subsets (bit masks).
pub fn wedge_quotient(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    let size = 1usize << n;
    let linear = |w: &[f64]| {
        let mut c = vec![0.0; size];
        for (i, &x) in w.iter().enumerate() {
            c[1 << i] = x;
        }
        c
    };
    let wedge = |a: &[f64], b: &[f64]| {
        let mut c = vec![0.0; size];
        for (ma, &x) in a.iter().enumerate() {
            for (mb, &y) in b.iter().enumerate() {
                if ma & mb == 0 {
                    c[ma | mb] += x * y;
                }
            }
        }
        c
    };
    let ones = vec![1.0; n];
    let (om, om0) = (linear(lambda), linear(&ones));
    let mut num = vec![0.0; size];
    num[0] = 1.0;
    let mut den = num.clone();
    for i in 0..n {
        num = wedge(&num, if i < k { &om } else { &om0 });
        den = wedge(&den, &om0);
    }
    num[size - 1] / den[size - 1]
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn load(name: &str) -> ExperimentConfig {
    let text = std::fs::read_to_string(config_path(name)).expect("bundled config");
    parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}
