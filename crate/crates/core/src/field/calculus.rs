use rayon::prelude::*;

use super::spectral::SpectralOp;
use super::{Coord, FieldError, ScalarField, TorusGrid};
use crate::quat::{max_asymmetry, HyperhermitianMatrix, Quaternion};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrfVariant {
    /// `∂_{q̄^r} u = Σ_i e_i ∂_{x_i^r} u`
    Bar,
    /// `∂_{q^r} u = ∂_{x_0^r} u − Σ_{i≥1} ∂_{x_i^r} u e_i`
    Plain,
}

/// Quaternion-valued field stored by component.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionField {
    grid: TorusGrid,
    comps: [Vec<f64>; 4],
}

impl QuaternionField {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn component(&self, p: usize) -> &[f64] {
        &self.comps[p]
    }

    pub fn at(&self, idx: usize) -> Quaternion {
        Quaternion::new(self.comps[0][idx], self.comps[1][idx], self.comps[2][idx], self.comps[3][idx])
    }
}

pub fn crf_derivative(u: &ScalarField, r: usize, variant: CrfVariant) -> Result<QuaternionField, FieldError> {
    let grid = u.grid();
    if r >= grid.n() {
        return Err(FieldError::IndexOutOfRange { r, n: grid.n() });
    }
    let axes: Vec<Option<usize>> = (0..4).map(|p| grid.axis_of(Coord::new(p, r))).collect();
    let ops: Vec<SpectralOp> = axes.iter().flatten().map(|&a| SpectralOp::Derivative(a)).collect();
    let spectrum = grid.spectral().forward(u.values());
    let mut derived = grid.spectral().apply(&spectrum, &ops).into_iter();
    let comps: [Vec<f64>; 4] = std::array::from_fn(|p| match axes[p] {
        Some(_) => {
            let d = derived.next().expect("one output per active axis");
            if variant == CrfVariant::Plain && p > 0 {
                d.into_iter().map(|v| -v).collect()
            } else {
                d
            }
        }
        None => vec![0.0; grid.len()],
    });
    Ok(QuaternionField {
        grid: grid.clone(),
        comps,
    })
}

/// Second-derivative terms `(axis_a, axis_b, coef)` of component `c` of
/// `H_rs = ¼ Σ_ij ∂_{x_i^r} ∂_{x_j^s} u · e_i ē_j`.
fn hessian_terms(grid: &TorusGrid, r: usize, s: usize, c: usize) -> Vec<(usize, usize, f64)> {
    let mut terms = Vec::new();
    for i in 0..4 {
        let Some(a) = grid.axis_of(Coord::new(i, r)) else { continue };
        for j in 0..4 {
            let Some(b) = grid.axis_of(Coord::new(j, s)) else { continue };
            let unit = (Quaternion::unit(i) * Quaternion::unit(j).conj()).to_array()[c];
            if unit != 0.0 {
                terms.push((a, b, 0.25 * unit));
            }
        }
    }
    terms
}

/// Hessian components `wanted` plus any `extra` outputs, all from one
/// forward transform.
fn component_fields(
    u: &ScalarField,
    wanted: &[(usize, usize, usize)],
    extra: &[SpectralOp],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let grid = u.grid();
    let spectral = grid.spectral();
    let spectrum = spectral.forward(u.values());
    let term_lists: Vec<Vec<(usize, usize, f64)>> =
        wanted.iter().map(|&(r, s, c)| hessian_terms(grid, r, s, c)).collect();
    let mut ops: Vec<SpectralOp> = term_lists
        .iter()
        .filter(|t| !t.is_empty())
        .map(|t| SpectralOp::Second(t.clone()))
        .collect();
    ops.extend_from_slice(extra);
    let mut derived = spectral.apply(&spectrum, &ops).into_iter();
    let comps = term_lists
        .iter()
        .map(|t| {
            if t.is_empty() {
                vec![0.0; grid.len()]
            } else {
                derived.next().expect("one output per non-empty term list")
            }
        })
        .collect();
    (comps, derived.collect())
}

/// The quaternionic Hessian `(¼ ∂_{q̄^r} ∂_{q^s} u)` at every grid point,
/// stored as the upper triangle (diagonals real).
#[derive(Clone, Debug, PartialEq)]
pub struct HessianField {
    grid: TorusGrid,
    n: usize,
    /// Per `(r, s)` with `r <= s`: one component for diagonals, four otherwise.
    comps: Vec<Vec<Vec<f64>>>,
}

impl HessianField {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `H_rs` at grid point `idx`.
    pub fn entry(&self, idx: usize, r: usize, s: usize) -> Quaternion {
        if r > s {
            return self.entry(idx, s, r).conj();
        }
        let c = &self.comps[upper_index(self.n, r, s)];
        if r == s {
            Quaternion::real(c[0][idx])
        } else {
            Quaternion::new(c[0][idx], c[1][idx], c[2][idx], c[3][idx])
        }
    }

    /// Component `c` of `H_rs` (`r ≤ s`; diagonals have only `c = 0`).
    pub fn component(&self, r: usize, s: usize, c: usize) -> &[f64] {
        &self.comps[upper_index(self.n, r, s)][c]
    }

    pub fn at(&self, idx: usize) -> HyperhermitianMatrix {
        HyperhermitianMatrix::from_upper(self.n, |r, s| self.entry(idx, r, s))
    }

    /// Pointwise real trace (the quaternionic Laplacian for `g = I`).
    pub fn real_trace(&self) -> Vec<f64> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|idx| (0..self.n).map(|r| self.comps[upper_index(self.n, r, r)][0][idx]).sum())
            .collect()
    }

    /// `Ω + H` for a constant background `Ω`.
    pub fn add_constant(&self, omega: &HyperhermitianMatrix) -> HessianField {
        assert_eq!(omega.n(), self.n);
        let mut out = self.clone();
        for r in 0..self.n {
            for s in r..self.n {
                let w = omega.entry(r, s).to_array();
                let c = &mut out.comps[upper_index(self.n, r, s)];
                for (comp, shift) in c.iter_mut().zip(w) {
                    comp.iter_mut().for_each(|v| *v += shift);
                }
            }
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn upper_index(n: usize, r: usize, s: usize) -> usize {
    debug_assert!(r <= s && s < n);
    r * (2 * n - r + 1) / 2 + (s - r)
}

pub fn q_hessian(u: &ScalarField) -> HessianField {
    hessian_with(u, &[]).0
}

/// The Hessian together with `‖∇u‖_∞`, sharing the forward transform.
pub fn q_hessian_and_grad_sup(u: &ScalarField) -> (HessianField, f64) {
    let axes = u.grid().active().len();
    let ops: Vec<SpectralOp> = (0..axes).map(SpectralOp::Derivative).collect();
    let (hess, partials) = hessian_with(u, &ops);
    (hess, pointwise_norm_sup(&partials, u.len()))
}

fn pointwise_norm_sup(partials: &[Vec<f64>], len: usize) -> f64 {
    (0..len)
        .into_par_iter()
        .map(|idx| partials.iter().map(|d| d[idx] * d[idx]).sum::<f64>())
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

fn hessian_with(u: &ScalarField, extra: &[SpectralOp]) -> (HessianField, Vec<Vec<f64>>) {
    let grid = u.grid();
    let n = grid.n();
    let mut wanted = Vec::new();
    let mut shape = Vec::new();
    for r in 0..n {
        for s in r..n {
            let comps = if r == s { 1 } else { 4 };
            for c in 0..comps {
                wanted.push((r, s, c));
            }
            shape.push(comps);
        }
    }
    let (fields, extras) = component_fields(u, &wanted, extra);
    let mut fields = fields.into_iter();
    let comps = shape
        .into_iter()
        .map(|k| (0..k).map(|_| fields.next().expect("field per component")).collect())
        .collect();
    let hess = HessianField {
        grid: grid.clone(),
        n,
        comps,
    };
    (hess, extras)
}

/// Every entry `H_rs` computed independently, before symmetrization.
#[derive(Clone, Debug)]
pub struct RawHessianField {
    n: usize,
    len: usize,
    entries: Vec<[Vec<f64>; 4]>,
}

impl RawHessianField {
    pub fn entry(&self, idx: usize, r: usize, s: usize) -> Quaternion {
        let e = &self.entries[r * self.n + s];
        Quaternion::new(e[0][idx], e[1][idx], e[2][idx], e[3][idx])
    }

    /// Largest deviation from hyperhermitian-ness over the grid.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.len)
            .map(|idx| {
                let entries: Vec<Quaternion> = (0..self.n * self.n)
                    .map(|k| self.entry(idx, k / self.n, k % self.n))
                    .collect();
                max_asymmetry(self.n, &entries).map_or(0.0, |w| w.2)
            })
            .fold(0.0, f64::max)
    }

    pub fn symmetrized_at(&self, idx: usize) -> HyperhermitianMatrix {
        let entries = (0..self.n * self.n)
            .map(|k| self.entry(idx, k / self.n, k % self.n))
            .collect();
        HyperhermitianMatrix::symmetrized(self.n, entries)
    }
}

pub fn q_hessian_unsymmetrized(u: &ScalarField) -> RawHessianField {
    let n = u.grid().n();
    let wanted: Vec<(usize, usize, usize)> = (0..n * n)
        .flat_map(|k| (0..4).map(move |c| (k / n, k % n, c)))
        .collect();
    let mut fields = component_fields(u, &wanted, &[]).0.into_iter();
    let entries = (0..n * n)
        .map(|_| std::array::from_fn(|_| fields.next().expect("field per component")))
        .collect();
    RawHessianField {
        n,
        len: u.len(),
        entries,
    }
}

/// `Δ_g u = Re tr(Hess_ℍ u) = ¼ Σ ∂²u` over the active coordinates.
pub fn q_laplacian(u: &ScalarField) -> ScalarField {
    let grid = u.grid();
    let terms = (0..grid.active().len()).map(|a| (a, a, 0.25)).collect();
    let spectrum = grid.spectral().forward(u.values());
    let mut out = grid.spectral().apply(&spectrum, &[SpectralOp::Second(terms)]);
    ScalarField::new(grid, out.pop().expect("one output")).expect("grid-sized output")
}

/// `max_x |∇u(x)|` over all spectral partials.
pub fn grad_sup_norm(u: &ScalarField) -> f64 {
    let grid = u.grid();
    let ops: Vec<SpectralOp> = (0..grid.active().len()).map(SpectralOp::Derivative).collect();
    let spectrum = grid.spectral().forward(u.values());
    let partials = grid.spectral().apply(&spectrum, &ops);
    pointwise_norm_sup(&partials, grid.len())
}

/// `(‖∇u‖_∞, ‖Δ_g u‖_∞)` from a single forward transform.
pub fn derivative_sup_norms(u: &ScalarField) -> (f64, f64) {
    let grid = u.grid();
    let axes = grid.active().len();
    let mut ops: Vec<SpectralOp> = (0..axes).map(SpectralOp::Derivative).collect();
    ops.push(SpectralOp::Second((0..axes).map(|a| (a, a, 0.25)).collect()));
    let spectrum = grid.spectral().forward(u.values());
    let mut derived = grid.spectral().apply(&spectrum, &ops);
    let lap = derived.pop().expect("laplacian output");
    let grad = pointwise_norm_sup(&derived, grid.len());
    (grad, lap.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}
