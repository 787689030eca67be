use rayon::prelude::*;
use smallvec::SmallVec;

use super::{q_hessian, FieldError, HessianField, ScalarField};
use crate::cone::{ConeError, Lambda, OperatorSpec};
use crate::quat::{eigenvalues_2x2, HyperhermitianMatrix, Quaternion};

/// `f(λ(Ω + H))` over the grid, with the admissibility and linearization
/// bounds collected on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    pub values: ScalarField,
    /// Smallest cone margin over the grid.
    pub min_margin: f64,
    /// Largest `Σ_i f_i(λ)` over the grid.
    pub max_gradient_sum: f64,
}

/// Eigenvalues of `omega + H(idx)`. Closed forms for `n ≤ 2`, the complex
/// adjoint otherwise.
pub fn point_eigenvalues(
    omega: &HyperhermitianMatrix,
    hess: &HessianField,
    idx: usize,
) -> Result<Lambda, FieldError> {
    let mut out = SmallVec::new();
    PointSource::new(omega, hess).eigenvalues(idx, &mut out)?;
    Ok(out)
}

/// Direct slices into the Hessian so the closed forms skip per-entry lookups.
enum PointSource<'a> {
    One {
        w: f64,
        d: &'a [f64],
    },
    Two {
        w: [f64; 2],
        wq: Quaternion,
        d: [&'a [f64]; 2],
        q: [&'a [f64]; 4],
    },
    General {
        omega: &'a HyperhermitianMatrix,
        hess: &'a HessianField,
    },
}

impl<'a> PointSource<'a> {
    fn new(omega: &'a HyperhermitianMatrix, hess: &'a HessianField) -> Self {
        match omega.n() {
            1 => PointSource::One {
                w: omega.entry(0, 0).e0,
                d: hess.component(0, 0, 0),
            },
            2 => PointSource::Two {
                w: [omega.entry(0, 0).e0, omega.entry(1, 1).e0],
                wq: omega.entry(0, 1),
                d: [hess.component(0, 0, 0), hess.component(1, 1, 0)],
                q: std::array::from_fn(|c| hess.component(0, 1, c)),
            },
            _ => PointSource::General { omega, hess },
        }
    }

    fn eigenvalues(&self, idx: usize, out: &mut Lambda) -> Result<(), FieldError> {
        out.clear();
        match self {
            PointSource::One { w, d } => out.push(w + d[idx]),
            PointSource::Two { w, wq, d, q } => {
                let a = w[0] + d[0][idx];
                let dd = w[1] + d[1][idx];
                let off = *wq + Quaternion::new(q[0][idx], q[1][idx], q[2][idx], q[3][idx]);
                let (l1, l2) = eigenvalues_2x2(a, dd, off);
                out.push(l1);
                out.push(l2);
            }
            PointSource::General { omega, hess } => {
                out.extend(omega.add(&hess.at(idx)).eigenvalues()?);
            }
        }
        Ok(())
    }
}

struct ChunkOutcome {
    values: Vec<f64>,
    min_margin: f64,
    worst: usize,
    max_gradient_sum: f64,
    failed: bool,
}

const CHUNK: usize = 1024;

fn worse_margin(candidate: f64, current: f64) -> bool {
    candidate < current || (candidate.is_nan() && !current.is_nan())
}

pub fn evaluate_operator(
    op: &OperatorSpec,
    omega: &HyperhermitianMatrix,
    hess: &HessianField,
) -> Result<OperatorField, FieldError> {
    let grid = hess.grid();
    let len = grid.len();
    let source = PointSource::new(omega, hess);
    let chunks: Vec<Result<ChunkOutcome, FieldError>> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut out = ChunkOutcome {
                values: Vec::with_capacity(hi - lo),
                min_margin: f64::INFINITY,
                worst: lo,
                max_gradient_sum: 0.0,
                failed: false,
            };
            let mut lambda = Lambda::new();
            for idx in lo..hi {
                source.eigenvalues(idx, &mut lambda)?;
                let margin = match op.evaluate(&lambda) {
                    Ok(e) => {
                        out.values.push(e.value);
                        out.max_gradient_sum = out.max_gradient_sum.max(e.gradient_sum);
                        e.margin
                    }
                    // NaN margins land here too.
                    Err(ConeError::NotAdmissible { margin }) => {
                        out.failed = true;
                        margin
                    }
                    Err(e) => unreachable!("eigenvalue count matches the operator: {e}"),
                };
                if worse_margin(margin, out.min_margin) {
                    out.min_margin = margin;
                    out.worst = idx;
                }
            }
            Ok(out)
        })
        .collect();

    let mut values = Vec::with_capacity(len);
    let mut min_margin = f64::INFINITY;
    let mut max_gradient_sum = 0.0f64;
    let mut failure: Option<(usize, f64)> = None;
    for chunk in chunks {
        let chunk = chunk?;
        if chunk.failed {
            if failure.is_none_or(|(_, m)| worse_margin(chunk.min_margin, m)) {
                failure = Some((chunk.worst, chunk.min_margin));
            }
            continue;
        }
        min_margin = min_margin.min(chunk.min_margin);
        max_gradient_sum = max_gradient_sum.max(chunk.max_gradient_sum);
        values.extend(chunk.values);
    }
    if let Some((point, margin)) = failure {
        return Err(FieldError::Inadmissible { point, margin });
    }
    Ok(OperatorField {
        values: ScalarField::new(grid, values)?,
        min_margin,
        max_gradient_sum,
    })
}

/// Data `h = f(λ(Ω + Hess_ℍ φ*))` for which `φ*` is a stationary point of
/// the flow with `b = 0`.
pub fn manufacture_h(
    op: &OperatorSpec,
    omega: &HyperhermitianMatrix,
    phi_star: &ScalarField,
) -> Result<ScalarField, FieldError> {
    let hess = q_hessian(phi_star);
    Ok(evaluate_operator(op, omega, &hess)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::OperatorKind;
    use crate::field::{Coord, Mode, ModeSum, TorusGrid};

    #[test]
    fn zero_potential_gives_constant_data() {
        let grid = TorusGrid::full(1, 4).unwrap();
        let op = OperatorSpec::new(OperatorKind::LogMooreMA, 1).unwrap();
        let omega = HyperhermitianMatrix::diagonal(&[2.0]);
        let h = manufacture_h(&op, &omega, &ScalarField::zeros(&grid)).unwrap();
        assert!(h.values().iter().all(|&v| (v - 2f64.ln()).abs() < 1e-15));
    }

    #[test]
    fn one_dimensional_closed_form() {
        let grid = TorusGrid::full(1, 8).unwrap();
        let op = OperatorSpec::new(OperatorKind::LogMooreMA, 1).unwrap();
        let a = 1.5;
        let phi = ModeSum::new(vec![Mode::new(a, vec![1, 0, 0, 0], 0.0)]).sample(&grid).unwrap();
        let h = manufacture_h(&op, &HyperhermitianMatrix::identity(1), &phi).unwrap();
        for idx in 0..grid.len() {
            let mut x = [0.0; 4];
            grid.point(idx, &mut x);
            let expect = (1.0 - 0.25 * a * x[0].cos()).ln();
            assert!((h.values()[idx] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn inadmissible_reports_worst_point() {
        let grid = TorusGrid::new(1, vec![Coord::new(0, 0)], vec![8]).unwrap();
        let op = OperatorSpec::new(OperatorKind::LogMooreMA, 1).unwrap();
        // 1 - (8/4) cos x is most negative at x = 0.
        let phi = ModeSum::new(vec![Mode::new(8.0, vec![1], 0.0)]).sample(&grid).unwrap();
        let err = manufacture_h(&op, &HyperhermitianMatrix::identity(1), &phi).unwrap_err();
        match err {
            FieldError::Inadmissible { point, margin } => {
                assert_eq!(point, 0);
                assert!((margin + 1.0).abs() < 1e-13);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
