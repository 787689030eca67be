//! Explicit time integration of `∂ₜφ = f(λ(Ω + Hess_ℍ φ)) − h`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{ConeError, OperatorSpec};
use crate::diagnostics::DiagnosticsRecord;
use crate::field::{
    evaluate_operator, q_hessian, q_hessian_and_grad_sup, FieldError, HessianField, ScalarField, TorusGrid,
};
use crate::quat::{HyperhermitianMatrix, LinalgError};

/// Numerator of the step bound `dt = DT_SCALE · safety / (L · Σ K²)`.
///
/// The stiffest Fourier mode of the linearized operator decays at rate at
/// most `¼ · L · Σ K²`, so this keeps `dt · rate ≤ safety`, inside the RK4
/// stability interval on the negative axis (about 2.78).
pub const DT_SCALE: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("flow left the cone at t = {t} (step {step}): margin {margin:e} at grid point {point} after repeated step rejection")]
    Breakdown { t: f64, step: u64, margin: f64, point: usize },
    #[error("invalid flow problem: {0}")]
    Setup(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSettings {
    pub tol_osc: f64,
    pub dt_safety: f64,
    pub dt_max: f64,
    /// Absolute step index at which the run stops.
    pub max_steps: u64,
    pub max_rejections: u32,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            tol_osc: 1e-8,
            dt_safety: 0.5,
            dt_max: 1.0,
            max_steps: 1_000_000,
            max_rejections: 8,
        }
    }
}

impl FlowSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol_osc > 0.0 && self.tol_osc.is_finite()) {
            return Err("tol_osc must be positive".into());
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err("dt_safety must lie in (0, 1]".into());
        }
        if !(self.dt_max > 0.0) {
            return Err("dt_max must be positive".into());
        }
        Ok(())
    }
}

/// `Re tr(Ω₁)·I − (n−1)·Ω₁`, the background seen by the `(n−1)`-psh flow.
pub fn psh_background(omega1: &HyperhermitianMatrix) -> HyperhermitianMatrix {
    let n = omega1.n();
    HyperhermitianMatrix::identity(n)
        .scale(omega1.real_trace())
        .add(&omega1.scale(-((n - 1) as f64)))
}

#[derive(Clone, Debug)]
pub struct FlowProblem {
    grid: TorusGrid,
    op: OperatorSpec,
    omega: HyperhermitianMatrix,
    h: ScalarField,
    phi0: ScalarField,
    settings: FlowSettings,
}

impl FlowProblem {
    /// Validates shapes and the admissibility of `phi0`.
    pub fn new(
        op: OperatorSpec,
        omega: HyperhermitianMatrix,
        h: ScalarField,
        phi0: ScalarField,
        settings: FlowSettings,
    ) -> Result<Self, FlowError> {
        let grid = phi0.grid().clone();
        if *h.grid() != grid {
            return Err(FieldError::GridMismatch.into());
        }
        if omega.n() != grid.n() || op.n() != grid.n() {
            return Err(FlowError::Setup(format!(
                "dimension mismatch: grid n = {}, omega n = {}, operator n = {}",
                grid.n(),
                omega.n(),
                op.n()
            )));
        }
        settings.validate().map_err(FlowError::Setup)?;
        if !h.is_finite() || !phi0.is_finite() {
            return Err(FlowError::Setup("h and phi0 must be finite".into()));
        }
        let problem = FlowProblem {
            grid,
            op,
            omega,
            h,
            phi0,
            settings,
        };
        rhs(&problem, &problem.phi0)?;
        Ok(problem)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn op(&self) -> &OperatorSpec {
        &self.op
    }

    pub fn omega(&self) -> &HyperhermitianMatrix {
        &self.omega
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    pub fn phi0(&self) -> &ScalarField {
        &self.phi0
    }

    pub fn settings(&self) -> &FlowSettings {
        &self.settings
    }

    pub fn settings_mut(&mut self) -> &mut FlowSettings {
        &mut self.settings
    }

    /// Same problem with `h` replaced.
    pub fn with_h(&self, h: ScalarField) -> Result<Self, FlowError> {
        FlowProblem::new(self.op, self.omega.clone(), h, self.phi0.clone(), self.settings.clone())
    }

    /// Same problem started from another `phi0`.
    pub fn with_phi0(&self, phi0: ScalarField) -> Result<Self, FlowError> {
        FlowProblem::new(self.op, self.omega.clone(), self.h.clone(), phi0, self.settings.clone())
    }

    /// `Σ_active K_max²` with `K_max` the Nyquist frequency.
    pub fn stiffness(&self) -> f64 {
        (0..self.grid.active().len())
            .map(|a| (self.grid.nyquist(a) as f64).powi(2))
            .sum()
    }
}

/// `A = Ω + Hess_ℍ φ`.
pub fn assemble_a(phi: &ScalarField, omega: &HyperhermitianMatrix) -> HessianField {
    q_hessian(phi).add_constant(omega)
}

/// `f(λ(A[φ])) − h` with the pointwise bounds gathered on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsEval {
    pub rhs: ScalarField,
    pub min_margin: f64,
    pub max_gradient_sum: f64,
}

pub fn rhs(problem: &FlowProblem, phi: &ScalarField) -> Result<RhsEval, FlowError> {
    rhs_from_hessian(problem, &q_hessian(phi))
}

fn rhs_from_hessian(problem: &FlowProblem, hess: &HessianField) -> Result<RhsEval, FlowError> {
    let field = evaluate_operator(&problem.op, &problem.omega, hess)?;
    Ok(RhsEval {
        rhs: field.values.sub(&problem.h)?,
        min_margin: field.min_margin,
        max_gradient_sum: field.max_gradient_sum,
    })
}

/// Evaluation at an accepted state: the right-hand side plus the norms
/// recorded in the history. Always computed the same way so that a resumed
/// run reproduces the uninterrupted one bit for bit.
#[derive(Clone, Debug, PartialEq)]
struct StateEval {
    eval: RhsEval,
    grad_sup: f64,
    lap_sup: f64,
}

fn evaluate_state(problem: &FlowProblem, phi: &ScalarField) -> Result<StateEval, FlowError> {
    let (hess, grad_sup) = q_hessian_and_grad_sup(phi);
    let lap_sup = hess.real_trace().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(StateEval {
        eval: rhs_from_hessian(problem, &hess)?,
        grad_sup,
        lap_sup,
    })
}

pub fn propose_dt(problem: &FlowProblem, max_gradient_sum: f64) -> f64 {
    let bound = DT_SCALE * problem.settings.dt_safety / (max_gradient_sum.max(f64::MIN_POSITIVE) * problem.stiffness());
    bound.min(problem.settings.dt_max)
}

/// `φ − mean(φ)`.
pub fn normalize(phi: &ScalarField) -> ScalarField {
    phi.shift(-phi.mean())
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub phi: ScalarField,
    pub t: f64,
    pub step: u64,
    /// Step size proposed for the next step.
    pub dt: f64,
    /// `∂ₜφ` at the current state.
    pub last_rhs: ScalarField,
    pub min_margin: f64,
    pub max_gradient_sum: f64,
    pub history: Vec<DiagnosticsRecord>,
    /// `[inf, sup]` of `∂ₜφ` when this state was created from `phi`.
    pub initial_range: (f64, f64),
    /// `B` in `ψ = ∂ₜφ + B`.
    pub harnack_shift: f64,
}

impl FlowState {
    /// State at `(phi, t, step)`, e.g. at the start or from a checkpoint.
    pub fn at(problem: &FlowProblem, phi: ScalarField, t: f64, step: u64) -> Result<Self, FlowError> {
        if *phi.grid() != problem.grid {
            return Err(FieldError::GridMismatch.into());
        }
        let se = evaluate_state(problem, &phi)?;
        let range = (se.eval.rhs.min(), se.eval.rhs.max());
        let mut state = FlowState {
            dt: propose_dt(problem, se.eval.max_gradient_sum),
            phi,
            t,
            step,
            last_rhs: se.eval.rhs.clone(),
            min_margin: se.eval.min_margin,
            max_gradient_sum: se.eval.max_gradient_sum,
            history: Vec::new(),
            initial_range: range,
            harnack_shift: 1.0 + range.0.abs(),
        };
        let record = state.record(0.0, &se);
        state.history.push(record);
        Ok(state)
    }

    pub fn initial(problem: &FlowProblem) -> Result<Self, FlowError> {
        Self::at(problem, problem.phi0.clone(), 0.0, 0)
    }

    pub fn theta(&self) -> f64 {
        self.last_rhs.osc()
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.theta() < tol
    }

    fn record(&self, dt: f64, se: &StateEval) -> DiagnosticsRecord {
        let rhs = &se.eval.rhs;
        let (rhs_min, rhs_max) = (rhs.min(), rhs.max());
        DiagnosticsRecord {
            t: self.t,
            step: self.step,
            dt,
            rhs_min,
            rhs_max,
            rhs_mean: rhs.mean(),
            theta: rhs_max - rhs_min,
            cone_margin: se.eval.min_margin,
            osc_phi: self.phi.osc(),
            grad_sup: se.grad_sup,
            lap_sup: se.lap_sup,
            ratio_c2: se.lap_sup / (se.grad_sup + 1.0),
        }
    }
}

fn axpy(base: &ScalarField, terms: &[(f64, &ScalarField)]) -> Result<ScalarField, FlowError> {
    let mut out = base.clone();
    for (s, f) in terms {
        out = out.add_scaled(*s, f)?;
    }
    Ok(out)
}

fn rk4_attempt(problem: &FlowProblem, state: &FlowState, dt: f64) -> Result<(ScalarField, StateEval), FlowError> {
    let phi = &state.phi;
    let k1 = &state.last_rhs;
    let k2 = rhs(problem, &phi.add_scaled(0.5 * dt, k1)?)?.rhs;
    let k3 = rhs(problem, &phi.add_scaled(0.5 * dt, &k2)?)?.rhs;
    let k4 = rhs(problem, &phi.add_scaled(dt, &k3)?)?.rhs;
    let sixth = dt / 6.0;
    let next = axpy(phi, &[(sixth, k1), (2.0 * sixth, &k2), (2.0 * sixth, &k3), (sixth, &k4)])?;
    let se = evaluate_state(problem, &next)?;
    Ok((next, se))
}

/// One RK4 step. On an admissibility failure `dt` is halved and the step
/// retried from the unchanged state; `state` is only modified on success.
pub fn step(problem: &FlowProblem, state: &mut FlowState) -> Result<(), FlowError> {
    let mut dt = state.dt;
    let mut worst = (f64::INFINITY, 0usize);
    for _ in 0..=problem.settings.max_rejections {
        match rk4_attempt(problem, state, dt) {
            Ok((phi, se)) => {
                state.phi = phi;
                state.t += dt;
                state.step += 1;
                state.dt = propose_dt(problem, se.eval.max_gradient_sum);
                state.last_rhs = se.eval.rhs.clone();
                state.min_margin = se.eval.min_margin;
                state.max_gradient_sum = se.eval.max_gradient_sum;
                let record = state.record(dt, &se);
                state.history.push(record);
                return Ok(());
            }
            Err(FlowError::Field(FieldError::Inadmissible { point, margin })) => {
                if !(margin >= worst.0) {
                    worst = (margin, point);
                }
                dt *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(FlowError::Breakdown {
        t: state.t,
        step: state.step,
        margin: worst.0,
        point: worst.1,
    })
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: FlowState,
    /// Mean of `∂ₜφ` at the final state.
    pub b: f64,
    pub phi_tilde: ScalarField,
    /// `‖f(λ(A[φ̃])) − h − b‖_∞`.
    pub residual: f64,
    pub converged: bool,
}

pub fn run(problem: &FlowProblem) -> Result<RunOutcome, FlowError> {
    run_from(problem, FlowState::initial(problem)?, &mut |_| {})
}

/// Advances until `osc(∂ₜφ) < tol_osc` or the step index reaches
/// `max_steps`. `observer` sees every accepted state.
pub fn run_from(
    problem: &FlowProblem,
    mut state: FlowState,
    observer: &mut dyn FnMut(&FlowState),
) -> Result<RunOutcome, FlowError> {
    let tol = problem.settings.tol_osc;
    while !state.converged(tol) && state.step < problem.settings.max_steps {
        step(problem, &mut state)?;
        observer(&state);
    }
    outcome(problem, state)
}

/// Summary of `state`: `b`, the normalized solution and its residual.
pub fn outcome(problem: &FlowProblem, state: FlowState) -> Result<RunOutcome, FlowError> {
    let b = state.last_rhs.mean();
    let phi_tilde = normalize(&state.phi);
    let residual = rhs(problem, &phi_tilde)?.rhs.shift(-b).sup_norm();
    Ok(RunOutcome {
        converged: state.converged(problem.settings.tol_osc),
        b,
        phi_tilde,
        residual,
        state,
    })
}
