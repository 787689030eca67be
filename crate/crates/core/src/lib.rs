//! Parabolic fully non-linear flows `∂ₜφ = f(λ(Ω + Hess_ℍ φ)) − h` on flat
//! quaternionic tori.

// NaN must fail these guards, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
pub mod diagnostics;
pub mod field;
pub mod flow;
pub mod io;
pub mod oracle;
pub mod quat;
