//! Recovery of steady periodic gravity water waves from velocity data on a
//! vertical axis, plus the forward solvers and validators needed to exercise
//! the recovery end to end.
//!
//! A steady wave travelling at speed `c` over a flat bed carries, on the
//! vertical line through a crest or trough, a profile of relative horizontal
//! velocity `w(y) = u(x0, y) - c`. For waves with no stagnation (`u < c`
//! everywhere) that single column of numbers determines the whole flow:
//! this crate reconstructs the surface elevation, the velocity field and the
//! pressure from it.
//!
//! The reconstruction works in semi-hodograph variables: the unknown becomes
//! a height function `h(q, p)` over the rectangle `[-λ/2, λ/2] × [p0, 0]`
//! (`q` the horizontal coordinate, `p` the stream function value, `p0 < 0`
//! the relative mass flux), satisfying a quasilinear elliptic equation. The
//! axis data prescribes Cauchy data at `q = 0`; a Taylor expansion in even
//! powers of `q` with polynomial-in-`p` coefficients is then propagated
//! order by order, and summed inside a trust region estimated from the
//! coefficient growth.
//!
//! # Modules
//!
//! * [`funcrep`] — polynomial representation of functions of `p` on
//!   `[p0, 0]` (Chebyshev basis): fitting, calculus, algebra.
//! * [`forward`] — laminar flows, small-amplitude linear waves, and a
//!   damped-Newton solver for the nonlinear height equation; used to
//!   fabricate ground truth.
//! * [`recover`] — the inverse pipeline: flux, stream function and Cauchy
//!   data from axis samples, the coefficient recursion, radius estimation,
//!   series summation, and the one-call [`recover::recover_wave`].
//! * [`validate`] — residual checks of the recovered fields against the
//!   governing equations in all three formulations, and profile comparison
//!   metrics.
//!
//! Everything numeric is generic over the scalar type through
//! [`scalar::Real`] (implemented for `f32` and `f64`); the `*64` aliases
//! at the crate root pin the common case.
//!
//! # Example
//!
//! Round-trip a laminar shear flow through the recovery:
//!
//! ```
//! use waverec_core::forward::{laminar_flow, extract_axis_data};
//! use waverec_core::recover::{recover_wave, GammaModel, RecoverOptions};
//!
//! // U(y) = y + 1 under speed c = 2, depth 1: w = U - c is y - 1.
//! let flow = laminar_flow(|y: f64| y + 1.0, 2.0, 1.0, 2.0 * std::f64::consts::PI, 9.81, 256).unwrap();
//! let axis = extract_axis_data(&flow, 0.0).unwrap();
//! // The shear U' = 1 is physical side information the recovery needs.
//! let mut opts = RecoverOptions::default();
//! opts.gamma = GammaModel::PowerCoeffs(vec![1.0]);
//! let rec = recover_wave(&axis, &opts).unwrap();
//! // The flow is laminar, so the recovered surface is flat:
//! let eta_max = rec.profile_eta.iter().fold(0.0f64, |m, e| m.max(e.abs()));
//! assert!(eta_max < 1e-7);
//! ```

pub mod error;
pub mod forward;
pub mod funcrep;
pub mod linalg;
pub mod recover;
pub mod scalar;
pub mod validate;

pub use error::{Error, Result};
pub use scalar::Real;

/// Function-of-`p` representation over `f64`.
pub type FuncP64 = funcrep::FuncP<f64>;
/// Axis data over `f64`.
pub type AxisData64 = recover::AxisData<f64>;
/// Coefficient table over `f64`.
pub type CoeffTable64 = recover::CoeffTable<f64>;
/// Trust-radius estimate over `f64`.
pub type RadiusEstimate64 = recover::RadiusEstimate<f64>;
/// Recovery output over `f64`.
pub type RecoveredWave64 = recover::RecoveredWave<f64>;
/// Velocity/pressure field over `f64`.
pub type FlowField64 = forward::FlowField<f64>;
/// Height function field over `f64`.
pub type HeightField64 = forward::HeightField<f64>;
/// Residual report over `f64`.
pub type ResidualReport64 = validate::ResidualReport<f64>;
