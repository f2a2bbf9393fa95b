//! Coherent modes and optimal control of the 1-D Gross-Pitaevskii equation
//! `iħ∂ψ/∂t = [−ħ²/2m ∂²ₓ + V_trap + V_cont + (g0 + g_cont)|ψ|²]ψ` on a
//! periodic grid.
//!
//! - [`modes`]: spectrum-adapted imaginary-time search for the ground and
//!   excited nonlinear coherent modes.
//! - [`propagator`]: split-step Fourier propagation under controls.
//! - [`adjoint`]: functional gradients of `P = |⟨φ_f|ψ(T)⟩|²` with respect to
//!   the potential and nonlinearity controls.
//! - [`dmorph`]: gradient-flow optimization of the controls in the flow
//!   variable `s`, integrated by [`ode`].
//! - [`analysis`]: control spectra, populations and overlap profiles.
//! - [`harness`]: config files, field files, CSV tables and the commands
//!   behind the `gpec` binary.

pub mod adjoint;
pub mod analysis;
pub mod dmorph;
pub mod error;
pub mod field;
pub mod fourier;
pub mod grid;
pub mod harness;
pub mod modes;
pub mod ode;
pub mod propagator;

pub use error::{Error, Result};
