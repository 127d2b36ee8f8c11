//! Abel time transformations for linear delay-differential equations with
//! time-varying delay.
//!
//! A system `x'(t) = A0 x(t) + A1 x(t - tau(t))` is mapped onto the
//! fixed-delay, parameter-varying system
//! `xbar'(l) = h'(l) (A0 xbar(l) + A1 xbar(l - tau_star))` through a strictly
//! increasing time transformation `t = h(l)` solving the Abel equation
//! `h(l) - tau(h(l)) = h(l - tau_star)`. The transformation is fixed by a seed
//! function on `[-tau_star, 0]`, and every admissible seed is the image of a
//! square-integrable seed parameter under an affine operator `T`.
//!
//! Modules:
//!
//! - [`delay`]: delay catalog, lag function and its inverse.
//! - [`seed`]: the affine seed operator, its kernels and admissibility checks.
//! - [`positivity`]: exact Sturm certificates for seed monotonicity.
//! - [`transform`]: pointwise evaluation of `h`, `h'` and the Abel residual.
//! - [`sim`]: fixed-step RK4 integration of both representations.
//! - [`search`]: Nelder–Mead search over seed parameters.
//! - [`benchmarks`]: the two sinusoidal-delay benchmark setups.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod delay;
pub mod error;
pub mod legendre;
pub mod poly;
pub mod positivity;
pub mod quadrature;
pub mod search;
pub mod seed;
pub mod sim;
pub mod transform;

pub use error::{Error, Result};
