//! Numerics for the one-dimensional cold-plasma moment chain.
//!
//! The chain is closed at step `k` by `M_{k+1} = M_k^2 / M_{k-1}`. Steps 1 and 2
//! are wired into the solvers:
//!
//! - [`closure`]: moment/velocity charts, Jacobian, fluxes and sources for any `k`.
//! - [`odeint`]: Dormand–Prince 5(4) with dense output, events and blow-up stop.
//! - [`affine`]: slope dynamics of solutions linear in `x`, branch continuation.
//! - [`wave`]: traveling waves of both closures and their singular points.
//! - [`field`]: first-order finite-volume solver for the conservative systems.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod affine;
pub mod closure;
pub mod field;
pub mod odeint;
pub mod wave;

pub(crate) mod num;
