//! Kernel-based method-of-lines solver for first-order evolution equations
//! on uniform grids.
//!
//! The state is a grid of coefficients advanced in time by classical
//! Runge-Kutta; spatial values and gradients are read off through a
//! quasi-interpolant built from compactly supported radial kernels. The
//! kernel scale `epsilon` and the grid spacing `h` are independent
//! refinement parameters, with `h < epsilon` throughout.

// `!(x > 0.0)` guards reject NaN along with the wrong sign; the
// `partial_cmp` rewrite clippy suggests would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grid;
pub mod interp;
pub mod io;
pub mod kernels;
pub mod problems;
pub mod solver;
pub mod study;
mod quad;

/// Derivative selector for kernel and interpolant evaluations: the value
/// itself, or one first-order partial derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alpha {
    Value,
    Partial(usize),
}

/// Exponent of a discrete or continuous p-norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormP {
    One,
    Two,
    Inf,
}
