//! Tail bounds for random variables from inequalities between their moments.
//!
//! Given a moment inequality `|ξ|_p ≤ g(p, r, |η|_r)` and moment information
//! about `η`, the crate builds a generating function ψ with `|ξ|_p ≤ ψ(p)`,
//! converts it into an explicit bound on `P(|ξ| > t)` through the
//! Young–Fenchel transform of `p ln ψ(p)`, and checks such bounds against
//! Monte Carlo simulations of martingales (Doob and Burkholder–Davis–Gundy
//! maximal inequalities).
//!
//! Modules:
//!
//! - [`psi`]: generating functions and their domains
//! - [`conjugate`]: `h*`, tail bounds, moments recovered from a tail
//! - [`transfer`]: moment-transfer kernels
//! - [`moments`]: moment oracles, samples and Grand Lebesgue Space norms
//! - [`harness`]: martingale simulation, verification runs and the
//!   experiment configuration used by the `gls-tail` binary

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjugate;
pub mod descriptor;
pub mod error;
pub mod harness;
pub mod moments;
pub mod optimize;
pub mod psi;
pub mod quadrature;
pub mod transfer;

pub use conjugate::{
    conjugate_at, fenchel_transform, h_of, moments_from_tail, subgaussian_family_check,
    tail_from_psi, tail_from_psi_with, ConjugateTable, FenchelConfig, TailBound,
};
pub use error::{Error, Result};
pub use moments::{
    check_tail_dominance, empirical_moment, empirical_tail, gls_norm, natural_function,
    EmpiricalSample, MomentOracle,
};
pub use psi::{
    combine, dominance_constant, make_doob_factor, make_power, CombineMode, GeneratingFunction,
    GridSup, PDomain,
};
pub use transfer::{
    build_psi_function, power_transfer, psi_from_kernel, tau_linear, RSlice, TransferKernel,
};
