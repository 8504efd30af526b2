//! curvelab — a numerical laboratory for curved three-point patterns in
//! fractal subsets of `[0,1]`.
//!
//! The crate builds finite dyadic models of fractal sets, computes their
//! dyadic Hausdorff content, constructs Frostman-type measures with a
//! quantified spectral gap, analyses Riesz energies and Sobolev norms on the
//! Fourier side, decomposes the curved configuration integral
//!
//! ```text
//!   ∬ μ_ε(x − t) · μ_ε(x − γ(t)) · χ_(ℓ)(t) dt dμ(x)
//! ```
//!
//! into a main term plus eight controlled error terms, and searches sets by
//! brute force for witnesses of the pattern `{x, x − t, x − γ_λ(t)}`.
//!
//! Everything is deterministic: random sets come from a documented 64-bit
//! mixing generator, quadratures have pinned tolerances, and all file
//! formats round-trip bit-exactly.

// Parameter guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config_integral;
pub mod constants;
pub mod content;
pub mod curves;
pub mod dyadic;
pub mod fourier;
pub mod generators;
pub mod measures;
pub mod patterns;
pub mod quad;
pub mod report;
pub mod util;

use thiserror::Error;

/// Crate-wide error type. Numerical routines report failures (domain
/// violations, non-convergent quadrature, degenerate inputs) instead of
/// silently producing garbage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid parameters: {0}")]
    InvalidParams(String),

    #[error("depth overflow: level {level} plus {steps} subdivision steps exceeds finest level {max}")]
    DepthOverflow { level: u32, steps: u32, max: u32 },

    #[error("point {x} lies outside the interval closure [{lo}, {hi}]")]
    OutsideInterval { x: f64, lo: f64, hi: f64 },

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("no cube at levels {j_min}..={j_max} reaches content ratio 1 - {delta:e}")]
    NoGoodCube { j_min: u32, j_max: u32, delta: f64 },

    #[error("all {0} subcubes were skipped during measure construction")]
    AllChildrenSkipped(usize),

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("curve `{id}` evaluated at t = {t} outside its domain [0, {t_max}]")]
    CurveDomain { id: String, t: f64, t_max: f64 },

    #[error("quadrature did not converge: {unresolved} panels above tolerance {tol:e} after {panels} splits")]
    QuadratureFailure {
        panels: usize,
        unresolved: usize,
        tol: f64,
    },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown curve id `{0}`")]
    UnknownCurve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
