//! Numerical laboratory for multilinear Schur multipliers built from divided
//! differences of scalar functions.
//!
//! The library has three layers:
//!
//! * exact and floating-point evaluation of divided differences, the
//!   node-insertion/merge reduction formulae they satisfy, and a Monte Carlo
//!   oracle used to cross-check both ([`divdiff`], [`reduction`]);
//! * the combinatorial decomposition machinery that rewrites an n-th order
//!   divided difference as a sum of chart-localized terms, each a smooth
//!   weight times a polynomial in difference ratios times a first-order
//!   divided difference ([`combinatorics`], [`partition`], [`decomp`]), and a
//!   Fourier-side expansion of the resulting homogeneous symbols into
//!   products of one-variable pieces ([`fourier`]);
//! * discrete Schur-multiplier evaluation on matrix tuples, Schatten norms,
//!   lower-bound search for multiplier norms, and the singular symbol family
//!   `|s| s^(n-1)` whose truncation-type limits the search quantifies
//!   ([`schatten`], [`normsearch`]).
//!
//! Everything is deterministic: random inputs are drawn from counter-based
//! generators keyed by explicit seeds, and parallel searches merge results in
//! a fixed order.

pub mod combinatorics;
pub mod decomp;
pub mod divdiff;
pub mod fourier;
pub mod normsearch;
pub mod partition;
pub mod poly;
pub mod reduction;
pub mod schatten;
