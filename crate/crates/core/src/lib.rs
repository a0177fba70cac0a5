//! Permutation-cycle statistics of the Bose gas on a d-dimensional torus.
//!
//! The crate provides, at desk scale, the machinery to study the link between
//! Bose-Einstein condensation, off-diagonal long-range order and infinite
//! permutation cycles:
//!
//! * [`special`] — Riemann zeta and polylogarithm evaluation and inversion;
//! * [`theta`] — shifted Gaussian lattice sums in both Poisson-dual forms,
//!   with certified truncation and their asymptotic regimes;
//! * [`kinematics`] — exact finite-configuration algebra of interaction
//!   profiles on permutation cycles (piecewise-constant profiles, closed-form
//!   cycle averages, merger-graph admissibility, constraint rank);
//! * [`patterns`] — interchangeable interaction-multiplicity patterns behind
//!   a common trait, registered by name and selected at runtime;
//! * [`ideal`] — the exact finite-size canonical ensemble of the ideal gas:
//!   partition-function recursion, cycle densities, condensate density,
//!   one-particle density-matrix kernel and an exact cycle sampler;
//! * [`shape`] — limit-shape statistics of the induced random partitions;
//! * [`mc`] — Monte Carlo verification of the random-walk analysis of
//!   interacting cycles (step sampling, moment formulas, energy-entropy
//!   exponents, concentration checks);
//! * [`scans`] — configuration-driven finite-size-scaling scans;
//! * [`output`] — CSV / JSON / SVG emission.

// `!(x > 0.0)` is used on purpose throughout: it rejects NaN along with the
// out-of-domain values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ideal;
pub mod kinematics;
pub mod mc;
pub mod numeric;
pub mod output;
pub mod patterns;
pub mod scans;
pub mod shape;
pub mod special;
pub mod theta;

pub use error::{Error, Result};
pub use special::Tolerance;
