//! Extremal shot noise processes and random cutout sets.
//!
//! An extremal shot noise process `ESN(b, µ)` is built from a Poisson point
//! process of atoms `(s, ξ_s)` on `[0, ∞) × (0, ∞)` with intensity
//! `ds × µ(dξ)`:
//!
//! ```text
//! M(t) = sup_{0 ≤ s ≤ t} (ξ_s − b (t − s))_+
//! ```
//!
//! The crate is organised around the tail `µ̄(x) = µ([x, ∞))`:
//!
//! - [`tail_measure`]: the intensity measure, its tail integrals and
//!   generalized inverse.
//! - [`pathsim`]: exact event-driven path simulation, first passages and
//!   cutout sets.
//! - [`laws`]: finite-dimensional laws, stationary law, generator and
//!   semigroup.
//! - [`passage`]: the θ-invariant function, passage Laplace transforms,
//!   recurrence/accessibility classification and the inverse local time
//!   exponent.
//! - [`verify`]: Monte Carlo and quadrature cross-checks between simulation
//!   and theory.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod laws;
pub mod passage;
pub mod pathsim;
pub mod quad;
pub mod rng;
pub mod tail_measure;
pub mod verify;

pub use error::{EsnError, Result};
pub use laws::TestFunction;
pub use passage::{Classification, PassageSolver};
pub use pathsim::{EsnParams, IntervalSet, PathSkeleton};
pub use tail_measure::{Family, TailMeasure};
pub use verify::VerificationReport;
