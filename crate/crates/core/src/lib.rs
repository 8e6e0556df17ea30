//! Categorical retrodiction for finite probability and finite-dimensional
//! quantum systems.
//!
//! The crate has two halves that mirror each other:
//!
//! - [`finstoch`]: column-stochastic maps between finite sets, their
//!   Bayesian inverses, and Jeffrey updating of soft evidence.
//! - [`algebra`] / [`channel`] / [`dilation`] / [`retrodict`]: direct-sum
//!   matrix algebras, CPTP maps in transfer-matrix form, dilations and
//!   purifications, and the (extended) Petz recovery map together with a
//!   harness checking the retrodiction laws (recovering, normalizing,
//!   compositional, tensorial, inverting, involutive) on seeded random
//!   instances.
//!
//! Classical probability embeds into the quantum half as the commutative
//! algebras, and the two notions of retrodiction agree under that
//! embedding, including the convention for events the prediction assigns
//! zero probability.
//!
//! Everything is a pure function on immutable values; random generation
//! takes explicit seeds. Trial batches in the axiom harness run in
//! parallel when the `parallel` feature (default) is enabled, with
//! identical output either way.

pub mod algebra;
pub mod channel;
pub mod dilation;
pub mod error;
pub mod finstoch;
pub mod generate;
pub mod json;
pub mod linalg;
pub mod parallel;
pub mod retrodict;

pub use algebra::{Algebra, Element, State};
pub use channel::{BlockMap, Channel};
pub use dilation::Dilation;
pub use error::{Error, Result};
pub use finstoch::{ProbVector, StochasticMatrix};
pub use linalg::Tolerance;
pub use retrodict::{MorphismClass, StatePreservingMorphism};
