//! Magic state distillation with weakly self-dual CSS codes.
//!
//! The crate builds distillation protocols out of two ingredients: an inner
//! CSS code whose transversal Hadamard acts as a product of logical
//! Hadamards (or swaps of logical pairs), which turns the code into a
//! fault-tolerant measurement routine for products of Hadamards; and an
//! outer parity-check code prescribing which products are measured on a
//! register of noisy |H> states.
//!
//! Modules, roughly bottom-up:
//!
//! - [`f2core`]: bit-packed F2 linear algebra.
//! - [`forms`]: classification of symmetric bilinear forms over F2 and Fp.
//! - [`inner`]: weakly self-dual CSS codes, a small library of named codes,
//!   puncturing, the Majorana-operator lift, and random-code ensembles.
//! - [`outer`]: outer parity-check codes, sensitivity, and graph
//!   constructions.
//! - [`protocol`]: assembly of inner + outer into measurement schedules, and
//!   named presets reproducing published protocols.
//! - [`enumerate`]: exact accounting of low-weight fault patterns.
//! - [`simulate`]: statevector Monte Carlo under coherent over-rotation
//!   noise.

pub mod circuits;
pub mod enumerate;
pub mod error;
pub mod exact;
pub mod f2core;
pub mod forms;
pub mod inner;
pub mod outer;
pub mod protocol;
pub mod pauli;
pub mod simulate;

pub use error::Error;
pub use f2core::{BitMatrix, BitVector};
