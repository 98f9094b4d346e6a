//! Finite-level Deligne-Ribet monoids `DR_{K,f}` for `K = Q` and imaginary
//! quadratic `K`, with the semigroup-theoretic reconstruction procedures
//! (idempotents, local monoids, `sigma_P`, reciprocity kernel) checked
//! against brute-force oracles.

pub mod abelian;
pub mod arith;
pub mod class_groups;
pub mod cli;
pub mod dr_monoid;
pub mod error;
pub mod field_core;
pub mod reconstruction;
pub mod residue_ring;
pub mod suites;

pub use error::{Error, Result};
