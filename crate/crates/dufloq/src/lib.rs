//! Exact computer algebra for finite-dimensional Lie superalgebras,
//! L-infinity structures and polynomial Q-manifolds, over the rationals.
//!
//! The crate provides: graded-commutative polynomial arithmetic with Koszul
//! signs, Chevalley-Eilenberg and Hochschild cochain complexes, the PBW
//! symmetrization into the universal enveloping algebra, the strange
//! automorphism exp(sum alpha_{2k} c_{2k}) both on symmetric algebras and on
//! polyvector fields, and the HKR antisymmetrization map. Everything is exact;
//! no floating point is used anywhere.

pub mod cli;
pub mod duflo;
pub mod error;
pub mod exactla;
pub mod hochschild;
pub mod liealg;
pub mod qmanifold;
pub mod superpoly;
pub mod uea;

pub use error::{Error, Result};
