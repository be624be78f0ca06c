//! Finite relational structures with large minimal-arity near-unanimity (NU)
//! polymorphisms.
//!
//! The crate builds the two extremal structure families, evaluates their
//! explicit symmetric NU witnesses at arbitrary arity, checks compatibility
//! exhaustively (over column multisets) or by sampling, decides NU existence at
//! small arities with an indicator-problem search, and produces independently
//! checkable certificates for the lower-bound induction.

pub mod bounds;
pub mod compat;
pub mod count;
pub mod error;
pub mod exec;
pub mod json;
pub mod relation;
pub mod solver;
pub mod structures;
pub mod trace;
pub mod witness;

pub use error::{Error, Result};
pub use exec::Exec;
pub use relation::{Domain, Elem, Equivalence, OpTable, Relation, Tuple};
pub use structures::{FamilySpec, SpecA, SpecB, Structure};
