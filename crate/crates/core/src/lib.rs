//! Canonization toolkit for bounded relational structures whose color
//! classes have dihedral or cyclic automorphism groups.
//!
//! The crate provides exact small-group algebra, the classification of
//! 2-injective 3-factor subdirect products of dihedral and cyclic groups,
//! canonization-preserving normal-form reductions, a solver for tree-like
//! cyclic linear equation systems over prime-power rings, an abelian-colors
//! canonizer, the reflection-component canonization procedure, and
//! brute-force oracles cross-checking all of it.

pub mod canon_order;
pub mod dihedral;
pub mod error;
pub mod oracle;
pub mod perm;
pub mod structure;
pub mod subdirect;
pub mod normal_form;
pub mod tces;

pub use error::{Error, Result};
