//! Exact construction and verification of Belavin-Drinfeld triples of type
//! A_{n-1}, the associated GGS R-matrix, and the twist-based R-matrix
//! R_J = q^{r^0} J^{-1} R_s J_21 q^{r^0}, all over the Laurent ring in q
//! with rational exponents and rational coefficients.
//!
//! The crate builds the discrete and continuous data (triples and r^0),
//! constructs the R-matrices, and checks the defining identities - the
//! quantum Yang-Baxter equation, the Hecke relation, equality of the two
//! constructions, the classical limit modulo hbar^3, and a family of
//! closed-form and structural identities - with exact arithmetic and
//! concrete counterexample witnesses on failure.

pub mod ggs;
pub mod linalg;
pub mod qlaurent;
pub mod r0;
pub mod roots;
pub mod tensor;
pub mod triples;
pub mod twist;
pub mod verify;

pub use qlaurent::{HSeries, QScalar, Rat};
pub use r0::R0Matrix;
pub use roots::{Idx, Relation, Root};
pub use tensor::{TensorOp2, TensorOp3};
pub use triples::{BDTriple, Classification, TripleError};
pub use verify::{BatteryOptions, CheckStatus, VerificationReport};
