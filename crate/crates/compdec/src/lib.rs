//! Sign and binary component decompositions of low-rank matrices.
//!
//! A rank-r matrix B sometimes factors as B = S·Wᵗ where the left factor
//! S ∈ {±1}ⁿˣʳ is a *sign matrix*, or as C = Z·Wᵗ with Z ∈ {0,1}ⁿˣʳ a
//! *binary matrix*.  When the discrete factor is Schur independent (its
//! columnwise products, together with the all-ones vector, are linearly
//! independent), that factorization is essentially unique and — remarkably
//! — can be recovered by solving a short sequence of semidefinite
//! programs.  This crate implements the whole pipeline:
//!
//! * [`schur`] — sign/binary matrix types and exact (integer-arithmetic)
//!   Schur-independence certificates;
//! * [`sdp`] — a dense interior-point solver for the small structured
//!   SDPs the decompositions need, plus the matrix-pencil line search used
//!   for deflation;
//! * [`decompose`] — the decomposition algorithms themselves: symmetric
//!   sign decomposition of a correlation matrix, asymmetric sign
//!   decomposition B = S·Wᵗ, and binary decomposition C = Z·Wᵗ;
//! * [`robust`] — two denoising front-ends that strip sparse corruptions
//!   (convex principal-component pursuit) or column outliers (a spherical
//!   robust-subspace estimator) before factorizing;
//! * [`models`] — random instance generators, coherence and permeance
//!   statistics, and Monte-Carlo harnesses for the tail bounds that
//!   predict when recovery succeeds;
//! * [`io`] — CSV and Matrix Market matrix files shared with the CLI.
//!
//! The discrete factors are returned as exact integer matrices; every
//! reconstruction claim is verified against an explicit residual tolerance
//! before a result is handed back, so model violations surface as errors
//! rather than as silently wrong output.

pub mod decompose;
pub mod error;
pub mod io;
pub mod linalg;
pub mod models;
pub mod robust;
pub mod schur;
pub mod sdp;

pub use decompose::{BinaryDecomposition, SignDecomposition, SignedPermutation, SymScdResult};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SymmetricMatrix, Tolerances};
pub use schur::{BinaryMatrix, SignMatrix};
