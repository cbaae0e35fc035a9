//! Rank of sparse random matrices over finite fields.

pub mod degdist;
pub mod error;
pub mod gf;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod matgen;
pub mod sparse;
pub mod threshold;

pub use degdist::DegreeDist;
pub use error::{Error, Result};
pub use gf::{FieldCtx, FieldElem};
pub use harness::{ExperimentConfig, TrialRecord};
pub use lattice::LatticeBasis;
pub use linalg::{EliminationResult, KernelSummary};
pub use matgen::DegreeSequencePair;
pub use sparse::SparseMatrix;
pub use threshold::ModelSpec;
