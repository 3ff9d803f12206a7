//! Intersection arithmetic on `P^n`, Hirzebruch surfaces and complex tori.

mod rings;
mod torus;

pub use rings::{
    hirz_classify, hirz_cup, pn_cup, pn_verdict, HirzBranch, HirzCertificate, HirzebruchClass, PnClass, PnOutcome,
    PnVerdict,
};
pub use torus::{
    directedness_residual, ext_wedge, herm_wedge_square_norm, hermitian_to_ext, rank1_decompose, torus_report,
    ExtElement, HermitianClass, TorusReport,
};

use thiserror::Error;

use crate::cycle::CycleError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CohomologyError {
    #[error("incompatible operands: {0}")]
    Mismatch(String),
    #[error("degree out of range: {0}")]
    Degree(String),
    #[error("matrix is not Hermitian at ({row}, {col}): defect {defect}")]
    NotHermitian { row: usize, col: usize, defect: f64 },
    #[error("class is not positive: smallest eigenvalue {min_eigenvalue}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("class has rank above one: eigenvalues {lambda1} and {lambda2}")]
    RankTooHigh { lambda1: f64, lambda2: f64 },
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
