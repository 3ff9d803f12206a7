//! Transverse measures and foliated cycles in a flow box.

mod current;
mod form;
mod measure;
mod product;

pub use current::{
    atom_split, holonomy_check, pair, pair_plaque, stokes_residual, trace_mass, AtomSplit,
    FoliatedCycleLocal,
};
pub use form::{form_battery, Cutoff, FormTerm, OneForm, Poly, TestForm};
pub use measure::{integrate_measure, DensityFn, TransverseMeasure, WeightedSample, MAX_CANTOR_DEPTH};
pub use product::{
    diagonal_mass, mean_and_stderr, product_measure, DiagonalMass, ProductMeasure, ProductSample,
};

use thiserror::Error;

use crate::lamination::LaminationError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("support: {0}")]
    Support(String),
    #[error("invalid form: {0}")]
    InvalidForm(String),
    #[error("relabeling is not injective: {0}")]
    NonInjective(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Lamination(#[from] LaminationError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
