//! Diagonal-adapted product coordinates, dilated self-intersection masses,
//! Lelong numbers and horizontal dimension.

mod decay;
mod fit;
mod lelong;
mod product;

pub use decay::{decay_curve, decay_curve_product, DecayOptions, DecayReport, DecayRow};
pub use fit::{far_mass_zero_box, fit_inequality, InequalityFit};
pub use lelong::{
    h_dimension_probe, lelong, normal_dilation_pieces, slice_invariance_check, DilatedFamily, GraphPiece,
    HDimension, LelongEstimate, SliceGap,
};
pub use product::{build_product, rescaled_graph_mass, rescaled_mass_on, ProductFamily, RescaledGrid};

use thiserror::Error;

use crate::cycle::CycleError;
use crate::lamination::LaminationError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("working radius {0} must lie in (0, 1/2]")]
    InvalidRadius(f64),
    #[error("product structure violated ({property}): {detail}")]
    Invariant { property: &'static str, detail: String },
    #[error("family is not transversally Lipschitz: {witness}")]
    NonLipschitz { witness: String },
    #[error("the current has no mass")]
    ZeroCurrent,
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Lamination(#[from] LaminationError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
