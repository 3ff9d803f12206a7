//! Laminations in a single chart, as families of holomorphic graphs
//! `z′ ↦ h_a(z′)` indexed by a transversal parameter `a`.

mod checks;
mod expr;
mod family;

pub use checks::{
    check_family_invariants, derivative_bound, estimate_bilipschitz, transversal_slope_gap,
    verify_holomorphy, BiLipschitz, FamilyInvariants, HolomorphyCheck,
};
pub use expr::{parse_expr, parse_family, Dual, Expr, FamilyExpression, ParseError, MAX_DUAL};
pub use family::{
    center_family, AffineParamMap, CenterMap, Centered, ExprFamily, FlowBox, ParamMap, Plaque,
    PlaqueFamily, ReindexedFamily, Transversal,
};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaminationError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate transversal: {0}")]
    DegenerateTransversal(String),
    #[error("insufficient transversal: no pair of distinct parameters to compare")]
    InsufficientTransversal,
    #[error("working radius {0} must lie in (0, 1/2]")]
    InvalidRadius(f64),
    #[error("family invariant '{name}' fails: {detail}")]
    Invariant { name: String, detail: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
