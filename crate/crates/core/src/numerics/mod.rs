//! Quadrature, holomorphic differentiation and graph-volume primitives.
//!
//! Everything in this module is a pure function of its inputs. Sums over
//! quadrature nodes and Monte Carlo samples are reduced with
//! [`pairwise_sum`] in index order, so results do not depend on how the
//! work was scheduled.

mod graph;
mod holo;
mod linalg;
mod quadrature;
mod region;
mod rng;

pub use graph::{
    graph_density, graph_volume, graph_volume_refined, trace_mass_graph, VolumeEstimate,
};
pub use holo::{default_circle_radius, holo_jacobian, jet, FnMap, HoloJet, HoloMap};
pub use linalg::{complex_det, gram_det, mixed_discriminants};
pub use quadrature::{
    composite_grid, gauss_grid, gauss_legendre, pairwise_sum, ComplexRule, QuadratureGrid,
};
pub use region::{Region, RegionKind};
pub use rng::{rng_stream, SampleStream};

use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("quadrature order {order} is below the minimum {min}")]
    OrderTooLow { order: usize, min: usize },
    #[error("circle of radius {radius} around the point leaves the holomorphy domain (radius {limit})")]
    Domain { radius: f64, limit: f64 },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// `m!` as a float.
pub fn factorial(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, k| acc * k as f64)
}

/// Sup norm over complex coordinates.
pub fn sup_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Sup-norm distance between two points.
pub fn sup_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}
