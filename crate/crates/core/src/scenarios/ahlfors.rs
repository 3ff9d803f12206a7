use std::f64::consts::PI;

use serde::Serialize;

use super::ScenarioError;
use crate::numerics::{gauss_grid, gauss_legendre, Region, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AhlforsRow {
    pub r: f64,
    /// Area of `φ(D(r))`.
    pub area: f64,
    /// Length of `φ(∂D(r))`.
    pub length: f64,
    pub ratio: f64,
    /// `2/(r‖v‖)`.
    pub closed_form: f64,
}

/// Length-to-area ratios for the linear disc `φ(ζ) = ζv` in `C^2` with the
/// flat metric, by quadrature.
pub fn ahlfors_ratios(v: &[C64], radii: &[f64]) -> Result<Vec<AhlforsRow>, ScenarioError> {
    let speed = v.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    if speed == 0.0 || !speed.is_finite() {
        return Err(ScenarioError::Config("direction v must be nonzero".into()));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScenarioError::Config(format!("radii must be positive and increasing: {radii:?}")));
    }
    let (nodes, weights) = gauss_legendre(32);
    radii
        .iter()
        .map(|&r| {
            // |φ'|² = ‖v‖² on the disc, |φ'|·r on the circle
            let grid = gauss_grid(8, &Region::centered_polydisc(&[r])?)?;
            let area = grid.integrate(|_| speed * speed);
            let length: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| {
                    let theta = PI * (x + 1.0);
                    let tangent: f64 = v
                        .iter()
                        .map(|vi| (vi * C64::from_polar(r, theta) * C64::new(0.0, 1.0)).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    PI * w * tangent
                })
                .sum();
            Ok(AhlforsRow {
                r,
                area,
                length,
                ratio: length / area,
                closed_form: 2.0 / (r * speed),
            })
        })
        .collect()
}
