use rayon::prelude::*;
use serde::Serialize;

use super::{CycleError, TransverseMeasure};
use crate::numerics::{pairwise_sum, rng_stream, sup_dist, C64};

/// `μ ⊗ μ` in the coordinates `α = (α₁, α₂) = (a, b − a)`.
#[derive(Debug, Clone)]
pub struct ProductMeasure {
    pub base: TransverseMeasure,
}

/// A draw of `α` (concatenated `α₁, α₂`) with its importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSample {
    pub alpha1: Vec<C64>,
    pub alpha2: Vec<C64>,
    pub weight: f64,
}

pub fn product_measure(mu: &TransverseMeasure) -> ProductMeasure {
    ProductMeasure { base: mu.clone() }
}

impl ProductMeasure {
    /// Exact atoms `((α₁, α₂), weight)` when the base measure is atomic.
    pub fn atoms(&self) -> Option<Vec<((Vec<C64>, Vec<C64>), f64)>> {
        let TransverseMeasure::Atomic(atoms) = &self.base else {
            return None;
        };
        let mut out = Vec::with_capacity(atoms.len() * atoms.len());
        for (a, wa) in atoms {
            for (b, wb) in atoms {
                let a2: Vec<C64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
                out.push(((a.clone(), a2), wa * wb));
            }
        }
        Some(out)
    }

    /// Independent draws `a, b ∼ μ`, emitted as `(a, b − a)`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<ProductSample, CycleError> {
        let mut rng = rng_stream(seed, index);
        let a = self.base.draw(&mut rng)?;
        let b = self.base.draw(&mut rng)?;
        Ok(ProductSample {
            alpha2: b.point.iter().zip(&a.point).map(|(x, y)| x - y).collect(),
            alpha1: a.point,
            weight: a.weight * b.weight,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalMass {
    pub epsilon: f64,
    pub value: f64,
    /// Monte Carlo standard error; 0 for exact methods.
    pub stderr: f64,
    pub method: &'static str,
}

/// `𝔐{‖α₂‖∞ ≤ ε}`: exact for atomic and Cantor measures, Monte Carlo with
/// `samples` draws otherwise.
pub fn diagonal_mass(
    m: &ProductMeasure,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<DiagonalMass, CycleError> {
    let mu = &m.base;
    match mu {
        TransverseMeasure::Atomic(atoms) => {
            let mut terms = Vec::new();
            for (a, wa) in atoms {
                for (b, wb) in atoms {
                    if sup_dist(a, b) <= epsilon {
                        terms.push(wa * wb);
                    }
                }
            }
            Ok(DiagonalMass {
                epsilon,
                value: pairwise_sum(&terms),
                stderr: 0.0,
                method: "exact-atoms",
            })
        }
        TransverseMeasure::Cantor { .. } => {
            let atoms = mu.cantor_atoms();
            let mut prefix = Vec::with_capacity(atoms.len() + 1);
            prefix.push(0.0);
            for (_, w) in &atoms {
                prefix.push(prefix.last().unwrap() + w);
            }
            let xs: Vec<f64> = atoms.iter().map(|(x, _)| *x).collect();
            let terms: Vec<f64> = atoms
                .iter()
                .map(|(x, w)| {
                    let lo = xs.partition_point(|y| *y < x - epsilon);
                    let hi = xs.partition_point(|y| *y <= x + epsilon);
                    w * (prefix[hi] - prefix[lo])
                })
                .collect();
            Ok(DiagonalMass {
                epsilon,
                value: pairwise_sum(&terms),
                stderr: 0.0,
                method: "exact-cylinders",
            })
        }
        _ => {
            let windowed = mu.supports_windows();
            let vals: Result<Vec<f64>, CycleError> = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_stream(seed, i);
                    let a = mu.draw(&mut rng)?;
                    if windowed {
                        Ok(match mu.draw_near(&a.point, epsilon, &mut rng)? {
                            Some(b) if sup_dist(&b.point, &a.point) <= epsilon => a.weight * b.weight,
                            _ => 0.0,
                        })
                    } else {
                        let b = mu.draw(&mut rng)?;
                        Ok(if sup_dist(&b.point, &a.point) <= epsilon {
                            a.weight * b.weight
                        } else {
                            0.0
                        })
                    }
                })
                .collect();
            let (value, stderr) = mean_and_stderr(&vals?);
            Ok(DiagonalMass {
                epsilon,
                value,
                stderr,
                method: if windowed {
                    "windowed-monte-carlo"
                } else {
                    "product-monte-carlo"
                },
            })
        }
    }
}

/// Sample mean and its standard error, summed pairwise.
pub fn mean_and_stderr(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(vals) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Region;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn dirac_square() {
        let m = product_measure(&TransverseMeasure::dirac(vec![c(0.0)]));
        let atoms = m.atoms().unwrap();
        assert_eq!(atoms, vec![((vec![c(0.0)], vec![c(0.0)]), 1.0)]);
        for eps in [1e-9, 0.1, 1.0] {
            assert_eq!(diagonal_mass(&m, eps, 0, 0).unwrap().value, 1.0);
        }
    }

    #[test]
    fn two_atoms() {
        let mu = TransverseMeasure::atomic(vec![(vec![c(0.25)], 0.5), (vec![c(-0.25)], 0.5)]).unwrap();
        let atoms = product_measure(&mu).atoms().unwrap();
        assert_eq!(atoms.len(), 4);
        let diag: f64 = atoms.iter().filter(|((_, a2), _)| a2[0] == c(0.0)).map(|(_, w)| w).sum();
        assert_eq!(diag, 0.5);
        let off: Vec<f64> = atoms
            .iter()
            .filter(|((_, a2), _)| a2[0] != c(0.0))
            .map(|((_, a2), _)| a2[0].re.abs())
            .collect();
        assert_eq!(off, vec![0.5, 0.5]);
    }

    #[test]
    fn cantor_diagonal_shrinks() {
        let m = product_measure(&TransverseMeasure::cantor(-0.5, 0.5, 12).unwrap());
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let v = diagonal_mass(&m, 3f64.powi(-k), 0, 0).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 0.01);
    }

    fn lens_diagonal(eps: f64) -> f64 {
        // (1/π²) ∫_{|v|≤ε} area(D ∩ (D + v)) dv for the unit disc D
        let n = 2000;
        let h = eps / n as f64;
        let f = |d: f64| d * (2.0 * (d / 2.0).acos() - d / 2.0 * (4.0 - d * d).sqrt());
        let mut s = f(0.0) + f(eps);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        2.0 / std::f64::consts::PI * s * h / 3.0
    }

    #[test]
    fn lebesgue_diagonal_matches_lens_area() {
        let mu = TransverseMeasure::normalized_lebesgue(Region::centered_polydisc(&[1.0]).unwrap(), 8);
        let m = product_measure(&mu);
        for eps in [0.5, 0.25, 0.125] {
            let d = diagonal_mass(&m, eps, 40000, 11).unwrap();
            let exact = lens_diagonal(eps);
            assert!((d.value - exact).abs() < 4.0 * d.stderr, "{eps}: {} vs {exact}", d.value);
            assert!(d.stderr < 0.05 * exact);
        }
    }
}
