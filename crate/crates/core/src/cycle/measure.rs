use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use super::CycleError;
use crate::lamination::ParamMap;
use crate::numerics::{gauss_grid, pairwise_sum, sup_dist, Region, C64};

/// Deepest Cantor level accepted by [`TransverseMeasure::cantor`].
pub const MAX_CANTOR_DEPTH: u32 = 30;

/// Density of an absolutely continuous measure with respect to Lebesgue.
#[derive(Clone)]
pub enum DensityFn {
    Constant(f64),
    Custom(Arc<dyn Fn(&[C64]) -> f64 + Send + Sync>),
}

impl DensityFn {
    pub fn at(&self, x: &[C64]) -> f64 {
        match self {
            DensityFn::Constant(c) => *c,
            DensityFn::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityFn::Constant(c) => write!(f, "Constant({c})"),
            DensityFn::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Positive measure on a transversal.
#[derive(Clone)]
pub enum TransverseMeasure {
    /// Weighted point masses.
    Atomic(Vec<(Vec<C64>, f64)>),
    /// `weight · Lebesgue` restricted to `support`, integrated with a Gauss
    /// grid of the given order.
    Density {
        support: Region,
        weight: DensityFn,
        order: usize,
    },
    /// Self-similar middle-thirds Cantor measure on the real segment
    /// `[lo, hi]`, resolved to `depth` levels (atoms at the midpoints of the
    /// `2^depth` cylinders).
    Cantor {
        lo: f64,
        hi: f64,
        depth: u32,
        weights: [f64; 2],
    },
    /// Sum of measures.
    Mixed(Vec<TransverseMeasure>),
    /// Image of a measure under a parameter map.
    Pushforward {
        base: Box<TransverseMeasure>,
        map: Arc<dyn ParamMap>,
    },
}

impl fmt::Debug for TransverseMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransverseMeasure::Atomic(a) => f.debug_tuple("Atomic").field(a).finish(),
            TransverseMeasure::Density {
                support,
                weight,
                order,
            } => f
                .debug_struct("Density")
                .field("support", support)
                .field("weight", weight)
                .field("order", order)
                .finish(),
            TransverseMeasure::Cantor {
                lo,
                hi,
                depth,
                weights,
            } => f
                .debug_struct("Cantor")
                .field("lo", lo)
                .field("hi", hi)
                .field("depth", depth)
                .field("weights", weights)
                .finish(),
            TransverseMeasure::Mixed(parts) => f.debug_tuple("Mixed").field(parts).finish(),
            TransverseMeasure::Pushforward { base, .. } => {
                f.debug_struct("Pushforward").field("base", base).finish()
            }
        }
    }
}

/// A draw `x` with weight `w` such that `E[w·f(x)] = ∫ f dμ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub point: Vec<C64>,
    pub weight: f64,
}

impl TransverseMeasure {
    /// The zero measure.
    pub fn zero() -> Self {
        TransverseMeasure::Atomic(Vec::new())
    }

    pub fn atomic(atoms: Vec<(Vec<C64>, f64)>) -> Result<Self, CycleError> {
        if atoms.is_empty() {
            return Err(CycleError::InvalidMeasure("no atoms".into()));
        }
        if let Some((x, w)) = atoms.iter().find(|(_, w)| !(*w > 0.0 && w.is_finite())) {
            return Err(CycleError::InvalidMeasure(format!(
                "atom at {x:?} has weight {w}"
            )));
        }
        for (i, (x, _)) in atoms.iter().enumerate() {
            if atoms[i + 1..].iter().any(|(y, _)| sup_dist(x, y) == 0.0) {
                return Err(CycleError::InvalidMeasure(format!("repeated atom at {x:?}")));
            }
        }
        Ok(TransverseMeasure::Atomic(atoms))
    }

    /// Single unit atom at `x`.
    pub fn dirac(x: Vec<C64>) -> Self {
        TransverseMeasure::Atomic(vec![(x, 1.0)])
    }

    /// Lebesgue measure on `support` normalized to total mass 1.
    pub fn normalized_lebesgue(support: Region, order: usize) -> Self {
        let w = 1.0 / support.volume();
        TransverseMeasure::Density {
            support,
            weight: DensityFn::Constant(w),
            order,
        }
    }

    pub fn cantor(lo: f64, hi: f64, depth: u32) -> Result<Self, CycleError> {
        Self::cantor_weighted(lo, hi, depth, [0.5, 0.5])
    }

    pub fn cantor_weighted(lo: f64, hi: f64, depth: u32, weights: [f64; 2]) -> Result<Self, CycleError> {
        if depth > MAX_CANTOR_DEPTH {
            return Err(CycleError::Resource(format!(
                "Cantor depth {depth} exceeds {MAX_CANTOR_DEPTH}"
            )));
        }
        if !(hi > lo) {
            return Err(CycleError::InvalidMeasure(format!("empty segment [{lo}, {hi}]")));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || (weights[0] + weights[1] - 1.0).abs() > 1e-12 {
            return Err(CycleError::InvalidMeasure(format!(
                "branch weights {weights:?} must be positive and sum to 1"
            )));
        }
        Ok(TransverseMeasure::Cantor {
            lo,
            hi,
            depth,
            weights,
        })
    }

    pub fn pushforward(self, map: Arc<dyn ParamMap>) -> Self {
        TransverseMeasure::Pushforward {
            base: Box::new(self),
            map,
        }
    }

    /// Parameter dimension, or `None` for the zero measure.
    pub fn dim(&self) -> Option<usize> {
        match self {
            TransverseMeasure::Atomic(a) => a.first().map(|(x, _)| x.len()),
            TransverseMeasure::Density { support, .. } => Some(support.dim()),
            TransverseMeasure::Cantor { .. } => Some(1),
            TransverseMeasure::Mixed(parts) => parts.iter().find_map(Self::dim),
            TransverseMeasure::Pushforward { map, .. } => Some(map.dim_out()),
        }
    }

    /// Whether the measure has no atoms.
    pub fn is_diffuse(&self) -> bool {
        match self {
            TransverseMeasure::Atomic(a) => a.is_empty(),
            TransverseMeasure::Density { .. } | TransverseMeasure::Cantor { .. } => true,
            TransverseMeasure::Mixed(parts) => parts.iter().all(Self::is_diffuse),
            TransverseMeasure::Pushforward { base, .. } => base.is_diffuse(),
        }
    }

    /// Exact weighted nodes: atoms, Cantor cylinder midpoints, or Gauss
    /// nodes times the density.
    pub fn nodes(&self) -> Result<Vec<(Vec<C64>, f64)>, CycleError> {
        Ok(match self {
            TransverseMeasure::Atomic(a) => a.clone(),
            TransverseMeasure::Density {
                support,
                weight,
                order,
            } => {
                let grid = gauss_grid(*order, support)?;
                grid.iter()
                    .map(|(x, w)| (x.to_vec(), w * weight.at(x)))
                    .filter(|(_, w)| *w != 0.0)
                    .collect()
            }
            TransverseMeasure::Cantor { .. } => self
                .cantor_atoms()
                .into_iter()
                .map(|(x, w)| (vec![C64::new(x, 0.0)], w))
                .collect(),
            TransverseMeasure::Mixed(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.nodes()?);
                }
                out
            }
            TransverseMeasure::Pushforward { base, map } => base
                .nodes()?
                .into_iter()
                .map(|(x, w)| (map.forward(&x), w))
                .collect(),
        })
    }

    /// Cantor atoms `(x, mass)` in increasing `x`; empty for other variants.
    pub fn cantor_atoms(&self) -> Vec<(f64, f64)> {
        let TransverseMeasure::Cantor {
            lo,
            hi,
            depth,
            weights,
        } = self
        else {
            return Vec::new();
        };
        let mut level = vec![(*lo, 1.0)];
        let mut len = hi - lo;
        for _ in 0..*depth {
            let child = len / 3.0;
            let mut next = Vec::with_capacity(level.len() * 2);
            for (left, m) in &level {
                next.push((*left, m * weights[0]));
                next.push((left + 2.0 * child, m * weights[1]));
            }
            level = next;
            len = child;
        }
        level
            .into_iter()
            .map(|(left, m)| (left + 0.5 * len, m))
            .collect()
    }

    pub fn total_mass(&self) -> Result<f64, CycleError> {
        Ok(match self {
            TransverseMeasure::Atomic(a) => a.iter().map(|(_, w)| w).sum(),
            TransverseMeasure::Cantor { .. } => 1.0,
            TransverseMeasure::Mixed(parts) => {
                let mut s = 0.0;
                for p in parts {
                    s += p.total_mass()?;
                }
                s
            }
            TransverseMeasure::Pushforward { base, .. } => base.total_mass()?,
            TransverseMeasure::Density { .. } => {
                let w: Vec<f64> = self.nodes()?.into_iter().map(|(_, w)| w).collect();
                pairwise_sum(&w)
            }
        })
    }

    /// `∫ f dμ` over the exact nodes, evaluated in parallel and summed in
    /// node order.
    pub fn integrate<F>(&self, f: F) -> Result<f64, CycleError>
    where
        F: Fn(&[C64]) -> Result<f64, CycleError> + Sync,
    {
        let nodes = self.nodes()?;
        let vals: Result<Vec<f64>, CycleError> =
            nodes.par_iter().map(|(x, w)| Ok(w * f(x)?)).collect();
        Ok(pairwise_sum(&vals?))
    }

    /// Complex-valued [`integrate`](Self::integrate).
    pub fn integrate_complex<F>(&self, f: F) -> Result<C64, CycleError>
    where
        F: Fn(&[C64]) -> Result<C64, CycleError> + Sync,
    {
        let nodes = self.nodes()?;
        let vals: Result<Vec<C64>, CycleError> =
            nodes.par_iter().map(|(x, w)| Ok(f(x)? * *w)).collect();
        let vals = vals?;
        let re: Vec<f64> = vals.iter().map(|z| z.re).collect();
        let im: Vec<f64> = vals.iter().map(|z| z.im).collect();
        Ok(C64::new(pairwise_sum(&re), pairwise_sum(&im)))
    }

    /// One weighted draw from the whole measure.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WeightedSample, CycleError> {
        match self {
            TransverseMeasure::Atomic(atoms) => {
                let total: f64 = atoms.iter().map(|(_, w)| w).sum();
                let i = pick(atoms.iter().map(|(_, w)| *w), total, rng)
                    .ok_or_else(|| CycleError::InvalidMeasure("cannot draw from the zero measure".into()))?;
                Ok(WeightedSample {
                    point: atoms[i].0.clone(),
                    weight: total,
                })
            }
            TransverseMeasure::Density { support, weight, .. } => {
                let x = support.sample_uniform(rng);
                let w = weight.at(&x) * support.volume();
                Ok(WeightedSample { point: x, weight: w })
            }
            TransverseMeasure::Cantor {
                lo,
                hi,
                depth,
                weights,
            } => {
                let x = cantor_descend(*lo, hi - lo, 0, *depth, weights, rng);
                Ok(WeightedSample {
                    point: vec![C64::new(x, 0.0)],
                    weight: 1.0,
                })
            }
            TransverseMeasure::Mixed(parts) => {
                let masses: Result<Vec<f64>, CycleError> = parts.iter().map(Self::total_mass).collect();
                let masses = masses?;
                let total: f64 = masses.iter().sum();
                let i = pick(masses.iter().copied(), total, rng)
                    .ok_or_else(|| CycleError::InvalidMeasure("cannot draw from the zero measure".into()))?;
                let s = parts[i].draw(rng)?;
                Ok(WeightedSample {
                    point: s.point,
                    weight: s.weight * total / masses[i],
                })
            }
            TransverseMeasure::Pushforward { base, map } => {
                let s = base.draw(rng)?;
                Ok(WeightedSample {
                    point: map.forward(&s.point),
                    weight: s.weight,
                })
            }
        }
    }

    /// Whether [`draw_near`](Self::draw_near) is available.
    pub fn supports_windows(&self) -> bool {
        matches!(
            self,
            TransverseMeasure::Atomic(_)
                | TransverseMeasure::Density { .. }
                | TransverseMeasure::Cantor { .. }
        )
    }

    /// Weighted draw from `μ` restricted to a set containing the window
    /// `{b : ‖b − center‖∞ ≤ radius}`, so that
    /// `E[w·1[‖b − center‖∞ ≤ radius]·f(b)] = ∫_window f dμ`.
    /// Returns `None` when the window carries no mass.
    pub fn draw_near<R: Rng + ?Sized>(
        &self,
        center: &[C64],
        radius: f64,
        rng: &mut R,
    ) -> Result<Option<WeightedSample>, CycleError> {
        match self {
            TransverseMeasure::Atomic(atoms) => {
                let near: Vec<&(Vec<C64>, f64)> = atoms
                    .iter()
                    .filter(|(x, _)| sup_dist(x, center) <= radius)
                    .collect();
                let total: f64 = near.iter().map(|(_, w)| w).sum();
                Ok(pick(near.iter().map(|(_, w)| *w), total, rng).map(|i| WeightedSample {
                    point: near[i].0.clone(),
                    weight: total,
                }))
            }
            TransverseMeasure::Density { support, weight, .. } => {
                let window = Region::polydisc(center.to_vec(), vec![radius; center.len()])?;
                let x = window.sample_uniform(rng);
                let w = if support.contains(&x) {
                    weight.at(&x) * window.volume()
                } else {
                    0.0
                };
                Ok(Some(WeightedSample { point: x, weight: w }))
            }
            TransverseMeasure::Cantor {
                lo,
                hi,
                depth,
                weights,
            } => {
                let c = center[0].re;
                let full = hi - lo;
                let mut level = 0u32;
                while level < *depth && full / 3f64.powi(level as i32 + 1) >= radius {
                    level += 1;
                }
                let mut cands = Vec::new();
                cantor_cylinders_near(*lo, full, 0, level, 1.0, weights, c - radius, c + radius, &mut cands);
                let total: f64 = cands.iter().map(|(_, _, m)| m).sum();
                let Some(i) = pick(cands.iter().map(|(_, _, m)| *m), total, rng) else {
                    return Ok(None);
                };
                let (left, len, _) = cands[i];
                let x = cantor_descend(left, len, level, *depth, weights, rng);
                Ok(Some(WeightedSample {
                    point: vec![C64::new(x, 0.0)],
                    weight: total,
                }))
            }
            _ => Err(CycleError::Unsupported(
                "windowed draws from mixed or pushed-forward measures".into(),
            )),
        }
    }
}

/// `∫ f dμ`.
pub fn integrate_measure<F>(mu: &TransverseMeasure, f: F) -> Result<f64, CycleError>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    mu.integrate(|x| Ok(f(x)))
}

fn pick<R: Rng + ?Sized, I: Iterator<Item = f64>>(weights: I, total: f64, rng: &mut R) -> Option<usize> {
    if !(total > 0.0) {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    last
}

/// Random point of the Cantor measure inside the cylinder `[left, left+len]`
/// at `level`, refined to `depth`.
fn cantor_descend<R: Rng + ?Sized>(
    mut left: f64,
    mut len: f64,
    level: u32,
    depth: u32,
    weights: &[f64; 2],
    rng: &mut R,
) -> f64 {
    for _ in level..depth {
        len /= 3.0;
        if rng.random::<f64>() >= weights[0] {
            left += 2.0 * len;
        }
    }
    left + 0.5 * len
}

#[allow(clippy::too_many_arguments)]
fn cantor_cylinders_near(
    left: f64,
    len: f64,
    level: u32,
    target: u32,
    mass: f64,
    weights: &[f64; 2],
    a: f64,
    b: f64,
    out: &mut Vec<(f64, f64, f64)>,
) {
    if left > b || left + len < a {
        return;
    }
    if level == target {
        out.push((left, len, mass));
        return;
    }
    let child = len / 3.0;
    cantor_cylinders_near(left, child, level + 1, target, mass * weights[0], weights, a, b, out);
    cantor_cylinders_near(left + 2.0 * child, child, level + 1, target, mass * weights[1], weights, a, b, out);
}
