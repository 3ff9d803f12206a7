//! Sampled checks and Lipschitz estimators for plaque families.

use std::f64::consts::TAU;

use serde::Serialize;

use super::{LaminationError, PlaqueFamily};
use crate::numerics::{rng_stream, sup_dist, sup_norm, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolomorphyCheck {
    pub residual: f64,
    pub within_tolerance: bool,
}

/// Leaf points used by the sampled checks: the origin, and rings at
/// `radius·{1/3, 2/3, 1}` with `angles` directions in every coordinate.
fn leaf_samples(q: usize, radius: f64, angles: usize) -> Vec<Vec<C64>> {
    let mut out = vec![vec![C64::new(0.0, 0.0); q]];
    for ring in 1..=3 {
        let r = radius * ring as f64 / 3.0;
        for k in 0..angles {
            let w = C64::from_polar(r, TAU * k as f64 / angles as f64);
            for j in 0..q {
                let mut p = vec![C64::new(0.0, 0.0); q];
                p[j] = w;
                out.push(p);
            }
            if q > 1 {
                out.push(vec![w; q]);
            }
        }
    }
    out
}

/// Circle-quadrature test of holomorphy in `z′` for the plaque `h_a`.
///
/// For each sampled `z′` and each leaf coordinate, compares `h_a(z′)` with
/// the mean of `h_a` on a small circle around it, and measures the
/// first Cauchy moment `mean(h_a(z′ + rω)·ω)`, which vanishes for
/// holomorphic plaques but not for harmonic ones such as `z̄′`.
pub fn verify_holomorphy<F: PlaqueFamily + ?Sized>(family: &F, a: &[C64], tol: f64) -> HolomorphyCheck {
    let q = family.leaf_dim();
    let limit = family.holomorphy_radius().min(1.0);
    let centers = leaf_samples(q, 0.5 * limit, 8);
    let r = 0.25 * limit;
    let nodes = 64;
    let mut residual = 0.0_f64;
    for z in &centers {
        let h0 = family.eval(a, z);
        for j in 0..q {
            let mut mean = vec![C64::new(0.0, 0.0); h0.len()];
            let mut moment = vec![C64::new(0.0, 0.0); h0.len()];
            let mut p = z.clone();
            for k in 0..nodes {
                let w = C64::from_polar(1.0, TAU * k as f64 / nodes as f64);
                p[j] = z[j] + w * r;
                let h = family.eval(a, &p);
                for i in 0..h.len() {
                    let d = h[i] - h0[i];
                    mean[i] += d;
                    moment[i] += d * w;
                }
            }
            for i in 0..h0.len() {
                let dm = (mean[i] / nodes as f64).norm();
                let mm = (moment[i] / nodes as f64).norm();
                residual = residual.max(dm).max(mm);
            }
        }
    }
    HolomorphyCheck {
        residual,
        within_tolerance: residual <= tol,
    }
}

/// Bi-Lipschitz constants of `a ↦ h_a` on `‖z′‖ ≤ ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiLipschitz {
    /// Smallest `max_{z′} ‖h_α − h_β‖ / ‖α − β‖` over sampled pairs.
    pub c_lower: f64,
    /// Largest such ratio.
    pub c_upper: f64,
    pub pairs: usize,
}

/// Draws parameter pairs from the transversal and bounds the ratio
/// `max_{‖z′‖≤ρ} ‖h_α(z′) − h_β(z′)‖∞ / ‖α − β‖∞` from both sides. Pairs
/// closer than `1e-9` are skipped.
pub fn estimate_bilipschitz<F: PlaqueFamily + ?Sized>(
    family: &F,
    rho: f64,
    sample_pairs: usize,
    seed: u64,
) -> Result<BiLipschitz, LaminationError> {
    let q = family.leaf_dim();
    let leaf = leaf_samples(q, rho, 8);
    let tr = family.transversal();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    let mut pairs = 0;
    for i in 0..sample_pairs {
        let mut rng = rng_stream(seed, i as u64);
        let x = tr.sample(&mut rng);
        let y = tr.sample(&mut rng);
        let sep = sup_dist(&x, &y);
        if sep < 1e-9 {
            continue;
        }
        let disc = leaf
            .iter()
            .map(|z| sup_dist(&family.eval(&x, z), &family.eval(&y, z)))
            .fold(0.0_f64, f64::max);
        let ratio = disc / sep;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        pairs += 1;
    }
    if pairs == 0 {
        return Err(LaminationError::InsufficientTransversal);
    }
    Ok(BiLipschitz {
        c_lower: lo,
        c_upper: hi,
        pairs,
    })
}

/// Sampled bound `k` with `‖∂_{w′} g_α(z′, w′)‖ ≤ k·‖α‖`, where
/// `g_α(z′, w′) = h_{α₁+α₂}(z′ + w′) − h_{α₁}(z′)`, `‖α‖ = ‖α₁‖∞ + ‖α₂‖∞`
/// and the derivative is measured as an operator `ℓ∞ → ℓ∞`.
///
/// Leaf points are drawn with `‖z′‖, ‖w′‖ ≤ ρ`; half the parameter pairs
/// are drawn close to each other so that small `‖α₂‖` is represented.
pub fn derivative_bound<F: PlaqueFamily + ?Sized>(family: &F, rho: f64, samples: usize, seed: u64) -> f64 {
    let q = family.leaf_dim();
    let c = family.codim();
    let tr = family.transversal();
    let mut k = 0.0_f64;
    let mut jac = vec![C64::new(0.0, 0.0); c * q];
    let mut val = vec![C64::new(0.0, 0.0); c];
    for i in 0..samples {
        let mut rng = rng_stream(seed ^ 0xD3A1_7B0C, i as u64);
        let a = tr.sample(&mut rng);
        let b = if i % 2 == 0 {
            tr.sample(&mut rng)
        } else {
            let t: f64 = rand::Rng::random(&mut rng);
            let s = 10f64.powf(-6.0 * t);
            let other = tr.sample(&mut rng);
            a.iter().zip(&other).map(|(x, y)| x + (y - x) * s).collect()
        };
        let norm_alpha = sup_norm(&a) + sup_dist(&a, &b);
        if norm_alpha < 1e-12 {
            continue;
        }
        let zeta: Vec<C64> = (0..q)
            .map(|_| {
                let z = random_point(&mut rng, rho);
                let w = random_point(&mut rng, rho);
                z + w
            })
            .collect();
        family.jet_into(&b, &zeta, &mut val, &mut jac);
        let op = (0..c)
            .map(|r| jac[r * q..(r + 1) * q].iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0_f64, f64::max);
        k = k.max(op / norm_alpha);
    }
    k
}

fn random_point<R: rand::Rng + ?Sized>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt() * (1.0 - 1e-9);
    C64::from_polar(r, TAU * rng.random::<f64>())
}

/// Sampled values of the four structural invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyInvariants {
    /// `max ‖h_a(z′)‖∞` over the sample; must stay ≤ 1.
    pub max_value: f64,
    pub holomorphy_residual: f64,
    /// `max ‖h_a(0) − a‖∞`, including `h_0` when 0 is a parameter.
    pub centering_error: f64,
    /// Smallest sampled separation between distinct plaques.
    pub min_separation: f64,
}

impl FamilyInvariants {
    pub fn check(&self) -> Result<(), LaminationError> {
        let fail = |name: &str, detail: String| {
            Err(LaminationError::Invariant {
                name: name.into(),
                detail,
            })
        };
        if self.max_value > 1.0 {
            return fail("bounded", format!("value of norm {} leaves the unit polydisc", self.max_value));
        }
        if self.holomorphy_residual > 1e-8 {
            return fail("holomorphic", format!("circle residual {}", self.holomorphy_residual));
        }
        if self.centering_error > 1e-12 {
            return fail("centered", format!("|h_a(0) - a| = {}", self.centering_error));
        }
        if self.min_separation <= 1e-10 {
            return fail("disjoint", format!("plaques within {}", self.min_separation));
        }
        Ok(())
    }
}

/// Evaluates the family invariants on a `grid × grid` sample: `grid`
/// parameters from the transversal against `grid` leaf points in the unit
/// polydisc.
pub fn check_family_invariants<F: PlaqueFamily + ?Sized>(family: &F, grid: usize) -> FamilyInvariants {
    let q = family.leaf_dim();
    let params = family.transversal().grid(grid);
    let angles = (grid.saturating_sub(1) / 3).max(1);
    let leaf: Vec<Vec<C64>> = leaf_samples(q, 1.0, angles).into_iter().take(grid).collect();
    let zero = vec![C64::new(0.0, 0.0); q];
    let values: Vec<Vec<Vec<C64>>> = params
        .iter()
        .map(|a| leaf.iter().map(|z| family.eval(a, z)).collect())
        .collect();
    let max_value = values
        .iter()
        .flatten()
        .map(|v| sup_norm(v))
        .fold(0.0_f64, f64::max);
    let mut centering_error = params
        .iter()
        .map(|a| sup_dist(&family.eval(a, &zero), a))
        .fold(0.0_f64, f64::max);
    let origin = vec![C64::new(0.0, 0.0); family.param_dim()];
    if family.transversal().contains(&origin, 0.0) {
        let h0 = leaf
            .iter()
            .map(|z| sup_norm(&family.eval(&origin, z)))
            .fold(0.0_f64, f64::max);
        centering_error = centering_error.max(h0);
    }
    let holomorphy_residual = params
        .iter()
        .step_by((params.len() / 8).max(1))
        .map(|a| verify_holomorphy(family, a, 1e-8).residual)
        .fold(0.0_f64, f64::max);
    let mut min_separation = f64::INFINITY;
    for i in 0..params.len() {
        for j in i + 1..params.len() {
            if sup_dist(&params[i], &params[j]) < 1e-12 {
                continue;
            }
            let d = values[i]
                .iter()
                .zip(&values[j])
                .map(|(x, y)| sup_dist(x, y))
                .fold(f64::INFINITY, f64::min);
            min_separation = min_separation.min(d);
        }
    }
    FamilyInvariants {
        max_value,
        holomorphy_residual,
        centering_error,
        min_separation,
    }
}

/// Jump of the transversal derivative at `a0` in direction `dir`:
/// `‖(h_{a0+δ} − h_{a0})/δ − (h_{a0} − h_{a0−δ})/δ‖∞` at the leaf point `z`.
pub fn transversal_slope_gap<F: PlaqueFamily + ?Sized>(
    family: &F,
    a0: &[C64],
    dir: &[C64],
    z: &[C64],
    delta: f64,
) -> f64 {
    let shift = |s: f64| -> Vec<C64> { a0.iter().zip(dir).map(|(a, d)| a + d * s).collect() };
    let h0 = family.eval(a0, z);
    let hp = family.eval(&shift(delta), z);
    let hm = family.eval(&shift(-delta), z);
    h0.iter()
        .zip(hp.iter().zip(&hm))
        .map(|(c, (p, m))| ((p - c) / delta - (c - m) / delta).norm())
        .fold(0.0_f64, f64::max)
}
