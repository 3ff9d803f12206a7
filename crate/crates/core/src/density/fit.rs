use rand::Rng;
use serde::Serialize;

use super::{DensityError, ProductFamily};
use crate::lamination::{derivative_bound, estimate_bilipschitz};
use crate::numerics::{rng_stream, sup_norm, Region, C64};

const HOLDOUT_SALT: u64 = 0x0005_EED0_FF17;
const LADDER_SHALLOW: i32 = 8;
const LADDER_DEEP: i32 = 16;

/// Constants in `c₁(‖α₂‖ − c₂‖α‖‖w′‖) ≤ ‖g_α(z′, w′)‖ ≤ c₃(‖α₂‖ + ‖α‖‖w′‖)`
/// on `‖z′‖, ‖w′‖ ≤ ρ`, with `‖α‖ = ‖α₁‖ + ‖α₂‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityFit {
    pub rho: f64,
    pub leaf_dim: usize,
    pub codim: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Lower bi-Lipschitz constant of `a ↦ h_a` on `‖z′‖ ≤ ρ`.
    pub c_bilip: f64,
    /// `k` with `‖∂_{w′} g_α‖ ≤ k‖α‖`.
    pub k_derivative: f64,
    /// Largest `‖α‖` seen.
    pub alpha_max: f64,
    pub samples: usize,
    /// Smallest margin of either inequality on the holdout sample.
    pub worst_case_slack: f64,
    /// Holdout points that violated the training constants, which were
    /// then widened to cover them.
    pub holdout_violations: usize,
}

struct Probe {
    a2: f64,
    alpha: f64,
    w: f64,
    g: f64,
}

fn random_point<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
}

fn probe(p: &ProductFamily, rho: f64, seed: u64, index: u64) -> Probe {
    let q = p.leaf_dim();
    let tr = p.base.transversal();
    let mut rng = rng_stream(seed, index);
    let a = tr.sample(&mut rng);
    let b = if index % 2 == 0 {
        tr.sample(&mut rng)
    } else {
        let s = 10f64.powf(-6.0 * rng.random::<f64>());
        let other = tr.sample(&mut rng);
        a.iter().zip(&other).map(|(x, y)| x + (y - x) * s).collect()
    };
    let z: Vec<C64> = (0..q).map(|_| random_point(&mut rng, rho)).collect();
    let mut w: Vec<C64> = (0..q).map(|_| random_point(&mut rng, rho)).collect();
    if index % 4 == 3 {
        w.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
    }
    let a2: Vec<C64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
    let g = sup_norm(&p.g(&a, &a2, &z, &w));
    let a2n = sup_norm(&a2);
    Probe {
        a2: a2n,
        alpha: sup_norm(&a) + a2n,
        w: sup_norm(&w),
        g,
    }
}

/// Fits the two-sided estimate on `samples` draws (a quarter of them on
/// the slice `w′ = 0`) and re-checks it on an independent sample of the
/// same size.
///
/// Before fitting, `‖g_α(z′, 0)‖ / ‖α₂‖` is followed down a ladder
/// `‖α₂‖ = 2^{-8}, 2^{-16}` from several base points; growth or decay by
/// more than 1.5× means the family is not transversally Lipschitz.
pub fn fit_inequality(p: &ProductFamily, rho: f64, samples: usize, seed: u64) -> Result<InequalityFit, DensityError> {
    if !(rho > 0.0 && rho <= p.rho) {
        return Err(DensityError::InvalidRadius(rho));
    }
    if samples == 0 {
        return Err(DensityError::InvalidInput("no samples requested".into()));
    }
    lipschitz_ladder(p, rho)?;
    let bilip = estimate_bilipschitz(p.base.as_ref(), rho, samples.min(4096), seed)?;
    let k = derivative_bound(p.base.as_ref(), rho, samples, seed);
    let c_bilip = bilip.c_lower;
    let c2 = if k == 0.0 { 0.0 } else { 1.1 * k / c_bilip };
    let train: Vec<Probe> = (0..samples as u64).map(|i| probe(p, rho, seed, i)).collect();
    let mut c1 = f64::INFINITY;
    let mut c3 = 0.0_f64;
    let mut alpha_max = 0.0_f64;
    for s in &train {
        alpha_max = alpha_max.max(s.alpha);
        let denom = s.a2 + s.alpha * s.w;
        if denom > 0.0 {
            c3 = c3.max(s.g / denom);
        }
        let bracket = s.a2 - c2 * s.alpha * s.w;
        if bracket > 0.0 {
            c1 = c1.min(s.g / bracket);
        }
    }
    if !c1.is_finite() {
        c1 = c_bilip;
    }
    let holdout: Vec<Probe> = (0..samples as u64)
        .map(|i| probe(p, rho, seed ^ HOLDOUT_SALT, i))
        .collect();
    let mut violations = 0;
    for s in &holdout {
        alpha_max = alpha_max.max(s.alpha);
        let denom = s.a2 + s.alpha * s.w;
        let bracket = s.a2 - c2 * s.alpha * s.w;
        let mut bad = false;
        if denom > 0.0 && s.g > c3 * denom {
            c3 = s.g / denom;
            bad = true;
        }
        if bracket > 0.0 && c1 * bracket > s.g {
            c1 = s.g / bracket;
            bad = true;
        }
        violations += bad as usize;
    }
    let slack = holdout
        .iter()
        .map(|s| {
            let lower = s.g - c1 * (s.a2 - c2 * s.alpha * s.w);
            let upper = c3 * (s.a2 + s.alpha * s.w) - s.g;
            lower.min(upper)
        })
        .fold(f64::INFINITY, f64::min);
    if !(c1 > 0.0 && c1.is_finite() && c3 > 0.0 && c3.is_finite()) {
        return Err(DensityError::NonLipschitz {
            witness: format!("fitted constants c1 = {c1}, c3 = {c3}"),
        });
    }
    Ok(InequalityFit {
        rho,
        leaf_dim: p.leaf_dim(),
        codim: p.codim(),
        c1,
        c2,
        c3,
        c_bilip,
        k_derivative: k,
        alpha_max,
        samples,
        worst_case_slack: slack,
        holdout_violations: violations,
    })
}

fn lipschitz_ladder(p: &ProductFamily, rho: f64) -> Result<(), DensityError> {
    let q = p.leaf_dim();
    let dim = p.base.param_dim();
    let tr = p.base.transversal();
    let mut anchors = vec![vec![C64::new(0.0, 0.0); dim]];
    anchors.extend(tr.grid(4));
    let leaf: Vec<Vec<C64>> = (0..4)
        .map(|k| (0..q).map(|j| C64::from_polar(rho * 0.9, 1.3 * k as f64 + 0.7 * j as f64)).collect())
        .collect();
    let zero_w = vec![C64::new(0.0, 0.0); q];
    let dirs = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-0.6, 0.8)];
    for a in anchors.iter().filter(|a| tr.contains(a, 1e-12)) {
        for e in dirs {
            let step = |d: i32| -> Option<Vec<C64>> {
                let a2 = vec![e * 2f64.powi(-d); dim];
                let b: Vec<C64> = a.iter().zip(&a2).map(|(x, y)| x + y).collect();
                tr.contains(&b, 0.0).then_some(a2)
            };
            let (Some(shallow), Some(deep)) = (step(LADDER_SHALLOW), step(LADDER_DEEP)) else {
                continue;
            };
            for z in &leaf {
                let r8 = sup_norm(&p.g(a, &shallow, z, &zero_w)) / sup_norm(&shallow);
                let r16 = sup_norm(&p.g(a, &deep, z, &zero_w)) / sup_norm(&deep);
                if r16 > 1.5 * r8 || r8 > 1.5 * r16 {
                    return Err(DensityError::NonLipschitz {
                        witness: format!(
                            "alpha1 = {a:?}, z' = {z:?}: |g|/|alpha2| = {r8:.6e} at |alpha2| = 2^-{LADDER_SHALLOW} but {r16:.6e} at 2^-{LADDER_DEEP}"
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Box `K*` in `(z′, z″, w′, w″)` coordinates on which far-stratum plaques
/// (`‖α₂‖ > 1/λ`) carry no rescaled mass: radii `1/2` for `z′, z″`,
/// `min(c₁/(3k), 1/2)` for `w′` (`1/2` when `k = 0`) and `c₁/2` for `w″`.
pub fn far_mass_zero_box(fit: &InequalityFit, k: f64) -> Result<Region, DensityError> {
    let (q, c) = (fit.leaf_dim, fit.codim);
    let w_leaf = if k > 0.0 { (fit.c1 / (3.0 * k)).min(0.5) } else { 0.5 };
    let mut radii = vec![0.5; q + c];
    radii.extend(std::iter::repeat_n(w_leaf, q));
    radii.extend(std::iter::repeat_n(fit.c1 / 2.0, c));
    Ok(Region::centered_polydisc(&radii)?)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::density::build_product;
    use crate::lamination::{ExprFamily, Transversal};

    fn product(text: &str, r: f64) -> ProductFamily {
        let tr = Transversal::Region(Region::centered_polydisc(&[r]).unwrap());
        build_product(Arc::new(ExprFamily::parse(text, 1, tr).unwrap()), 0.5).unwrap()
    }

    #[test]
    fn flat_pencil_constants() {
        let fit = fit_inequality(&product("a1", 0.5), 0.5, 2000, 3).unwrap();
        assert!((fit.c3 - 1.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.c1 - 1.0).abs() < 1e-6);
        assert_eq!(fit.c2, 0.0);
        assert_eq!(fit.holdout_violations, 0);
        assert!(fit.worst_case_slack >= 0.0);
    }

    #[test]
    fn box_radii() {
        let fit = fit_inequality(&product("a1", 0.5), 0.5, 200, 3).unwrap();
        let k = far_mass_zero_box(&fit, 0.0).unwrap();
        assert_eq!(k.radii(), &[0.5, 0.5, 0.5, 0.5]);
        let unit = InequalityFit { c1: 1.0, ..fit };
        let k = far_mass_zero_box(&unit, 1.0).unwrap();
        assert_eq!(k.radii(), &[0.5, 0.5, 1.0 / 3.0, 0.5]);
    }
}
