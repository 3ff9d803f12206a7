use std::sync::Arc;

use serde::Serialize;

use super::DensityError;
use crate::cycle::{trace_mass, FoliatedCycleLocal};
use crate::lamination::PlaqueFamily;
use crate::numerics::{factorial, gauss_grid, jet, mixed_discriminants, pairwise_sum, HoloMap, Region, C64};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LelongEstimate {
    pub radii: Vec<f64>,
    /// `‖T‖_{B(c,r)} / ((2π)^q r^{2q})` per radius.
    pub ratios: Vec<f64>,
    /// Intercept of `ratio = ν + C·r²` through the two smallest radii.
    pub nu: f64,
    /// Change of the intercept when the fit moves one radius up; `None`
    /// with fewer than three radii.
    pub model_error: Option<f64>,
    pub warnings: Vec<String>,
}

fn intercept(r1: f64, v1: f64, r2: f64, v2: f64) -> f64 {
    let (s1, s2) = (r1 * r1, r2 * r2);
    (s2 * v1 - s1 * v2) / (s2 - s1)
}

/// Ball-mass ratios of `T` at `center` and their extrapolation to `r → 0`.
pub fn lelong(
    t: &FoliatedCycleLocal,
    center: &[C64],
    radii: &[f64],
    order: usize,
) -> Result<LelongEstimate, DensityError> {
    if radii.is_empty() {
        return Err(DensityError::InvalidInput("no radii".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|r| *r <= 0.0) {
        return Err(DensityError::InvalidInput(format!(
            "radii must be positive and strictly decreasing: {radii:?}"
        )));
    }
    let reach = center.iter().fold(0.0_f64, |m, z| m.max(z.norm())) + radii[0];
    if reach > 1.0 {
        return Err(DensityError::InvalidInput(format!(
            "ball of radius {} at {center:?} leaves the flow box",
            radii[0]
        )));
    }
    let q = t.leaf_dim() as i32;
    let resolution = measure_resolution(t);
    let mut warnings = Vec::new();
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        if r < 10.0 * resolution {
            warnings.push(format!(
                "radius {r} is below ten times the transverse quadrature spacing {resolution:.3e}"
            ));
        }
        let ball = Region::ball(center.to_vec(), r)?;
        let mass = trace_mass(t, &ball, order)?;
        ratios.push(mass / ((2.0 * std::f64::consts::PI).powi(q) * r.powi(2 * q)));
    }
    let k = radii.len();
    let (nu, model_error) = match k {
        1 => (ratios[0], None),
        2 => (intercept(radii[0], ratios[0], radii[1], ratios[1]), None),
        _ => {
            let nu = intercept(radii[k - 2], ratios[k - 2], radii[k - 1], ratios[k - 1]);
            let next = intercept(radii[k - 3], ratios[k - 3], radii[k - 2], ratios[k - 2]);
            (nu, Some((nu - next).abs()))
        }
    };
    Ok(LelongEstimate {
        radii: radii.to_vec(),
        ratios,
        nu,
        model_error,
        warnings,
    })
}

fn measure_resolution(t: &FoliatedCycleLocal) -> f64 {
    use crate::cycle::TransverseMeasure::*;
    fn res(mu: &crate::cycle::TransverseMeasure) -> f64 {
        match mu {
            Density { support, order, .. } => support.sup_radius() / *order as f64,
            Mixed(parts) => parts.iter().map(res).fold(0.0, f64::max),
            Pushforward { base, .. } => res(base),
            Atomic(_) | Cantor { .. } => 0.0,
        }
    }
    res(&t.measure)
}

/// Both sides of the dilation identity for `i dz∧dz̄` on a curve chart:
/// the mass of `(A_λ)_*T ∧ i dz∧dz̄` over the bidisc `D(ρ)²` and the mass
/// of `T ∧ i dz∧dz̄` over `D(ρ) × D(ρ/λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceGap {
    pub dilated: f64,
    pub thin: f64,
    /// `|dilated − thin| / thin` (0 when both vanish).
    pub gap: f64,
}

/// Plaques of `(A_λ)_*T` for `A_λ(z′, z″) = (z′, λz″)`: `z′ ↦ λh_a(z′)`.
pub struct DilatedFamily {
    pub base: Arc<dyn PlaqueFamily>,
    pub lambda: f64,
}

impl PlaqueFamily for DilatedFamily {
    fn leaf_dim(&self) -> usize {
        self.base.leaf_dim()
    }

    fn codim(&self) -> usize {
        self.base.codim()
    }

    fn transversal(&self) -> &crate::lamination::Transversal {
        self.base.transversal()
    }

    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }

    fn holomorphy_radius(&self) -> f64 {
        self.base.holomorphy_radius()
    }

    fn eval_into(&self, a: &[C64], z: &[C64], out: &mut [C64]) {
        self.base.eval_into(a, z, out);
        out.iter_mut().for_each(|v| *v *= self.lambda);
    }

    fn jet_into(&self, a: &[C64], z: &[C64], value: &mut [C64], jac: &mut [C64]) {
        self.base.jet_into(a, z, value, jac);
        value.iter_mut().chain(jac.iter_mut()).for_each(|v| *v *= self.lambda);
    }
}

pub fn slice_invariance_check(
    t: &FoliatedCycleLocal,
    lambda: f64,
    rho: f64,
    order: usize,
) -> Result<SliceGap, DensityError> {
    if t.leaf_dim() != 1 || t.family().codim() != 1 {
        return Err(DensityError::InvalidInput(
            "the slice identity is for curves in a surface chart".into(),
        ));
    }
    if !(lambda >= 1.0 && rho > 0.0 && rho <= 1.0) {
        return Err(DensityError::InvalidInput(format!("need lambda >= 1 and 0 < rho <= 1, got {lambda}, {rho}")));
    }
    let grid = gauss_grid(order, &Region::centered_polydisc(&[rho])?)?;
    let dilated_family = DilatedFamily {
        base: t.family().clone(),
        lambda,
    };
    let slice_mass = |fam: &dyn PlaqueFamily, normal_radius: f64| {
        t.measure.integrate(|a| {
            Ok(grid.integrate(|z| {
                if fam.eval(a, z)[0].norm() < normal_radius {
                    2.0
                } else {
                    0.0
                }
            }))
        })
    };
    let dilated = slice_mass(&dilated_family, rho)?;
    let thin = slice_mass(t.family().as_ref(), rho / lambda)?;
    let gap = if thin == 0.0 && dilated == 0.0 {
        0.0
    } else {
        (dilated - thin).abs() / thin.abs().max(f64::MIN_POSITIVE)
    };
    Ok(SliceGap { dilated, thin, gap })
}

/// One weighted piece of a current: the image of `domain` under `map`,
/// whose first `base_dim` outputs are base coordinates and the rest fiber
/// coordinates.
#[derive(Clone)]
pub struct GraphPiece {
    pub weight: f64,
    pub map: Arc<dyn HoloMap + Send>,
    pub domain: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HDimension {
    /// Mass of `S ∧ ω_V^j ∧ ω_F^{k−j}` for `j = 0..=k`, scaled so that the
    /// entries add up to the trace mass.
    pub masses: Vec<f64>,
    pub total: f64,
    /// Largest `j` with mass above `10⁻⁸` of the total.
    pub dimension: usize,
}

/// Horizontal dimension of a current given as weighted parametrized
/// pieces of dimension `k`.
pub fn h_dimension_probe(pieces: &[GraphPiece], base_dim: usize, order: usize) -> Result<HDimension, DensityError> {
    let Some(first) = pieces.first() else {
        return Err(DensityError::ZeroCurrent);
    };
    let k = first.map.dim_in();
    let mut per_j: Vec<Vec<f64>> = vec![Vec::new(); k + 1];
    for piece in pieces {
        let f = piece.map.as_ref();
        if f.dim_in() != k || f.dim_out() < base_dim || piece.domain.dim() != k {
            return Err(DensityError::InvalidInput("pieces of mixed dimension".into()));
        }
        let grid = gauss_grid(order, &piece.domain)?;
        let fiber = f.dim_out() - base_dim;
        let mut a = vec![C64::new(0.0, 0.0); k * k];
        let mut b = vec![C64::new(0.0, 0.0); k * k];
        for (x, w) in grid.iter() {
            let j = jet(f, x)?;
            for r in 0..k {
                for s in 0..k {
                    a[r * k + s] = (0..base_dim).map(|i| j.entry(i, r).conj() * j.entry(i, s)).sum();
                    b[r * k + s] = (0..fiber)
                        .map(|i| j.entry(base_dim + i, r).conj() * j.entry(base_dim + i, s))
                        .sum();
                }
            }
            for (jj, cj) in mixed_discriminants(&a, &b, k).iter().enumerate() {
                per_j[jj].push(piece.weight * w * cj.re);
            }
        }
    }
    let norm = factorial(k) * 2f64.powi(k as i32);
    let masses: Vec<f64> = per_j.iter().map(|v| norm * pairwise_sum(v).max(0.0)).collect();
    let total = pairwise_sum(&masses);
    if total <= 0.0 {
        return Err(DensityError::ZeroCurrent);
    }
    let dimension = (0..=k).rev().find(|j| masses[*j] > 1e-8 * total).unwrap_or(0);
    Ok(HDimension {
        masses,
        total,
        dimension,
    })
}

/// `(A_λ)_*T` for the dilation `A_λ(z′, z″) = (λz′, z″)` normal to the
/// transversal slice `V = {z′ = 0}`, restricted to `‖z′‖ < ρ` and written
/// as pieces `u ↦ (h_a(u/λ), u)` with base coordinate `z″` and fiber `u`.
/// The transverse measure is discretized by its quadrature nodes.
pub fn normal_dilation_pieces(t: &FoliatedCycleLocal, lambda: f64, rho: f64) -> Result<Vec<GraphPiece>, DensityError> {
    let q = t.leaf_dim();
    if lambda < 1.0 || rho <= 0.0 || rho > lambda {
        return Err(DensityError::InvalidInput(format!("need lambda >= 1 and 0 < rho <= lambda, got {lambda}, {rho}")));
    }
    let domain = Region::centered_polydisc(&vec![rho; q])?;
    let family = t.family().clone();
    let c = family.codim();
    t.measure
        .nodes()?
        .into_iter()
        .map(|(a, weight)| {
            let fam = family.clone();
            let map = crate::numerics::FnMap::new(q, c + q, move |u: &[C64]| {
                let z: Vec<C64> = u.iter().map(|x| x / lambda).collect();
                let mut out = fam.eval(&a, &z);
                out.extend_from_slice(u);
                out
            });
            Ok(GraphPiece {
                weight,
                map: Arc::new(map),
                domain: domain.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::TransverseMeasure;
    use crate::lamination::{ExprFamily, FlowBox, Transversal};
    use crate::numerics::FnMap;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cycle(text: &str, mu: TransverseMeasure) -> FoliatedCycleLocal {
        let tr = Transversal::Region(Region::centered_polydisc(&[1.0]).unwrap());
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse(text, 1, tr).unwrap());
        FoliatedCycleLocal::new(FlowBox::new(f, 0.5, "t").unwrap(), mu).unwrap()
    }

    #[test]
    fn flat_plane_calibration() {
        let t = cycle("a1", TransverseMeasure::dirac(vec![c(0.0, 0.0)]));
        let est = lelong(&t, &[c(0.0, 0.0), c(0.0, 0.0)], &[0.4, 0.2, 0.1, 0.05], 8).unwrap();
        for r in &est.ratios {
            assert!((r - 1.0).abs() < 1e-12, "{r}");
        }
        assert!((est.nu - 1.0).abs() < 1e-12);
        assert!(est.warnings.is_empty());
    }

    #[test]
    fn plaque_missing_the_center() {
        let t = cycle("a1", TransverseMeasure::dirac(vec![c(0.3, 0.0)]));
        let est = lelong(&t, &[c(0.0, 0.0), c(0.0, 0.0)], &[0.2, 0.1], 8).unwrap();
        assert_eq!(est.ratios, vec![0.0, 0.0]);
    }

    #[test]
    fn radii_must_decrease() {
        let t = cycle("a1", TransverseMeasure::dirac(vec![c(0.0, 0.0)]));
        assert!(lelong(&t, &[c(0.0, 0.0); 2], &[0.1, 0.2], 8).is_err());
    }

    #[test]
    fn slice_identity_at_unit_dilation() {
        let mu = TransverseMeasure::normalized_lebesgue(Region::centered_polydisc(&[1.0]).unwrap(), 12);
        let t = cycle("a1 + 0.3*a1*z1", mu);
        let g = slice_invariance_check(&t, 1.0, 0.4, 12).unwrap();
        assert_eq!(g.gap, 0.0);
        assert!(g.thin > 0.0);
    }

    fn piece(f: impl Fn(&[C64]) -> Vec<C64> + Send + Sync + 'static, dim_in: usize, dim_out: usize) -> GraphPiece {
        GraphPiece {
            weight: 1.0,
            map: Arc::new(FnMap::new(dim_in, dim_out, move |x: &[C64]| f(x))),
            domain: Region::centered_polydisc(&vec![0.5; dim_in]).unwrap(),
        }
    }

    #[test]
    fn vertical_and_horizontal_pieces() {
        // base C^1, fiber C^1
        let vertical = piece(|u| vec![c(0.2, 0.0), u[0]], 1, 2);
        let h = h_dimension_probe(&[vertical], 1, 6).unwrap();
        assert_eq!(h.dimension, 0);
        let horizontal = piece(|z| vec![z[0], c(0.0, 0.0)], 1, 2);
        assert_eq!(h_dimension_probe(&[horizontal], 1, 6).unwrap().dimension, 1);
        // base C^2, fiber C^2: a section over the base
        let section = piece(|z| vec![z[0], z[1], c(0.0, 0.0), c(0.0, 0.0)], 2, 4);
        let h = h_dimension_probe(&[section], 2, 4).unwrap();
        assert_eq!(h.dimension, 2);
        assert!(h.masses[0] == 0.0 && h.masses[1] == 0.0);
    }

    #[test]
    fn zero_current_is_rejected() {
        assert!(matches!(h_dimension_probe(&[], 1, 4), Err(DensityError::ZeroCurrent)));
        let mut p = piece(|u| vec![c(0.0, 0.0), u[0]], 1, 2);
        p.weight = 0.0;
        assert!(matches!(h_dimension_probe(&[p], 1, 4), Err(DensityError::ZeroCurrent)));
    }

    #[test]
    fn dilated_flat_pencil_is_vertical() {
        let mu = TransverseMeasure::normalized_lebesgue(Region::centered_polydisc(&[1.0]).unwrap(), 6);
        let t = cycle("a1", mu);
        let pieces = normal_dilation_pieces(&t, 64.0, 0.5).unwrap();
        assert_eq!(h_dimension_probe(&pieces, 1, 6).unwrap().dimension, 0);
    }

    #[test]
    fn dilated_shear_flattens() {
        let mu = TransverseMeasure::normalized_lebesgue(Region::centered_polydisc(&[0.75]).unwrap(), 6);
        let t = cycle("a1 + 0.3*a1*z1", mu);
        let share = |lam: f64| {
            let h = h_dimension_probe(&normal_dilation_pieces(&t, lam, 0.5).unwrap(), 1, 6).unwrap();
            h.masses[1] / h.total
        };
        let (s16, s32, s64) = (share(16.0), share(32.0), share(64.0));
        assert!(s16 > s32 && s32 > s64);
        assert!((s16 / s32 - 4.0).abs() < 0.05 && (s32 / s64 - 4.0).abs() < 0.05);
    }
}
