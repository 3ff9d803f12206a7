use std::sync::Arc;

use super::DensityError;
use crate::lamination::PlaqueFamily;
use crate::numerics::{factorial, gauss_grid, gram_det, pairwise_sum, sup_dist, sup_norm, QuadratureGrid, Region, C64};

/// The self-product `X × X` in coordinates `(z, w) = (x, y − x)` adapted to
/// the diagonal. Plaque `α = (α₁, α₂)` of the product lamination is the
/// graph `(z′, w′) ↦ (f_α, g_α)` with `f_α(z′, w′) = h_{α₁}(z′)` and
/// `g_α(z′, w′) = h_{α₁+α₂}(z′ + w′) − h_{α₁}(z′)`.
#[derive(Clone)]
pub struct ProductFamily {
    pub base: Arc<dyn PlaqueFamily>,
    pub rho: f64,
}

impl std::fmt::Debug for ProductFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProductFamily")
            .field("leaf_dim", &self.base.leaf_dim())
            .field("codim", &self.base.codim())
            .field("rho", &self.rho)
            .finish()
    }
}

impl ProductFamily {
    pub fn leaf_dim(&self) -> usize {
        self.base.leaf_dim()
    }

    pub fn codim(&self) -> usize {
        self.base.codim()
    }

    /// Dimension of the ambient space of one factor.
    pub fn factor_dim(&self) -> usize {
        self.leaf_dim() + self.codim()
    }

    /// `f_α(z′, w′)`; `α₂` and `w′` are accepted and ignored.
    pub fn f(&self, alpha1: &[C64], _alpha2: &[C64], z: &[C64], _w: &[C64]) -> Vec<C64> {
        self.base.eval(alpha1, z)
    }

    pub fn g(&self, alpha1: &[C64], alpha2: &[C64], z: &[C64], w: &[C64]) -> Vec<C64> {
        let b: Vec<C64> = alpha1.iter().zip(alpha2).map(|(x, y)| x + y).collect();
        let zeta: Vec<C64> = z.iter().zip(w).map(|(x, y)| x + y).collect();
        let hb = self.base.eval(&b, &zeta);
        let ha = self.base.eval(alpha1, z);
        hb.iter().zip(&ha).map(|(x, y)| x - y).collect()
    }
}

/// Builds the product family and checks its structure on a `16³` sample
/// (16 values of `α₁`, 16 of `α₂`, 16 leaf points).
pub fn build_product(h: Arc<dyn PlaqueFamily>, rho: f64) -> Result<ProductFamily, DensityError> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(DensityError::InvalidRadius(rho));
    }
    if h.param_dim() != h.codim() {
        return Err(DensityError::Invariant {
            property: "recovery",
            detail: format!(
                "parameters in C^{} cannot be read off plaques in C^{}",
                h.param_dim(),
                h.codim()
            ),
        });
    }
    let p = ProductFamily { base: h, rho };
    let q = p.leaf_dim();
    let params = p.base.transversal().grid(16);
    let zero = vec![C64::new(0.0, 0.0); q];
    let leaf: Vec<(Vec<C64>, Vec<C64>)> = (0..16)
        .map(|k| {
            let t = k as f64 / 16.0;
            let z = (0..q)
                .map(|j| C64::from_polar(rho * (0.2 + 0.75 * t), std::f64::consts::TAU * (t + 0.37 * j as f64)))
                .collect();
            let w = (0..q)
                .map(|j| C64::from_polar(rho * (0.95 - 0.7 * t), std::f64::consts::TAU * (0.61 * t + 0.5 + 0.21 * j as f64)))
                .collect();
            (z, w)
        })
        .collect();
    for a1 in &params {
        let alpha2s: Vec<Vec<C64>> = params
            .iter()
            .map(|b| b.iter().zip(a1).map(|(x, y)| x - y).collect())
            .collect();
        let f00 = p.f(a1, &alpha2s[0], &zero, &zero);
        for a2 in &alpha2s {
            let g00 = p.g(a1, a2, &zero, &zero);
            let scale = 1.0 + sup_norm(a1) + sup_norm(a2);
            if sup_dist(&f00, a1) > 1e-10 * scale || sup_dist(&g00, a2) > 1e-10 * scale {
                return Err(DensityError::Invariant {
                    property: "recovery",
                    detail: format!(
                        "alpha = ({a1:?}, {a2:?}) but (f, g)(0, 0) = ({f00:?}, {g00:?})"
                    ),
                });
            }
            let diagonal = sup_norm(a2) == 0.0;
            for (z, w) in &leaf {
                let f = p.f(a1, a2, z, w);
                let f_ref = p.f(a1, &alpha2s[0], z, w);
                if f != f_ref {
                    return Err(DensityError::Invariant {
                        property: "f depends only on alpha1",
                        detail: format!("f changes with alpha2 at alpha1 = {a1:?}, z' = {z:?}"),
                    });
                }
                let g0 = sup_norm(&p.g(a1, a2, z, &zero));
                if diagonal && g0 != 0.0 {
                    return Err(DensityError::Invariant {
                        property: "g vanishes on the diagonal",
                        detail: format!("g(z', 0) = {g0} for alpha2 = 0 at z' = {z:?}"),
                    });
                }
                if !diagonal && g0 == 0.0 {
                    return Err(DensityError::Invariant {
                        property: "g vanishes on the diagonal",
                        detail: format!("g(z', 0) = 0 for alpha2 = {a2:?} at z' = {z:?}"),
                    });
                }
            }
        }
    }
    Ok(p)
}

/// Quadrature grid for rescaled graph masses at one `λ` and region `K`.
///
/// Points of `C^{2n}` are ordered `(z′, z″, w′, w″)`; the grid lives on the
/// `(z′, w′)` polydisc `{‖z′‖ < ρ, ‖w′‖ < λρ}` shrunk to the shadow of `K`
/// where `K` is centered in those coordinates.
#[derive(Debug, Clone)]
pub struct RescaledGrid {
    pub lambda: f64,
    pub region: Region,
    grid: QuadratureGrid,
}

impl RescaledGrid {
    pub fn new(p: &ProductFamily, lambda: f64, region: &Region, order: usize) -> Result<Self, DensityError> {
        let q = p.leaf_dim();
        let n = p.factor_dim();
        if region.dim() != 2 * n {
            return Err(DensityError::InvalidInput(format!(
                "region in C^{} for a product of two copies of C^{n}",
                region.dim()
            )));
        }
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(DensityError::InvalidInput(format!("dilation {lambda} must be a real number >= 1")));
        }
        let shadow = region.bounding_polydisc();
        let mut radii = Vec::with_capacity(2 * q);
        for (block, cap) in [(0, p.rho), (n, lambda * p.rho)] {
            for j in block..block + q {
                let r = if shadow.center()[j].norm() <= 1e-15 {
                    cap.min(shadow.radii()[j])
                } else {
                    cap
                };
                radii.push(r);
            }
        }
        let domain = Region::polydisc(vec![C64::new(0.0, 0.0); 2 * q], radii)?;
        Ok(RescaledGrid {
            lambda,
            region: region.clone(),
            grid: gauss_grid(order, &domain)?,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Mass in `K` of `(A_λ)_*[Γ_α]`, the plaque `α` of the product lamination
/// pushed forward by `A_λ(z, w) = (z, λw)`; this is the graph
/// `(z′, w′) ↦ (f_α(z′, w′/λ), λ·g_α(z′, w′/λ))`.
pub fn rescaled_graph_mass(
    p: &ProductFamily,
    alpha1: &[C64],
    alpha2: &[C64],
    lambda: f64,
    region: &Region,
    order: usize,
) -> Result<f64, DensityError> {
    let grid = RescaledGrid::new(p, lambda, region, order)?;
    Ok(rescaled_mass_on(p, alpha1, alpha2, &grid))
}

/// [`rescaled_graph_mass`] on a prepared grid.
pub fn rescaled_mass_on(p: &ProductFamily, alpha1: &[C64], alpha2: &[C64], grid: &RescaledGrid) -> f64 {
    let q = p.leaf_dim();
    let c = p.codim();
    let n = q + c;
    let lam = grid.lambda;
    let b: Vec<C64> = alpha1.iter().zip(alpha2).map(|(x, y)| x + y).collect();
    let zero = C64::new(0.0, 0.0);
    let mut ha = vec![zero; c];
    let mut dha = vec![zero; c * q];
    let mut hb = vec![zero; c];
    let mut dhb = vec![zero; c * q];
    let mut zeta = vec![zero; q];
    let mut point = vec![zero; 2 * n];
    // rows (f, λg), columns (z′, w′)
    let mut jac = vec![zero; 2 * c * 2 * q];
    let mut last_z: Option<Vec<C64>> = None;
    let mut terms = Vec::with_capacity(grid.len());
    for (x, wt) in grid.grid.iter() {
        let (z, w) = x.split_at(q);
        if last_z.as_deref() != Some(z) {
            p.base.jet_into(alpha1, z, &mut ha, &mut dha);
            last_z = Some(z.to_vec());
        }
        for j in 0..q {
            zeta[j] = z[j] + w[j] / lam;
        }
        p.base.jet_into(&b, &zeta, &mut hb, &mut dhb);
        point[..q].copy_from_slice(z);
        point[q..n].copy_from_slice(&ha);
        point[n..n + q].copy_from_slice(w);
        for r in 0..c {
            point[n + q + r] = (hb[r] - ha[r]) * lam;
        }
        if !grid.region.contains(&point) {
            continue;
        }
        for r in 0..c {
            let top = r * 2 * q;
            let bot = (c + r) * 2 * q;
            for j in 0..q {
                jac[top + j] = dha[r * q + j];
                jac[top + q + j] = zero;
                jac[bot + j] = (dhb[r * q + j] - dha[r * q + j]) * lam;
                jac[bot + q + j] = dhb[r * q + j];
            }
        }
        terms.push(wt * gram_det(&jac, 2 * c, 2 * q));
    }
    factorial(2 * q) * 4f64.powi(q as i32) * pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::lamination::{ExprFamily, Transversal};
    use crate::numerics::{trace_mass_graph, FnMap};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn family(text: &str) -> Arc<dyn PlaqueFamily> {
        let tr = Transversal::Region(Region::centered_polydisc(&[0.5]).unwrap());
        Arc::new(ExprFamily::parse(text, 1, tr).unwrap())
    }

    #[test]
    fn flat_pencil_coordinates() {
        let p = build_product(family("a1"), 0.5).unwrap();
        let (a1, a2) = ([c(0.1, 0.2)], [c(-0.3, 0.05)]);
        let (z, w) = ([c(0.2, -0.1)], [c(0.1, 0.3)]);
        assert_eq!(p.f(&a1, &a2, &z, &w), a1.to_vec());
        assert!(sup_dist(&p.g(&a1, &a2, &z, &w), &a2) < 1e-16);
    }

    #[test]
    fn shear_coordinates_match_algebra() {
        let kappa = 0.3;
        let p = build_product(family("a1 + 0.3*a1*z1"), 0.5).unwrap();
        for (a1, a2, z, w) in [
            (c(0.1, 0.2), c(-0.3, 0.05), c(0.2, -0.1), c(0.1, 0.3)),
            (c(-0.4, 0.0), c(0.0, 0.6), c(0.0, 0.45), c(-0.3, 0.0)),
        ] {
            let expect = a2 * (1.0 + kappa * (z + w)) + kappa * a1 * w;
            let got = p.g(&[a1], &[a2], &[z], &[w])[0];
            assert!((got - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_uncentered_family() {
        let err = build_product(family("a1 + 0.1"), 0.5).unwrap_err();
        assert!(matches!(err, DensityError::Invariant { property: "recovery", .. }), "{err}");
        assert!(matches!(build_product(family("a1"), 0.6), Err(DensityError::InvalidRadius(_))));
    }

    fn k_half() -> Region {
        Region::centered_polydisc(&[0.5; 4]).unwrap()
    }

    #[test]
    fn flat_plaque_mass() {
        let p = build_product(family("a1"), 0.5).unwrap();
        for lam in [1.0, 3.0, 64.0] {
            let m = rescaled_graph_mass(&p, &[c(0.0, 0.0)], &[c(0.0, 0.0)], lam, &k_half(), 4).unwrap();
            assert!((m - PI * PI / 2.0).abs() < 1e-12, "{m}");
        }
        let m = rescaled_graph_mass(&p, &[c(0.0, 0.0)], &[c(0.1, 0.0)], 8.0, &k_half(), 4).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn diagonal_plaques_ignore_dilation() {
        let p = build_product(family("a1 + 0.3*a1*z1"), 0.5).unwrap();
        let a1 = [c(0.2, -0.1)];
        let m1 = rescaled_graph_mass(&p, &a1, &[c(0.0, 0.0)], 1.0, &k_half(), 6).unwrap();
        for lam in [2.0, 16.0] {
            let m = rescaled_graph_mass(&p, &a1, &[c(0.0, 0.0)], lam, &k_half(), 6).unwrap();
            assert!((m - m1).abs() < 1e-10 * m1);
        }
    }

    #[test]
    fn agrees_with_generic_graph_mass() {
        let p = build_product(family("a1 + 0.3*a1*z1"), 0.5).unwrap();
        let (a1, a2, lam) = (c(0.2, -0.1), c(0.01, 0.02), 3.0);
        let base = p.base.clone();
        let map = FnMap::new(2, 2, move |x: &[C64]| {
            let (z, w) = (x[0], x[1] / lam);
            let ha = base.eval(&[a1], &[z])[0];
            let hb = base.eval(&[a1 + a2], &[z + w])[0];
            vec![ha, (hb - ha) * lam]
        });
        // generic routine orders points (z′, w′, z″, w″)
        let k = Region::centered_polydisc(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        let domain = Region::centered_polydisc(&[0.5, 0.5 * lam]).unwrap();
        let generic = trace_mass_graph(&map, &domain, &k, 6).unwrap();
        let special = rescaled_graph_mass(&p, &[a1], &[a2], lam, &k, 6).unwrap();
        assert!((generic - special).abs() < 1e-9 * generic, "{generic} vs {special}");
    }
}
