use std::f64::consts::TAU;

use super::{sup_norm, NumericsError, C64};

/// Value and complex Jacobian of a holomorphic map at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloJet {
    pub value: Vec<C64>,
    /// Row-major `N × m`: `jacobian[i * m + j] = ∂f_i/∂x_j`.
    pub jacobian: Vec<C64>,
    pub dim_in: usize,
}

impl HoloJet {
    pub fn dim_out(&self) -> usize {
        self.value.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.jacobian[i * self.dim_in + j]
    }
}

/// A map `C^m → C^N`, holomorphic on the polydisc `‖x‖∞ < holomorphy_radius`.
pub trait HoloMap: Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;

    fn holomorphy_radius(&self) -> f64 {
        f64::INFINITY
    }

    fn eval(&self, x: &[C64]) -> Result<Vec<C64>, NumericsError>;

    /// Closed-form jet, when the map can provide one.
    fn analytic_jet(&self, _x: &[C64]) -> Option<Result<HoloJet, NumericsError>> {
        None
    }
}

/// A [`HoloMap`] built from a closure.
pub struct FnMap<F> {
    dim_in: usize,
    dim_out: usize,
    radius: f64,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[C64]) -> Vec<C64> + Sync,
{
    pub fn new(dim_in: usize, dim_out: usize, f: F) -> Self {
        FnMap {
            dim_in,
            dim_out,
            radius: f64::INFINITY,
            f,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }
}

impl<F> HoloMap for FnMap<F>
where
    F: Fn(&[C64]) -> Vec<C64> + Sync,
{
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn holomorphy_radius(&self) -> f64 {
        self.radius
    }
    fn eval(&self, x: &[C64]) -> Result<Vec<C64>, NumericsError> {
        Ok((self.f)(x))
    }
}

/// Circle radius used when the caller does not pick one: 0.4 of the
/// distance to the holomorphy boundary, or 0.4 for entire maps.
pub fn default_circle_radius(limit: f64, point: &[C64]) -> f64 {
    if limit.is_finite() {
        0.4 * (limit - sup_norm(point))
    } else {
        0.4
    }
}

/// Jacobian by the trapezoid rule on Cauchy's integral,
/// `∂_j f(p) = (1/N) Σ_k (f(p + r ω_k e_j) − f(p)) ω̄_k / r`.
pub fn holo_jacobian<M: HoloMap + ?Sized>(
    f: &M,
    point: &[C64],
    circle_radius: Option<f64>,
    nodes: usize,
) -> Result<HoloJet, NumericsError> {
    let m = f.dim_in();
    if point.len() != m {
        return Err(NumericsError::Dimension {
            expected: m,
            got: point.len(),
        });
    }
    if nodes < 8 {
        return Err(NumericsError::OrderTooLow {
            order: nodes,
            min: 8,
        });
    }
    let limit = f.holomorphy_radius();
    let r = circle_radius.unwrap_or_else(|| default_circle_radius(limit, point));
    if !(r > 0.0) || sup_norm(point) + r >= limit {
        return Err(NumericsError::Domain { radius: r, limit });
    }
    let value = f.eval(point)?;
    let n_out = value.len();
    let mut jacobian = vec![C64::new(0.0, 0.0); n_out * m];
    let roots: Vec<C64> = (0..nodes)
        .map(|k| C64::from_polar(1.0, TAU * k as f64 / nodes as f64))
        .collect();
    let mut shifted = point.to_vec();
    for j in 0..m {
        let mut acc = vec![C64::new(0.0, 0.0); n_out];
        for w in &roots {
            shifted[j] = point[j] + w * r;
            let fv = f.eval(&shifted)?;
            for (a, (v, v0)) in acc.iter_mut().zip(fv.iter().zip(&value)) {
                *a += (v - v0) * w.conj();
            }
        }
        shifted[j] = point[j];
        let scale = 1.0 / (nodes as f64 * r);
        for (i, a) in acc.into_iter().enumerate() {
            jacobian[i * m + j] = a * scale;
        }
    }
    Ok(HoloJet {
        value,
        jacobian,
        dim_in: m,
    })
}

/// Jet of `f` at `point`: the closed form when available, else the
/// 32-node Cauchy rule at the default radius.
pub fn jet<M: HoloMap + ?Sized>(f: &M, point: &[C64]) -> Result<HoloJet, NumericsError> {
    match f.analytic_jet(point) {
        Some(j) => j,
        None => holo_jacobian(f, point, None, 32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_derivative() {
        let f = FnMap::new(1, 1, |x: &[C64]| vec![x[0] * x[0]]);
        let j = holo_jacobian(&f, &[c(0.3, 0.0)], Some(0.1), 16).unwrap();
        assert!((j.entry(0, 0) - c(0.6, 0.0)).norm() < 1e-15);
        assert!((j.value[0] - c(0.09, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn constant_has_zero_jacobian() {
        let f = FnMap::new(2, 3, |_: &[C64]| vec![c(1.5, -2.0); 3]);
        let j = holo_jacobian(&f, &[c(0.1, 0.2), c(-0.3, 0.0)], None, 8).unwrap();
        assert!(j.jacobian.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn product_jacobian() {
        let f = FnMap::new(2, 1, |x: &[C64]| vec![x[0] * x[1]]);
        let j = holo_jacobian(&f, &[c(1.0, 0.0), c(2.0, 0.0)], None, 16).unwrap();
        assert!((j.entry(0, 0) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((j.entry(0, 1) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn polynomial_exact_below_node_count() {
        // f(z) = z^7 - 2iz^3 + 1, f' = 7z^6 - 6iz^2
        let f = FnMap::new(1, 1, |x: &[C64]| {
            vec![x[0].powu(7) - c(0.0, 2.0) * x[0].powu(3) + 1.0]
        });
        let z = c(0.2, -0.4);
        let exact = z.powu(6) * 7.0 - c(0.0, 6.0) * z * z;
        let j = holo_jacobian(&f, &[z], Some(0.3), 8).unwrap();
        assert!((j.entry(0, 0) - exact).norm() <= 1e-12 * exact.norm());
    }

    #[test]
    fn radius_beyond_domain_is_rejected() {
        let f = FnMap::new(1, 1, |x: &[C64]| vec![x[0]]).with_radius(1.0);
        let e = holo_jacobian(&f, &[c(0.8, 0.0)], Some(0.3), 16).unwrap_err();
        assert!(matches!(e, NumericsError::Domain { .. }));
        assert!(holo_jacobian(&f, &[c(0.8, 0.0)], None, 16).is_ok());
    }

    #[test]
    fn too_few_nodes() {
        let f = FnMap::new(1, 1, |x: &[C64]| vec![x[0]]);
        assert!(holo_jacobian(&f, &[c(0.0, 0.0)], None, 4).is_err());
    }
}
