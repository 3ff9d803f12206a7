use std::f64::consts::{PI, TAU};

use super::{NumericsError, Region, RegionKind, C64};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((PI * (i as f64 + 0.75)) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One-coordinate rule: complex nodes with real weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRule {
    pub nodes: Vec<C64>,
    pub weights: Vec<f64>,
}

impl ComplexRule {
    /// Polar rule on the disc `|x - c| <= r`: `radial` Gauss nodes in
    /// `r` (weighted by `r dr`) times `angular` equispaced angles, with the
    /// radial interval split into `panels` equal pieces.
    pub fn disc(center: C64, radius: f64, radial: usize, angular: usize, panels: usize) -> Self {
        let (x, w) = gauss_legendre(radial);
        let mut nodes = Vec::with_capacity(radial * angular * panels);
        let mut weights = Vec::with_capacity(radial * angular * panels);
        let h = radius / panels as f64;
        let dtheta = TAU / angular as f64;
        for p in 0..panels {
            let lo = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                let r = lo + 0.5 * h * (xi + 1.0);
                let wr = 0.5 * h * wi * r * dtheta;
                for k in 0..angular {
                    nodes.push(center + C64::from_polar(r, k as f64 * dtheta));
                    weights.push(wr);
                }
            }
        }
        ComplexRule { nodes, weights }
    }

    /// Tensor Gauss rule on the square `|Re|, |Im| <= half`, each axis split
    /// into `panels` pieces.
    pub fn square(center: C64, half: f64, per_axis: usize, panels: usize) -> Self {
        let (x, w) = gauss_legendre(per_axis);
        let h = 2.0 * half / panels as f64;
        let mut axis = Vec::with_capacity(per_axis * panels);
        for p in 0..panels {
            let lo = -half + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                axis.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
            }
        }
        let mut nodes = Vec::with_capacity(axis.len() * axis.len());
        let mut weights = Vec::with_capacity(axis.len() * axis.len());
        for (u, wu) in &axis {
            for (v, wv) in &axis {
                nodes.push(center + C64::new(*u, *v));
                weights.push(wu * wv);
            }
        }
        ComplexRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor-product quadrature over a [`Region`].
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dim: usize,
    order: usize,
    domain: Region,
    points: Vec<C64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[C64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[C64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    /// Integral of `f` over the domain.
    pub fn integrate<F: Fn(&[C64]) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.iter().map(|(p, w)| w * f(p)).collect();
        pairwise_sum(&terms)
    }

    /// Complex-valued integral of `f` over the domain.
    pub fn integrate_complex<F: Fn(&[C64]) -> C64>(&self, f: F) -> C64 {
        let vals: Vec<C64> = self.iter().map(|(p, w)| f(p) * w).collect();
        let re: Vec<f64> = vals.iter().map(|z| z.re).collect();
        let im: Vec<f64> = vals.iter().map(|z| z.im).collect();
        C64::new(pairwise_sum(&re), pairwise_sum(&im))
    }
}

/// Per-coordinate node counts used by [`gauss_grid`] for a given order.
fn radial_count(order: usize) -> usize {
    order / 2 + 1
}

/// Tensor grid over `domain`, exact for polynomials in `x, x̄` of total
/// degree below `order`.
pub fn gauss_grid(order: usize, domain: &Region) -> Result<QuadratureGrid, NumericsError> {
    composite_grid(order, domain, 1)
}

/// [`gauss_grid`] with every coordinate split into `panels` sub-panels
/// (radially and angularly for discs, per axis for boxes).
pub fn composite_grid(
    order: usize,
    domain: &Region,
    panels: usize,
) -> Result<QuadratureGrid, NumericsError> {
    if order < 2 {
        return Err(NumericsError::OrderTooLow { order, min: 2 });
    }
    let panels = panels.max(1);
    let m = domain.dim();
    let rules: Vec<ComplexRule> = match domain.kind() {
        RegionKind::Polydisc => domain
            .center()
            .iter()
            .zip(domain.radii())
            .map(|(c, r)| ComplexRule::disc(*c, *r, radial_count(order), order * panels, panels))
            .collect(),
        RegionKind::Box => domain
            .center()
            .iter()
            .zip(domain.radii())
            .map(|(c, r)| ComplexRule::square(*c, *r, radial_count(order), panels))
            .collect(),
        RegionKind::Ball if m == 1 => vec![ComplexRule::disc(
            domain.center()[0],
            domain.radii()[0],
            radial_count(order),
            order * panels,
            panels,
        )],
        RegionKind::Ball => {
            return Err(NumericsError::Unsupported(
                "quadrature on balls of dimension above one; use the bounding polydisc with an indicator"
                    .into(),
            ))
        }
    };
    let total: usize = rules.iter().map(ComplexRule::len).product();
    let mut points = Vec::with_capacity(total * m);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; m];
    for _ in 0..total {
        let mut w = 1.0;
        for (j, rule) in rules.iter().enumerate() {
            points.push(rule.nodes[idx[j]]);
            w *= rule.weights[idx[j]];
        }
        weights.push(w);
        for j in (0..m).rev() {
            idx[j] += 1;
            if idx[j] < rules[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(QuadratureGrid {
        dim: m,
        order,
        domain: domain.clone(),
        points,
        weights,
    })
}

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
