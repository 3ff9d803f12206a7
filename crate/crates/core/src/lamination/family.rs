use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::expr::{parse_family, FamilyExpression, MAX_DUAL};
use super::LaminationError;
use crate::numerics::{holo_jacobian, sup_dist, HoloJet, HoloMap, NumericsError, Region, C64};

/// Parameter set of a plaque family, as a subset of `C^d`.
#[derive(Clone)]
pub enum Transversal {
    Region(Region),
    /// Real segment `[lo, hi]` on the real axis of `C`.
    Segment { lo: f64, hi: f64 },
    /// Finite set of parameters.
    Points(Vec<Vec<C64>>),
    /// Image of another transversal under an injective map.
    Image {
        base: Box<Transversal>,
        map: Arc<dyn ParamMap>,
    },
}

impl fmt::Debug for Transversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transversal::Region(r) => f.debug_tuple("Region").field(r).finish(),
            Transversal::Segment { lo, hi } => {
                f.debug_struct("Segment").field("lo", lo).field("hi", hi).finish()
            }
            Transversal::Points(p) => f.debug_tuple("Points").field(p).finish(),
            Transversal::Image { base, .. } => f.debug_struct("Image").field("base", base).finish(),
        }
    }
}

impl Transversal {
    pub fn dim(&self) -> usize {
        match self {
            Transversal::Region(r) => r.dim(),
            Transversal::Segment { .. } => 1,
            Transversal::Points(p) => p.first().map_or(0, Vec::len),
            Transversal::Image { map, .. } => map.dim_out(),
        }
    }

    /// Membership up to `tol` in sup norm.
    pub fn contains(&self, a: &[C64], tol: f64) -> bool {
        match self {
            Transversal::Region(r) => {
                if r.contains(a) {
                    return true;
                }
                // Pull the point towards the center by `tol` and retry.
                let s = sup_dist(a, r.center());
                if s == 0.0 {
                    return false;
                }
                let t = (1.0 - tol / s).max(0.0);
                let p: Vec<C64> = a
                    .iter()
                    .zip(r.center())
                    .map(|(x, c)| c + (x - c) * t)
                    .collect();
                r.contains(&p)
            }
            Transversal::Segment { lo, hi } => {
                a.len() == 1 && a[0].im.abs() <= tol && a[0].re >= lo - tol && a[0].re <= hi + tol
            }
            Transversal::Points(ps) => ps.iter().any(|p| sup_dist(p, a) <= tol),
            Transversal::Image { base, map } => {
                map.inverse(a).is_some_and(|t| base.contains(&t, tol))
            }
        }
    }

    /// Uniform-ish random parameter (uniform for regions and segments,
    /// uniform over the list for point sets).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        match self {
            Transversal::Region(r) => r.sample_uniform(rng),
            Transversal::Segment { lo, hi } => {
                vec![C64::new(lo + (hi - lo) * rng.random::<f64>(), 0.0)]
            }
            Transversal::Points(ps) => ps[rng.random_range(0..ps.len())].clone(),
            Transversal::Image { base, map } => map.forward(&base.sample(rng)),
        }
    }

    /// Deterministic sample of about `n` parameters covering the set.
    pub fn grid(&self, n: usize) -> Vec<Vec<C64>> {
        let n = n.max(2);
        match self {
            Transversal::Segment { lo, hi } => (0..n)
                .map(|i| vec![C64::new(lo + (hi - lo) * i as f64 / (n - 1) as f64, 0.0)])
                .collect(),
            Transversal::Points(ps) => ps.clone(),
            Transversal::Image { base, map } => {
                base.grid(n).iter().map(|t| map.forward(t)).collect()
            }
            Transversal::Region(r) => {
                // Along each coordinate: a real-axis sweep and an
                // imaginary-axis sweep through the center; other
                // coordinates held at the center.
                let per = (n / (2 * r.dim())).max(2);
                let mut out = Vec::new();
                for j in 0..r.dim() {
                    let rad = match r.kind() {
                        crate::numerics::RegionKind::Box => r.radii()[j] * std::f64::consts::SQRT_2,
                        _ => r.radii()[j],
                    };
                    for dir in [C64::new(1.0, 0.0), C64::new(1.0, 1.0) / 2f64.sqrt()] {
                        for i in 0..per {
                            let s = -1.0 + 2.0 * i as f64 / (per - 1) as f64;
                            let mut p = r.center().to_vec();
                            p[j] += dir * (s * rad);
                            if r.contains(&p) {
                                out.push(p);
                            }
                        }
                    }
                }
                out.dedup_by(|a, b| sup_dist(a, b) < 1e-14);
                out
            }
        }
    }
}

/// An injective map between parameter spaces.
pub trait ParamMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn forward(&self, t: &[C64]) -> Vec<C64>;
    /// Preimage, if the point is in the image.
    fn inverse(&self, a: &[C64]) -> Option<Vec<C64>>;
}

/// `t ↦ scale·t + shift`, coordinatewise.
#[derive(Debug, Clone)]
pub struct AffineParamMap {
    pub scale: C64,
    pub shift: Vec<C64>,
}

impl AffineParamMap {
    pub fn scaling(dim: usize, scale: C64) -> Self {
        AffineParamMap {
            scale,
            shift: vec![C64::new(0.0, 0.0); dim],
        }
    }
}

impl ParamMap for AffineParamMap {
    fn dim_in(&self) -> usize {
        self.shift.len()
    }
    fn dim_out(&self) -> usize {
        self.shift.len()
    }
    fn forward(&self, t: &[C64]) -> Vec<C64> {
        t.iter().zip(&self.shift).map(|(x, s)| x * self.scale + s).collect()
    }
    fn inverse(&self, a: &[C64]) -> Option<Vec<C64>> {
        if self.scale.norm() == 0.0 {
            return None;
        }
        Some(a.iter().zip(&self.shift).map(|(x, s)| (x - s) / self.scale).collect())
    }
}

/// A family of holomorphic graphs `z′ ↦ h_a(z′) ∈ C^codim` over the unit
/// polydisc of `C^q`, indexed by parameters in a transversal.
pub trait PlaqueFamily: Send + Sync {
    /// Leaf dimension `q`.
    fn leaf_dim(&self) -> usize;
    fn codim(&self) -> usize;
    fn transversal(&self) -> &Transversal;

    fn param_dim(&self) -> usize {
        self.transversal().dim()
    }

    /// Polydisc radius in `z′` on which every plaque is holomorphic.
    fn holomorphy_radius(&self) -> f64 {
        1.0
    }

    fn eval_into(&self, a: &[C64], z: &[C64], out: &mut [C64]);

    fn eval(&self, a: &[C64], z: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.codim()];
        self.eval_into(a, z, &mut out);
        out
    }

    /// Value and `z′`-Jacobian (row-major `codim × q`). The default uses
    /// the Cauchy circle rule.
    fn jet_into(&self, a: &[C64], z: &[C64], value: &mut [C64], jac: &mut [C64]) {
        let plaque = Plaque { family: self, a };
        match holo_jacobian(&plaque, z, None, 32) {
            Ok(j) => {
                value.copy_from_slice(&j.value);
                jac.copy_from_slice(&j.jacobian);
            }
            Err(_) => {
                self.eval_into(a, z, value);
                jac.iter_mut().for_each(|x| *x = C64::new(f64::NAN, f64::NAN));
            }
        }
    }

    fn jet(&self, a: &[C64], z: &[C64]) -> HoloJet {
        let mut value = vec![C64::new(0.0, 0.0); self.codim()];
        let mut jacobian = vec![C64::new(0.0, 0.0); self.codim() * self.leaf_dim()];
        self.jet_into(a, z, &mut value, &mut jacobian);
        HoloJet {
            value,
            jacobian,
            dim_in: self.leaf_dim(),
        }
    }
}

/// One plaque `z′ ↦ h_a(z′)` seen as a holomorphic map.
pub struct Plaque<'a, F: ?Sized> {
    pub family: &'a F,
    pub a: &'a [C64],
}

impl<F: PlaqueFamily + ?Sized> HoloMap for Plaque<'_, F> {
    fn dim_in(&self) -> usize {
        self.family.leaf_dim()
    }
    fn dim_out(&self) -> usize {
        self.family.codim()
    }
    fn holomorphy_radius(&self) -> f64 {
        self.family.holomorphy_radius()
    }
    fn eval(&self, x: &[C64]) -> Result<Vec<C64>, NumericsError> {
        Ok(self.family.eval(self.a, x))
    }
    fn analytic_jet(&self, x: &[C64]) -> Option<Result<HoloJet, NumericsError>> {
        Some(Ok(self.family.jet(self.a, x)))
    }
}

/// Plaque family given by an expression in `z1..zq` and `a1..ad`.
#[derive(Debug, Clone)]
pub struct ExprFamily {
    expr: FamilyExpression,
    leaf_dim: usize,
    transversal: Transversal,
}

impl ExprFamily {
    pub fn new(
        expr: FamilyExpression,
        leaf_dim: usize,
        transversal: Transversal,
    ) -> Result<Self, LaminationError> {
        if leaf_dim == 0 {
            return Err(LaminationError::Dimension("leaf dimension must be positive".into()));
        }
        if expr.max_z() > leaf_dim {
            return Err(LaminationError::Dimension(format!(
                "expression uses z{} but the leaf dimension is {leaf_dim}",
                expr.max_z()
            )));
        }
        if expr.max_a() > transversal.dim() {
            return Err(LaminationError::Dimension(format!(
                "expression uses a{} but the transversal has dimension {}",
                expr.max_a(),
                transversal.dim()
            )));
        }
        Ok(ExprFamily {
            expr,
            leaf_dim,
            transversal,
        })
    }

    pub fn parse(text: &str, leaf_dim: usize, transversal: Transversal) -> Result<Self, LaminationError> {
        Self::new(parse_family(text)?, leaf_dim, transversal)
    }

    pub fn expression(&self) -> &FamilyExpression {
        &self.expr
    }
}

impl PlaqueFamily for ExprFamily {
    fn leaf_dim(&self) -> usize {
        self.leaf_dim
    }
    fn codim(&self) -> usize {
        self.expr.components.len()
    }
    fn transversal(&self) -> &Transversal {
        &self.transversal
    }
    fn eval_into(&self, a: &[C64], z: &[C64], out: &mut [C64]) {
        for (o, e) in out.iter_mut().zip(&self.expr.components) {
            *o = e.eval(z, a);
        }
    }
    fn jet_into(&self, a: &[C64], z: &[C64], value: &mut [C64], jac: &mut [C64]) {
        let q = self.leaf_dim;
        if q > MAX_DUAL {
            let plaque = Plaque { family: self, a };
            let j = holo_jacobian(&plaque, z, None, 32)
                .expect("leaf point inside the holomorphy radius");
            value.copy_from_slice(&j.value);
            jac.copy_from_slice(&j.jacobian);
            return;
        }
        for (i, e) in self.expr.components.iter().enumerate() {
            let d = e.eval_dual(z, a);
            value[i] = d.v;
            jac[i * q..(i + 1) * q].copy_from_slice(&d.d[..q]);
        }
    }
}

/// A family relabeled through `a = reindex(t)`: `h_a = raw_{reindex⁻¹(a)}`.
pub struct ReindexedFamily {
    raw: Arc<dyn PlaqueFamily>,
    reindex: Arc<dyn ParamMap>,
    transversal: Transversal,
}

impl ReindexedFamily {
    pub fn new(raw: Arc<dyn PlaqueFamily>, reindex: Arc<dyn ParamMap>) -> Self {
        let transversal = Transversal::Image {
            base: Box::new(raw.transversal().clone()),
            map: reindex.clone(),
        };
        ReindexedFamily {
            raw,
            reindex,
            transversal,
        }
    }

    fn raw_param(&self, a: &[C64]) -> Vec<C64> {
        self.reindex
            .inverse(a)
            .unwrap_or_else(|| vec![C64::new(f64::NAN, f64::NAN); self.raw.param_dim()])
    }
}

impl PlaqueFamily for ReindexedFamily {
    fn leaf_dim(&self) -> usize {
        self.raw.leaf_dim()
    }
    fn codim(&self) -> usize {
        self.raw.codim()
    }
    fn transversal(&self) -> &Transversal {
        &self.transversal
    }
    fn holomorphy_radius(&self) -> f64 {
        self.raw.holomorphy_radius()
    }
    fn eval_into(&self, a: &[C64], z: &[C64], out: &mut [C64]) {
        self.raw.eval_into(&self.raw_param(a), z, out)
    }
    fn jet_into(&self, a: &[C64], z: &[C64], value: &mut [C64], jac: &mut [C64]) {
        self.raw.jet_into(&self.raw_param(a), z, value, jac)
    }
}

/// The map `t ↦ f_t(0)` with a numerical inverse.
pub struct CenterMap {
    raw: Arc<dyn PlaqueFamily>,
    /// Sampled `(t, f_t(0))` pairs used to seed the inverse.
    table: Vec<(Vec<C64>, Vec<C64>)>,
}

impl CenterMap {
    fn center(&self, t: &[C64]) -> Vec<C64> {
        let zero = vec![C64::new(0.0, 0.0); self.raw.leaf_dim()];
        self.raw.eval(t, &zero)
    }
}

impl ParamMap for CenterMap {
    fn dim_in(&self) -> usize {
        self.raw.param_dim()
    }
    fn dim_out(&self) -> usize {
        self.raw.codim()
    }
    fn forward(&self, t: &[C64]) -> Vec<C64> {
        self.center(t)
    }
    fn inverse(&self, a: &[C64]) -> Option<Vec<C64>> {
        let (seed, _) = self
            .table
            .iter()
            .min_by(|x, y| sup_dist(&x.1, a).total_cmp(&sup_dist(&y.1, a)))?;
        newton_inverse(|t| self.center(t), a, seed.clone(), self.raw.transversal())
    }
}

/// Solves `f(t) = target` by Newton's method on real coordinates with a
/// finite-difference Jacobian. Real-segment parameters keep `Im t = 0`.
fn newton_inverse<F: Fn(&[C64]) -> Vec<C64>>(
    f: F,
    target: &[C64],
    mut t: Vec<C64>,
    transversal: &Transversal,
) -> Option<Vec<C64>> {
    let real_only = matches!(transversal, Transversal::Segment { .. });
    let p = t.len();
    let nvar = if real_only { p } else { 2 * p };
    let neq = 2 * target.len();
    let flatten = |v: &[C64]| -> Vec<f64> { v.iter().flat_map(|z| [z.re, z.im]).collect() };
    let perturb = |t: &[C64], k: usize, h: f64| -> Vec<C64> {
        let mut s = t.to_vec();
        if real_only {
            s[k].re += h;
        } else if k % 2 == 0 {
            s[k / 2].re += h;
        } else {
            s[k / 2].im += h;
        }
        s
    };
    let scale = 1.0 + target.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    for _ in 0..60 {
        let ft = f(&t);
        let r: Vec<f64> = flatten(&ft)
            .iter()
            .zip(flatten(target))
            .map(|(x, y)| x - y)
            .collect();
        let err = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if err <= 1e-14 * scale {
            return Some(t);
        }
        let h = 1e-7;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(neq, nvar);
        for k in 0..nvar {
            let plus = flatten(&f(&perturb(&t, k, h)));
            let minus = flatten(&f(&perturb(&t, k, -h)));
            for i in 0..neq {
                jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::DVector::from_vec(r);
        let step = jac.svd(true, true).solve(&rhs, 1e-12).ok()?;
        for k in 0..nvar {
            t = perturb(&t, k, -step[k]);
        }
    }
    let ft = f(&t);
    (sup_dist(&ft, target) <= 1e-9 * scale).then_some(t)
}

/// Output of [`center_family`].
pub struct Centered {
    pub family: Arc<dyn PlaqueFamily>,
    /// `t ↦ a`, or `None` when the input was already centered.
    pub reindex: Option<Arc<dyn ParamMap>>,
}

/// Reindexes a family by its center values `a = f_t(0)` so that
/// `h_a(0) = a`. Graphs are unchanged; measures on the old parameters must
/// be pushed forward by `reindex`.
pub fn center_family(raw: Arc<dyn PlaqueFamily>) -> Result<Centered, LaminationError> {
    if raw.param_dim() != raw.codim() {
        return Err(LaminationError::Dimension(format!(
            "parameters of dimension {} cannot be reindexed by centers in C^{}",
            raw.param_dim(),
            raw.codim()
        )));
    }
    let zero = vec![C64::new(0.0, 0.0); raw.leaf_dim()];
    let samples = raw.transversal().grid(64);
    let table: Vec<(Vec<C64>, Vec<C64>)> = samples
        .iter()
        .map(|t| (t.clone(), raw.eval(t, &zero)))
        .collect();
    for (i, (ti, ci)) in table.iter().enumerate() {
        for (tj, cj) in &table[i + 1..] {
            if sup_dist(ci, cj) < 1e-10 && sup_dist(ti, tj) >= 1e-10 {
                return Err(LaminationError::DegenerateTransversal(format!(
                    "parameters {ti:?} and {tj:?} share the center {ci:?}"
                )));
            }
        }
    }
    if table.iter().all(|(t, c)| sup_dist(t, c) <= 1e-12) {
        return Ok(Centered {
            family: raw,
            reindex: None,
        });
    }
    let map: Arc<dyn ParamMap> = Arc::new(CenterMap {
        raw: raw.clone(),
        table,
    });
    Ok(Centered {
        family: Arc::new(ReindexedFamily::new(raw, map.clone())),
        reindex: Some(map),
    })
}

/// A chart with its working radius.
#[derive(Clone)]
pub struct FlowBox {
    pub family: Arc<dyn PlaqueFamily>,
    pub rho: f64,
    pub label: String,
}

impl FlowBox {
    pub fn new(
        family: Arc<dyn PlaqueFamily>,
        rho: f64,
        label: impl Into<String>,
    ) -> Result<Self, LaminationError> {
        if !(rho > 0.0 && rho <= 0.5) {
            return Err(LaminationError::InvalidRadius(rho));
        }
        Ok(FlowBox {
            family,
            rho,
            label: label.into(),
        })
    }
}

impl fmt::Debug for FlowBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowBox")
            .field("label", &self.label)
            .field("rho", &self.rho)
            .field("leaf_dim", &self.family.leaf_dim())
            .field("codim", &self.family.codim())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc() -> Transversal {
        Transversal::Region(Region::centered_polydisc(&[1.0]).unwrap())
    }

    #[test]
    fn expression_family_jet() {
        let f = ExprFamily::parse("a1 + 0.3*a1*z1", 1, disc()).unwrap();
        let a = [C64::new(0.4, 0.2)];
        let z = [C64::new(0.1, -0.3)];
        let j = f.jet(&a, &z);
        assert!((j.entry(0, 0) - a[0] * 0.3).norm() < 1e-15);
        let plaque = Plaque { family: &f, a: &a };
        let c = holo_jacobian(&plaque, &z, None, 16).unwrap();
        assert!((c.entry(0, 0) - j.entry(0, 0)).norm() < 1e-13);
    }

    #[test]
    fn undeclared_variables_are_rejected() {
        assert!(ExprFamily::parse("a2", 1, disc()).is_err());
        assert!(ExprFamily::parse("a1*z2", 1, disc()).is_err());
    }

    #[test]
    fn already_centered_is_identity() {
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse("a1 + a1*z1", 1, disc()).unwrap());
        let c = center_family(f.clone()).unwrap();
        assert!(c.reindex.is_none());
        assert!(Arc::ptr_eq(&c.family, &f));
    }

    #[test]
    fn doubling_centers_are_reindexed() {
        let seg = Transversal::Segment { lo: -0.25, hi: 0.25 };
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse("2*a1", 1, seg).unwrap());
        let c = center_family(f).unwrap();
        let map = c.reindex.unwrap();
        let a = [C64::new(0.3, 0.0)];
        let t = map.inverse(&a).unwrap();
        assert!((t[0] - C64::new(0.15, 0.0)).norm() < 1e-12);
        let z = [C64::new(0.2, 0.1)];
        assert!((c.family.eval(&a, &z)[0] - a[0]).norm() < 1e-12);
        assert!(c.family.transversal().contains(&a, 1e-12));
        assert!(!c.family.transversal().contains(&[C64::new(0.6, 0.0)], 1e-12));
    }

    #[test]
    fn coinciding_centers_are_degenerate() {
        let seg = Transversal::Segment { lo: -0.5, hi: 0.5 };
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse("a1^2 + a1*z1", 1, seg).unwrap());
        assert!(matches!(
            center_family(f),
            Err(LaminationError::DegenerateTransversal(_))
        ));
    }

    #[test]
    fn flow_box_radius() {
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse("a1", 1, disc()).unwrap());
        assert!(FlowBox::new(f.clone(), 0.5, "x").is_ok());
        assert!(FlowBox::new(f, 0.6, "x").is_err());
    }
}
