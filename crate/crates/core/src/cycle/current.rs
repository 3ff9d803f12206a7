use std::sync::Arc;

use super::{form_battery, CycleError, OneForm, TestForm, TransverseMeasure};
use crate::lamination::{FlowBox, ParamMap, Plaque, PlaqueFamily, ReindexedFamily};
use crate::numerics::{gauss_grid, pairwise_sum, sup_dist, trace_mass_graph, Region, C64};

/// A foliated cycle in one chart: `T = ∫ [graph of h_a] dμ(a)`.
#[derive(Clone, Debug)]
pub struct FoliatedCycleLocal {
    pub flow_box: FlowBox,
    pub measure: TransverseMeasure,
}

impl FoliatedCycleLocal {
    /// Checks that the measure lives on the family's transversal.
    pub fn new(flow_box: FlowBox, measure: TransverseMeasure) -> Result<Self, CycleError> {
        let tr = flow_box.family.transversal();
        if let Some(d) = measure.dim() {
            if d != flow_box.family.param_dim() {
                return Err(CycleError::Support(format!(
                    "measure on C^{d} for parameters in C^{}",
                    flow_box.family.param_dim()
                )));
            }
        }
        let mut probes = measure.nodes()?;
        if let TransverseMeasure::Cantor { lo, hi, .. } = &measure {
            probes.push((vec![C64::new(*lo, 0.0)], 1.0));
            probes.push((vec![C64::new(*hi, 0.0)], 1.0));
        }
        if let Some((x, _)) = probes.iter().find(|(x, _)| !tr.contains(x, 1e-9)) {
            return Err(CycleError::Support(format!(
                "measure charges {x:?}, outside the transversal"
            )));
        }
        Ok(FoliatedCycleLocal { flow_box, measure })
    }

    pub fn family(&self) -> &Arc<dyn PlaqueFamily> {
        &self.flow_box.family
    }

    pub fn leaf_dim(&self) -> usize {
        self.flow_box.family.leaf_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.flow_box.family.leaf_dim() + self.flow_box.family.codim()
    }

    /// No atoms in the transverse measure.
    pub fn is_diffuse(&self) -> bool {
        self.measure.is_diffuse()
    }
}

/// `∫_{plaque a} α` for one plaque, with the Gauss grid of `order` on the
/// polydisc containing the cutoff ball.
pub fn pair_plaque<F: PlaqueFamily + ?Sized>(
    family: &F,
    a: &[C64],
    form: &TestForm,
    order: usize,
) -> Result<C64, CycleError> {
    let q = family.leaf_dim();
    let n = q + family.codim();
    let domain = form_domain(form, n, q)?;
    let grid = gauss_grid(order, &domain)?;
    Ok(pair_plaque_on(family, a, form, &grid))
}

fn form_domain(form: &TestForm, n: usize, q: usize) -> Result<Region, CycleError> {
    if form.n != n || form.q != q {
        return Err(CycleError::InvalidForm(format!(
            "({},{})-form on C^{} paired with a current of bidimension ({q},{q}) in C^{n}",
            form.q, form.q, form.n
        )));
    }
    let c = &form.cutoff;
    let reach = c.center.iter().fold(0.0_f64, |m, z| m.max(z.norm())) + c.radius;
    if reach > 1.0 + 1e-12 {
        return Err(CycleError::Support(format!(
            "form support reaches |z'| = {reach}, outside the flow box"
        )));
    }
    Ok(Region::polydisc(c.center.clone(), vec![c.radius; q])?)
}

fn pair_plaque_on<F: PlaqueFamily + ?Sized>(
    family: &F,
    a: &[C64],
    form: &TestForm,
    grid: &crate::numerics::QuadratureGrid,
) -> C64 {
    let q = family.leaf_dim();
    let codim = family.codim();
    let n = q + codim;
    let mut value = vec![C64::new(0.0, 0.0); codim];
    let mut dh = vec![C64::new(0.0, 0.0); codim * q];
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut d = vec![C64::new(0.0, 0.0); n * q];
    for j in 0..q {
        d[j * q + j] = C64::new(1.0, 0.0);
    }
    let scale = 2f64.powi(q as i32);
    let mut re = Vec::with_capacity(grid.len());
    let mut im = Vec::with_capacity(grid.len());
    for (z, w) in grid.iter() {
        if !form.cutoff.inside(z) {
            continue;
        }
        family.jet_into(a, z, &mut value, &mut dh);
        x[..q].copy_from_slice(z);
        x[q..].copy_from_slice(&value);
        d[q * q..].copy_from_slice(&dh);
        let v = form.pullback_density(&x, &d) * (w * scale);
        re.push(v.re);
        im.push(v.im);
    }
    C64::new(pairwise_sum(&re), pairwise_sum(&im))
}

/// `⟨T, α⟩ = ∫ (∫_{plaque a} α) dμ(a)`.
pub fn pair(t: &FoliatedCycleLocal, form: &TestForm, order: usize) -> Result<C64, CycleError> {
    let family = t.family();
    let q = family.leaf_dim();
    let domain = form_domain(form, t.ambient_dim(), q)?;
    let grid = gauss_grid(order, &domain)?;
    t.measure
        .integrate_complex(|a| Ok(pair_plaque_on(family.as_ref(), a, form, &grid)))
}

/// Mass of `T ∧ β^q` in `region` (points of `C^n`, leaf coordinates first).
pub fn trace_mass(t: &FoliatedCycleLocal, region: &Region, order: usize) -> Result<f64, CycleError> {
    let family = t.family();
    let q = family.leaf_dim();
    if region.dim() != t.ambient_dim() {
        return Err(CycleError::Support(format!(
            "region in C^{} for a current in C^{}",
            region.dim(),
            t.ambient_dim()
        )));
    }
    let leaf = Region::centered_polydisc(&vec![1.0; q])?;
    t.measure.integrate(|a| {
        let plaque = Plaque {
            family: family.as_ref(),
            a,
        };
        Ok(trace_mass_graph(&plaque, &leaf, region, order)?)
    })
}

/// `|⟨T, dγ⟩|` for a compactly supported 1-form on a current of leaf
/// dimension 1; zero up to quadrature error for closed currents.
pub fn stokes_residual(t: &FoliatedCycleLocal, gamma: &OneForm, order: usize) -> Result<f64, CycleError> {
    if t.leaf_dim() != 1 {
        return Err(CycleError::Unsupported(
            "closedness residuals for leaf dimension above one".into(),
        ));
    }
    Ok(pair(t, &gamma.d11()?, order)?.norm())
}

/// Atomic and diffuse parts of a transverse measure.
#[derive(Debug, Clone)]
pub struct AtomSplit {
    pub diffuse: TransverseMeasure,
    pub atoms: Vec<(Vec<C64>, f64)>,
}

/// Separates the atoms (compact leaves) from the diffuse part.
pub fn atom_split(t: &FoliatedCycleLocal) -> AtomSplit {
    split_measure(&t.measure)
}

fn split_measure(mu: &TransverseMeasure) -> AtomSplit {
    match mu {
        TransverseMeasure::Atomic(atoms) => AtomSplit {
            diffuse: TransverseMeasure::zero(),
            atoms: atoms.clone(),
        },
        TransverseMeasure::Density { .. } | TransverseMeasure::Cantor { .. } => AtomSplit {
            diffuse: mu.clone(),
            atoms: Vec::new(),
        },
        TransverseMeasure::Mixed(parts) => {
            let mut diffuse = Vec::new();
            let mut atoms = Vec::new();
            for p in parts {
                let s = split_measure(p);
                atoms.extend(s.atoms);
                if !matches!(&s.diffuse, TransverseMeasure::Atomic(a) if a.is_empty()) {
                    diffuse.push(s.diffuse);
                }
            }
            let diffuse = match diffuse.len() {
                0 => TransverseMeasure::zero(),
                1 => diffuse.pop().unwrap(),
                _ => TransverseMeasure::Mixed(diffuse),
            };
            AtomSplit { diffuse, atoms }
        }
        TransverseMeasure::Pushforward { base, map } => {
            let s = split_measure(base);
            AtomSplit {
                diffuse: if matches!(&s.diffuse, TransverseMeasure::Atomic(a) if a.is_empty()) {
                    s.diffuse
                } else {
                    s.diffuse.pushforward(map.clone())
                },
                atoms: s.atoms.into_iter().map(|(x, w)| (map.forward(&x), w)).collect(),
            }
        }
    }
}

/// Compares `T` with the cycle obtained by relabeling its plaques through
/// `relabel` (plaque `s` of the new family is plaque `relabel⁻¹(s)` of the
/// old one) and carrying the measure `pushed`. Returns
/// `max |⟨T,α⟩ − ⟨T′,α⟩| / (1 + |⟨T,α⟩|)` over a battery of 20 forms.
pub fn holonomy_check(
    t: &FoliatedCycleLocal,
    relabel: Arc<dyn ParamMap>,
    pushed: TransverseMeasure,
    order: usize,
) -> Result<f64, CycleError> {
    let family = t.family().clone();
    let samples = family.transversal().grid(64);
    let images: Vec<Vec<C64>> = samples.iter().map(|s| relabel.forward(s)).collect();
    for (i, (s, img)) in samples.iter().zip(&images).enumerate() {
        let back = relabel
            .inverse(img)
            .ok_or_else(|| CycleError::NonInjective(format!("{s:?} has no preimage round trip")))?;
        if sup_dist(&back, s) > 1e-9 {
            return Err(CycleError::NonInjective(format!(
                "{s:?} maps back to {back:?}"
            )));
        }
        if let Some(other) = images[i + 1..]
            .iter()
            .zip(&samples[i + 1..])
            .find(|(o, t2)| sup_dist(o, img) < 1e-10 && sup_dist(t2, s) >= 1e-10)
        {
            return Err(CycleError::NonInjective(format!(
                "{s:?} and {:?} share the image {img:?}",
                other.1
            )));
        }
    }
    let moved: Arc<dyn PlaqueFamily> = Arc::new(ReindexedFamily::new(family.clone(), relabel));
    let fb = FlowBox {
        family: moved,
        ..t.flow_box.clone()
    };
    let t2 = FoliatedCycleLocal {
        flow_box: fb,
        measure: pushed,
    };
    let n = t.ambient_dim();
    let q = t.leaf_dim();
    let mut worst = 0.0_f64;
    for form in form_battery(n, q, 0.9)? {
        let before = pair(t, &form, order)?;
        let after = pair(&t2, &form, order)?;
        worst = worst.max((before - after).norm() / (1.0 + before.norm()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::cycle::{Cutoff, Poly};
    use crate::lamination::{AffineParamMap, ExprFamily, Transversal};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn flat(measure: TransverseMeasure, tr: Transversal) -> FoliatedCycleLocal {
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse("a1", 1, tr).unwrap());
        FoliatedCycleLocal::new(FlowBox::new(f, 0.5, "flat").unwrap(), measure).unwrap()
    }

    fn disc_tr(r: f64) -> Transversal {
        Transversal::Region(Region::centered_polydisc(&[r]).unwrap())
    }

    fn half_disc_area() -> TestForm {
        let cut = Cutoff {
            center: vec![c(0.0, 0.0)],
            radius: 0.5,
            smooth: false,
        };
        TestForm::leaf_area(2, 1, cut, Poly::constant(2, c(1.0, 0.0))).unwrap()
    }

    #[test]
    fn pairing_with_leaf_area() {
        let t = flat(TransverseMeasure::dirac(vec![c(0.0, 0.0)]), disc_tr(1.0));
        let v = pair(&t, &half_disc_area(), 8).unwrap();
        assert!((v - c(PI / 2.0, 0.0)).norm() < 1e-12);
        let leb = TransverseMeasure::normalized_lebesgue(Region::centered_polydisc(&[1.0]).unwrap(), 8);
        let t = flat(leb, disc_tr(1.0));
        let v = pair(&t, &half_disc_area(), 8).unwrap();
        assert!((v - c(PI / 2.0, 0.0)).norm() < 1e-12);
        let zero = TestForm::zero(2, 1, half_disc_area().cutoff).unwrap();
        assert_eq!(pair(&t, &zero, 8).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn trace_mass_of_flat_disc() {
        let t = flat(TransverseMeasure::dirac(vec![c(0.0, 0.0)]), disc_tr(1.0));
        let region = Region::centered_polydisc(&[0.5, 0.5]).unwrap();
        assert!((trace_mass(&t, &region, 8).unwrap() - PI / 2.0).abs() < 1e-12);
        let away = Region::polydisc(vec![c(0.0, 0.0), c(0.8, 0.0)], vec![0.5, 0.1]).unwrap();
        assert_eq!(trace_mass(&t, &away, 8).unwrap(), 0.0);
    }

    #[test]
    fn measure_outside_transversal_is_rejected() {
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse("a1", 1, disc_tr(0.5)).unwrap());
        let fb = FlowBox::new(f, 0.5, "x").unwrap();
        assert!(FoliatedCycleLocal::new(fb, TransverseMeasure::dirac(vec![c(0.8, 0.0)])).is_err());
    }

    #[test]
    fn split_of_mixture() {
        let leb = TransverseMeasure::Density {
            support: Region::centered_polydisc(&[1.0]).unwrap(),
            weight: crate::cycle::DensityFn::Constant(0.7 / PI),
            order: 8,
        };
        let mix = TransverseMeasure::Mixed(vec![
            TransverseMeasure::atomic(vec![(vec![c(0.0, 0.0)], 0.3)]).unwrap(),
            leb,
        ]);
        let t = flat(mix, disc_tr(1.0));
        let s = atom_split(&t);
        assert_eq!(s.atoms, vec![(vec![c(0.0, 0.0)], 0.3)]);
        assert!((s.diffuse.total_mass().unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn identity_relabeling_is_exact() {
        let leb = TransverseMeasure::normalized_lebesgue(Region::centered_polydisc(&[1.0]).unwrap(), 6);
        let t = flat(leb.clone(), disc_tr(1.0));
        let id: Arc<dyn ParamMap> = Arc::new(AffineParamMap::scaling(1, c(1.0, 0.0)));
        let pushed = leb.pushforward(id.clone());
        assert_eq!(holonomy_check(&t, id, pushed, 8).unwrap(), 0.0);
    }
}
