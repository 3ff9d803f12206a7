use std::f64::consts::PI;
use std::sync::Arc;

use lamina_core::cohomology::{directedness_residual, ext_wedge, hermitian_to_ext, HermitianClass};
use lamina_core::cycle::{
    diagonal_mass, holonomy_check, product_measure, stokes_residual, trace_mass, Cutoff, FoliatedCycleLocal, OneForm,
    Poly, TransverseMeasure,
};
use lamina_core::density::{build_product, fit_inequality, slice_invariance_check};
use lamina_core::lamination::{AffineParamMap, ExprFamily, FlowBox, PlaqueFamily, Transversal};
use lamina_core::numerics::{gauss_legendre, Region};
use lamina_core::scenarios::find_scenario;
use lamina_core::C64;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn disc(r: f64) -> Region {
    Region::centered_polydisc(&[r]).unwrap()
}

fn pencil(mu: TransverseMeasure) -> FoliatedCycleLocal {
    let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse("a1", 1, Transversal::Region(disc(1.0))).unwrap());
    FoliatedCycleLocal::new(FlowBox::new(f, 0.5, "pencil").unwrap(), mu).unwrap()
}

fn bump_form(u: Vec<Poly>) -> OneForm {
    let cutoff = Cutoff {
        center: vec![c(0.0)],
        radius: 0.9,
        smooth: true,
    };
    OneForm::real(2, cutoff, u).unwrap()
}

#[test]
fn plaques_annihilate_their_normal_direction() {
    let t = pencil(TransverseMeasure::normalized_lebesgue(disc(0.5), 12));
    let normal = directedness_residual(&t, &[c(0.0), c(1.0)], 12).unwrap();
    assert!(normal <= 1e-8, "{normal}");
    let along = directedness_residual(&t, &[c(1.0), c(0.0)], 12).unwrap();
    let unit_box = Region::centered_polydisc(&[1.0, 1.0]).unwrap();
    let mass = trace_mass(&t, &unit_box, 12).unwrap();
    assert!(along > 0.0);
    assert!((along - mass).abs() < 1e-6 * mass, "{along} vs {mass}");
    let empty = pencil(TransverseMeasure::zero());
    assert_eq!(directedness_residual(&empty, &[c(1.0), c(0.0)], 12).unwrap(), 0.0);
}

#[test]
fn stokes_residual_vanishes_and_converges() {
    let t = find_scenario("shear").unwrap().cycle(16).unwrap();
    let zero = bump_form(vec![Poly::zero(2), Poly::zero(2)]);
    assert_eq!(stokes_residual(&t, &zero, 8).unwrap(), 0.0);
    let gamma = bump_form(vec![Poly::var(2, 1), Poly::var_bar(2, 0)]);
    let coarse = stokes_residual(&t, &gamma, 4).unwrap();
    let fine = stokes_residual(&t, &gamma, 8).unwrap();
    let finest = stokes_residual(&t, &gamma, 24).unwrap();
    // already at roundoff for low orders: refinement must not grow it
    assert!(fine <= coarse.max(1e-15), "{coarse} -> {fine}");
    assert!(finest <= 1e-6);
}

#[test]
fn relabeling_needs_the_pushed_measure() {
    let mu = TransverseMeasure::normalized_lebesgue(disc(0.4), 12);
    let t = pencil(mu.clone());
    let double = Arc::new(AffineParamMap::scaling(1, c(2.0)));
    let pushed = mu.clone().pushforward(double.clone());
    let good = holonomy_check(&t, double.clone(), pushed, 12).unwrap();
    assert!(good <= 1e-8, "{good}");
    let bad = holonomy_check(&t, double, mu, 12).unwrap();
    assert!(bad > 1e-2, "{bad}");
}

/// `P(|a − b| ≤ ε)` for independent uniform points of the unit disc, from
/// the lens area `A(d)` of two unit discs at distance `d`.
fn lens_oracle(eps: f64) -> f64 {
    let (x, w) = gauss_legendre(64);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let d = eps * (xi + 1.0) / 2.0;
            let lens = 2.0 * (d / 2.0).acos() - d / 2.0 * (4.0 - d * d).sqrt();
            wi * eps / 2.0 * 2.0 * d * lens / PI
        })
        .sum()
}

#[test]
fn lebesgue_diagonal_scales_quadratically() {
    let pm = product_measure(&TransverseMeasure::normalized_lebesgue(disc(1.0), 16));
    let eps = [0.5, 0.25, 0.125];
    let m: Vec<_> = eps
        .iter()
        .map(|e| diagonal_mass(&pm, *e, 1 << 16, 5).unwrap())
        .collect();
    for (e, d) in eps.iter().zip(&m) {
        let exact = lens_oracle(*e);
        assert!((d.value - exact).abs() <= 4.0 * d.stderr, "{e}: {} vs {exact}", d.value);
    }
    // ε² up to a boundary correction of relative order ε
    let last = m[2].value / m[1].value;
    assert!((last - 0.25).abs() < 0.04, "{last}");
    assert!(lens_oracle(0.01) / 1e-4 > 0.99);
}

#[test]
fn two_atom_product_enumeration() {
    let mu = TransverseMeasure::atomic(vec![(vec![c(0.25)], 0.5), (vec![c(-0.25)], 0.5)]).unwrap();
    let atoms = product_measure(&mu).atoms().unwrap();
    assert_eq!(atoms.len(), 4);
    let diagonal: f64 = atoms
        .iter()
        .filter(|((_, a2), _)| a2.iter().all(|x| x.norm() == 0.0))
        .map(|(_, w)| w)
        .sum();
    assert_eq!(diagonal, 0.5);
}

#[test]
fn slice_identity_at_smaller_radius() {
    let t = find_scenario("flat-pencil").unwrap().cycle(16).unwrap();
    let gap = slice_invariance_check(&t, 4.0, 0.4, 16).unwrap();
    assert!(gap.gap <= 1e-6, "{gap:?}");
    assert!(gap.thin > 0.0);
}

#[test]
fn nonsmooth_scenario_is_still_lipschitz() {
    let spec = find_scenario("nonsmooth-lipschitz").unwrap();
    let p = build_product(spec.family().unwrap(), spec.rho).unwrap();
    let fit = fit_inequality(&p, spec.rho, 2048, 3).unwrap();
    assert!(fit.c1.is_finite() && fit.c1 > 0.0);
    assert!(fit.c3.is_finite() && fit.c_bilip > 0.0);
}

#[test]
fn shear_fit_at_smaller_radius_is_stable() {
    let spec = find_scenario("shear").unwrap();
    let p = build_product(spec.family().unwrap(), spec.rho).unwrap();
    let a = fit_inequality(&p, 0.4, 2048, 9).unwrap();
    let b = fit_inequality(&p, 0.4, 4096, 9).unwrap();
    assert!((a.c3 - b.c3).abs() <= 0.1 * b.c3);
}

#[test]
fn rank_one_ext_square_vanishes() {
    let v = [C64::new(1.0, 0.5), C64::new(-0.3, 0.2), c(0.7)];
    let h = (0..9).map(|i| v[i / 3] * v[i % 3].conj()).collect();
    let e = hermitian_to_ext(&HermitianClass::new(3, h).unwrap());
    assert!(ext_wedge(&e, &e).unwrap().max_norm() < 1e-12);
    let id = HermitianClass::new(2, vec![c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
    let e = hermitian_to_ext(&id);
    assert!(ext_wedge(&e, &e).unwrap().max_norm() > 0.5);
}
