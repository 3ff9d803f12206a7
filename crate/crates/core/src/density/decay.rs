use rayon::prelude::*;
use serde::Serialize;

use super::{build_product, fit_inequality, rescaled_mass_on, DensityError, ProductFamily, RescaledGrid};
use crate::cycle::{mean_and_stderr, FoliatedCycleLocal, TransverseMeasure};
use crate::numerics::{pairwise_sum, rng_stream, sup_dist, sup_norm, Region, C64};

const WINDOW_SALT: u64 = 0x0057_1D0E;
const FAR_SALT: u64 = 0x00FA_12B2;
const MAX_EXACT_PAIRS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayOptions {
    pub samples: usize,
    pub seed: u64,
    /// Quadrature order for each plaque's graph mass.
    pub graph_order: usize,
    /// Half-width `R` of the window `‖b − a‖ ≤ R/λ` that is sampled
    /// separately. `None` derives it from a quick inequality fit.
    pub window_radius: Option<f64>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            samples: 1 << 16,
            seed: 42,
            graph_order: 4,
            window_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub lambda: f64,
    pub mass_total: f64,
    /// Plaques with `‖α₂‖ ≤ 1/λ`.
    pub mass_near: f64,
    pub mass_far: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub region: Region,
    pub method: &'static str,
    pub window_radius: Option<f64>,
    pub seed: u64,
}

impl DecayReport {
    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mass_total).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,mass_total,mass_near,mass_far,stderr,samples\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.lambda, r.mass_total, r.mass_near, r.mass_far, r.stderr, r.samples
            ));
        }
        out
    }
}

/// Per-sample contribution split by stratum.
#[derive(Clone, Copy, Default)]
struct Split {
    near: f64,
    far: f64,
}

impl Split {
    fn add(&mut self, alpha2: &[C64], lambda: f64, value: f64) {
        if sup_norm(alpha2) <= 1.0 / lambda {
            self.near += value;
        } else {
            self.far += value;
        }
    }
}

fn row_from(lambda: f64, splits: &[Split], scale: f64, exact: bool) -> DecayRow {
    let near: Vec<f64> = splits.iter().map(|s| s.near * scale).collect();
    let far: Vec<f64> = splits.iter().map(|s| s.far * scale).collect();
    let (mass_near, mass_far) = (pairwise_sum(&near), pairwise_sum(&far));
    let stderr = if exact {
        0.0
    } else {
        let totals: Vec<f64> = splits.iter().map(|s| s.near + s.far).collect();
        mean_and_stderr(&totals).1
    };
    DecayRow {
        lambda,
        mass_total: mass_near + mass_far,
        mass_near,
        mass_far,
        stderr,
        samples: splits.len(),
    }
}

fn diff(b: &[C64], a: &[C64]) -> Vec<C64> {
    b.iter().zip(a).map(|(x, y)| x - y).collect()
}

/// Window half-width `1.25·(r_{w″}/c₁ + c₂·α_max·r_{w′})`, beyond which the
/// lower estimate already pushes rescaled plaques out of `K`.
fn default_window(p: &ProductFamily, region: &Region, seed: u64) -> f64 {
    let Ok(fit) = fit_inequality(p, p.rho, 1024, seed) else {
        return 1.0;
    };
    let (q, n) = (p.leaf_dim(), p.factor_dim());
    let shadow = region.bounding_polydisc();
    let r = shadow.radii();
    let w_leaf = r[n..n + q].iter().copied().fold(0.0, f64::max);
    let w_normal = r[n + q..].iter().copied().fold(0.0, f64::max);
    let window = 1.25 * (w_normal / fit.c1 + fit.c2 * fit.alpha_max * w_leaf.min(p.rho));
    if window.is_finite() && window > 0.0 {
        window
    } else {
        1.0
    }
}

/// `M(λ) = ∫∫ ‖(A_λ)_*[Γ_α]‖_K d(μ⊗μ)` for each `λ`, split into the near
/// (`‖α₂‖ ≤ 1/λ`) and far strata.
///
/// Atomic measures are enumerated exactly. Measures with window sampling
/// use, for each draw `a`, one partner from the window `‖b − a‖ ≤ R/λ` and
/// one from `μ` restricted to its complement; other measures draw
/// independent pairs. The same streams are used at every `λ`.
pub fn decay_curve(
    t: &FoliatedCycleLocal,
    region: &Region,
    lambdas: &[f64],
    opts: &DecayOptions,
) -> Result<DecayReport, DensityError> {
    let p = build_product(t.family().clone(), t.flow_box.rho)?;
    decay_curve_product(&p, &t.measure, region, lambdas, opts)
}

/// [`decay_curve`] for an already built product family.
pub fn decay_curve_product(
    p: &ProductFamily,
    mu: &TransverseMeasure,
    region: &Region,
    lambdas: &[f64],
    opts: &DecayOptions,
) -> Result<DecayReport, DensityError> {
    let grids = lambdas
        .iter()
        .map(|l| RescaledGrid::new(p, *l, region, opts.graph_order))
        .collect::<Result<Vec<_>, _>>()?;
    if let TransverseMeasure::Atomic(atoms) = mu {
        if atoms.len() * atoms.len() <= MAX_EXACT_PAIRS {
            let rows = grids
                .iter()
                .map(|grid| {
                    let splits: Vec<Split> = atoms
                        .iter()
                        .flat_map(|(a, wa)| {
                            atoms.iter().map(move |(b, wb)| {
                                let a2 = diff(b, a);
                                let mut s = Split::default();
                                s.add(&a2, grid.lambda, wa * wb * rescaled_mass_on(p, a, &a2, grid));
                                s
                            })
                        })
                        .collect();
                    row_from(grid.lambda, &splits, 1.0, true)
                })
                .collect();
            return Ok(DecayReport {
                rows,
                region: region.clone(),
                method: "exact-atoms",
                window_radius: None,
                seed: opts.seed,
            });
        }
    }
    if opts.samples == 0 {
        return Err(DensityError::InvalidInput("no samples requested".into()));
    }
    let windowed = mu.supports_windows();
    let window = if windowed {
        Some(opts.window_radius.unwrap_or_else(|| default_window(p, region, opts.seed)))
    } else {
        None
    };
    let seed = opts.seed;
    let n = opts.samples as u64;
    let inv = 1.0 / opts.samples as f64;
    let mut rows = Vec::with_capacity(grids.len());
    for grid in &grids {
        let lam = grid.lambda;
        let splits: Result<Vec<Split>, DensityError> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng_a = rng_stream(seed, i);
                let mut rng_b = rng_stream(seed ^ FAR_SALT, i);
                let a = mu.draw(&mut rng_a)?;
                let mut s = Split::default();
                match window {
                    Some(r) => {
                        let half = r / lam;
                        let mut rng_w = rng_stream(seed ^ WINDOW_SALT, i);
                        if let Some(b) = mu.draw_near(&a.point, half, &mut rng_w)? {
                            if sup_dist(&b.point, &a.point) <= half {
                                let a2 = diff(&b.point, &a.point);
                                let m = rescaled_mass_on(p, &a.point, &a2, grid);
                                s.add(&a2, lam, a.weight * b.weight * m);
                            }
                        }
                        let b = mu.draw(&mut rng_b)?;
                        if sup_dist(&b.point, &a.point) > half {
                            let a2 = diff(&b.point, &a.point);
                            let m = rescaled_mass_on(p, &a.point, &a2, grid);
                            s.add(&a2, lam, a.weight * b.weight * m);
                        }
                    }
                    None => {
                        let b = mu.draw(&mut rng_b)?;
                        let a2 = diff(&b.point, &a.point);
                        let m = rescaled_mass_on(p, &a.point, &a2, grid);
                        s.add(&a2, lam, a.weight * b.weight * m);
                    }
                }
                Ok(s)
            })
            .collect();
        let mut row = row_from(lam, &splits?, inv, false);
        row.samples = opts.samples;
        rows.push(row);
    }
    Ok(DecayReport {
        rows,
        region: region.clone(),
        method: if windowed {
            "windowed-monte-carlo"
        } else {
            "product-monte-carlo"
        },
        window_radius: window,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::lamination::{ExprFamily, FlowBox, PlaqueFamily, Transversal};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn cycle(text: &str, tr: Transversal, mu: TransverseMeasure) -> FoliatedCycleLocal {
        let f: Arc<dyn PlaqueFamily> = Arc::new(ExprFamily::parse(text, 1, tr).unwrap());
        FoliatedCycleLocal::new(FlowBox::new(f, 0.5, "t").unwrap(), mu).unwrap()
    }

    fn k_half() -> Region {
        Region::centered_polydisc(&[0.5; 4]).unwrap()
    }

    #[test]
    fn two_atoms_become_constant() {
        let tr = Transversal::Region(Region::centered_polydisc(&[1.0]).unwrap());
        let mu = TransverseMeasure::atomic(vec![(vec![c(0.25)], 0.5), (vec![c(-0.25)], 0.5)]).unwrap();
        let t = cycle("a1", tr, mu);
        let rep = decay_curve(&t, &k_half(), &[1.0, 2.0, 4.0], &DecayOptions::default()).unwrap();
        assert_eq!(rep.method, "exact-atoms");
        let m = rep.totals();
        assert!((m[0] - PI * PI / 2.0).abs() < 1e-12);
        assert!((m[2] - PI * PI / 4.0).abs() < 1e-12);
        for r in &rep.rows {
            assert_eq!(r.mass_total, r.mass_near + r.mass_far);
        }
    }

    #[test]
    fn csv_layout() {
        let tr = Transversal::Region(Region::centered_polydisc(&[1.0]).unwrap());
        let t = cycle("a1", tr, TransverseMeasure::dirac(vec![c(0.0)]));
        let rep = decay_curve(&t, &k_half(), &[1.0, 2.0], &DecayOptions::default()).unwrap();
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "lambda,mass_total,mass_near,mass_far,stderr,samples");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
    }

    #[test]
    fn lebesgue_pencil_small_run() {
        let tr = Transversal::Region(Region::centered_polydisc(&[1.0]).unwrap());
        let mu = TransverseMeasure::normalized_lebesgue(Region::centered_polydisc(&[1.0]).unwrap(), 16);
        let t = cycle("a1", tr, mu);
        let opts = DecayOptions {
            samples: 4096,
            ..DecayOptions::default()
        };
        let rep = decay_curve(&t, &k_half(), &[1.0, 4.0], &opts).unwrap();
        for r in &rep.rows {
            let exact = PI * PI / (32.0 * r.lambda * r.lambda);
            assert!((r.mass_total - exact).abs() < 4.0 * r.stderr, "{r:?} vs {exact}");
            assert_eq!(r.mass_far, 0.0);
        }
    }
}
