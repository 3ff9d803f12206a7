use std::sync::Arc;

use serde::Serialize;

use super::ScenarioError;
use crate::cycle::{FoliatedCycleLocal, TransverseMeasure};
use crate::lamination::{check_family_invariants, ExprFamily, FlowBox, PlaqueFamily, Transversal};
use crate::numerics::{Region, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// Log-log slope of `M(λ)` over `λ ≥ 4` within 0.3 of −2.
    DecayQuadratic,
    /// Log-log slope in `[−1.2, −0.3]`.
    DecaySlow,
    /// `M(λ)` constant to `10⁻⁶` relative.
    Constant,
    /// `M(λ_max)` within 1% of the diagonal-pair value.
    EventuallyConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransversalSpec {
    Disc { radius: f64 },
    Square { half_width: f64 },
    Segment { lo: f64, hi: f64 },
}

impl TransversalSpec {
    fn region(&self) -> Result<Option<Region>, ScenarioError> {
        Ok(match self {
            TransversalSpec::Disc { radius } => Some(Region::centered_polydisc(&[*radius])?),
            TransversalSpec::Square { half_width } => {
                Some(Region::cube(vec![C64::new(0.0, 0.0)], vec![*half_width])?)
            }
            TransversalSpec::Segment { .. } => None,
        })
    }

    fn build(&self) -> Result<Transversal, ScenarioError> {
        Ok(match (self, self.region()?) {
            (_, Some(r)) => Transversal::Region(r),
            (TransversalSpec::Segment { lo, hi }, None) => Transversal::Segment { lo: *lo, hi: *hi },
            _ => unreachable!(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureSpec {
    /// Normalized Lebesgue measure on the whole transversal.
    Lebesgue,
    /// Atoms `(re, im, weight)`.
    Atoms(Vec<(f64, f64, f64)>),
    Cantor { lo: f64, hi: f64, depth: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: &'static str,
    pub id: &'static str,
    pub n: usize,
    pub q: usize,
    pub family: &'static str,
    pub transversal: TransversalSpec,
    pub measure: MeasureSpec,
    pub rho: f64,
    pub lambda_grid: Vec<f64>,
    pub expected: Expectation,
    pub summary: &'static str,
}

impl ScenarioSpec {
    pub fn family(&self) -> Result<Arc<dyn PlaqueFamily>, ScenarioError> {
        let f = ExprFamily::parse(self.family, self.q, self.transversal.build()?)?;
        Ok(Arc::new(f))
    }

    /// Transverse measure, with quadrature of `order` for densities.
    pub fn measure(&self, order: usize) -> Result<TransverseMeasure, ScenarioError> {
        Ok(match &self.measure {
            MeasureSpec::Lebesgue => {
                let support = self.transversal.region()?.ok_or_else(|| {
                    ScenarioError::Config(format!("{}: Lebesgue measure needs a planar transversal", self.name))
                })?;
                TransverseMeasure::normalized_lebesgue(support, order)
            }
            MeasureSpec::Atoms(atoms) => TransverseMeasure::atomic(
                atoms
                    .iter()
                    .map(|(re, im, w)| (vec![C64::new(*re, *im)], *w))
                    .collect(),
            )?,
            MeasureSpec::Cantor { lo, hi, depth } => TransverseMeasure::cantor(*lo, *hi, *depth)?,
        })
    }

    /// The foliated cycle, after checking the family invariants.
    pub fn cycle(&self, order: usize) -> Result<FoliatedCycleLocal, ScenarioError> {
        let family = self.family()?;
        check_family_invariants(family.as_ref(), 16).check()?;
        let fb = FlowBox::new(family, self.rho, self.name)?;
        Ok(FoliatedCycleLocal::new(fb, self.measure(order)?)?)
    }
}

fn powers_of_two() -> Vec<f64> {
    (0..8).map(|k| (1u32 << k) as f64).collect()
}

pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    let unit = TransversalSpec::Disc { radius: 1.0 };
    vec![
        ScenarioSpec {
            name: "flat-pencil",
            id: "S1",
            n: 2,
            q: 1,
            family: "a1",
            transversal: unit.clone(),
            measure: MeasureSpec::Lebesgue,
            rho: 0.5,
            lambda_grid: powers_of_two(),
            expected: Expectation::DecayQuadratic,
            summary: "parallel lines z2 = a averaged over the unit disc",
        },
        ScenarioSpec {
            name: "atom-leaf",
            id: "S2",
            n: 2,
            q: 1,
            family: "a1",
            transversal: unit.clone(),
            measure: MeasureSpec::Atoms(vec![(0.0, 0.0, 1.0)]),
            rho: 0.5,
            lambda_grid: powers_of_two(),
            expected: Expectation::Constant,
            summary: "the single leaf z2 = 0",
        },
        ScenarioSpec {
            name: "cantor-pencil",
            id: "S3",
            n: 2,
            q: 1,
            family: "a1",
            transversal: TransversalSpec::Segment { lo: -0.5, hi: 0.5 },
            measure: MeasureSpec::Cantor {
                lo: -0.5,
                hi: 0.5,
                depth: 12,
            },
            rho: 0.5,
            lambda_grid: powers_of_two(),
            expected: Expectation::DecaySlow,
            summary: "parallel lines over the middle-thirds Cantor set",
        },
        ScenarioSpec {
            name: "shear",
            id: "S4",
            n: 2,
            q: 1,
            family: "a1 + 0.3*a1*z1",
            transversal: TransversalSpec::Disc { radius: 0.75 },
            measure: MeasureSpec::Lebesgue,
            rho: 0.5,
            lambda_grid: powers_of_two(),
            expected: Expectation::DecayQuadratic,
            summary: "lines through (-10/3, 0) with slopes 0.3a",
        },
        ScenarioSpec {
            name: "nonsmooth-lipschitz",
            id: "S5",
            n: 2,
            q: 1,
            family: "a1 + 0.25*abs(a1)*z1",
            transversal: TransversalSpec::Square { half_width: 0.5 },
            measure: MeasureSpec::Lebesgue,
            rho: 0.5,
            lambda_grid: powers_of_two(),
            expected: Expectation::DecayQuadratic,
            summary: "plaques depending on |a|: Lipschitz but not smooth in the parameter",
        },
        ScenarioSpec {
            name: "two-atoms",
            id: "S6",
            n: 2,
            q: 1,
            family: "a1",
            transversal: unit,
            measure: MeasureSpec::Atoms(vec![(0.25, 0.0, 0.5), (-0.25, 0.0, 0.5)]),
            rho: 0.5,
            lambda_grid: powers_of_two(),
            expected: Expectation::EventuallyConstant,
            summary: "two leaves z2 = 1/4 and z2 = -1/4 with equal weights",
        },
    ]
}

pub fn find_scenario(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name || s.id.eq_ignore_ascii_case(name))
        .ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lamination::transversal_slope_gap;

    #[test]
    fn six_valid_entries() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 6);
        for s in &all {
            s.cycle(8).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
        assert_eq!(find_scenario("s4").unwrap().name, "shear");
        assert!(find_scenario("nope").is_err());
    }

    #[test]
    fn flat_pencil_is_centered() {
        let f = find_scenario("flat-pencil").unwrap().family().unwrap();
        for a in [C64::new(0.3, -0.2), C64::new(-0.9, 0.1)] {
            assert_eq!(f.eval(&[a], &[C64::new(0.0, 0.0)]), vec![a]);
        }
    }

    #[test]
    fn kink_of_the_nonsmooth_family() {
        let f = find_scenario("nonsmooth-lipschitz").unwrap().family().unwrap();
        let one = [C64::new(1.0, 0.0)];
        let z = [C64::new(0.9, 0.0)];
        assert!(transversal_slope_gap(f.as_ref(), &[C64::new(0.0, 0.0)], &one, &z, 1e-4) > 0.2);
        assert!(transversal_slope_gap(f.as_ref(), &[C64::new(0.3, 0.0)], &one, &z, 1e-4) < 1e-6);
    }
}
