use std::path::PathBuf;

use serde::Serialize;

use super::{find_scenario, Expectation, OutputFormat, RunConfig, ScenarioError, ScenarioSpec};
use crate::cycle::{
    diagonal_mass, product_measure, stokes_residual, Cutoff, DiagonalMass, FoliatedCycleLocal, OneForm, Poly,
    TransverseMeasure,
};
use crate::density::{
    build_product, decay_curve, fit_inequality, lelong, rescaled_graph_mass, DecayOptions, DecayReport, InequalityFit,
    LelongEstimate, ProductFamily,
};
use crate::numerics::{Region, C64};

pub const LELONG_RADII: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
pub const STOKES_ORDER: usize = 24;
const FIT_SAMPLES: usize = 4096;
const GRAPH_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Pass,
    AssertionFailed,
}

impl RunStatus {
    /// 0 when every assertion holds, 2 otherwise. Errors map to 1.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::AssertionFailed => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitSection {
    Fitted(InequalityFit),
    Rejected { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub scenario: ScenarioSpec,
    pub decay: DecayReport,
    pub slope: Option<f64>,
    pub fit: FitSection,
    pub lelong: LelongEstimate,
    pub diagonal: Vec<DiagonalMass>,
    pub stokes_residual: f64,
    pub assertions: Vec<Assertion>,
    pub status: RunStatus,
}

/// The compact set `K = D(1/2)^4` around the origin of the product chart.
pub fn decay_region(spec: &ScenarioSpec) -> Result<Region, ScenarioError> {
    Ok(Region::centered_polydisc(&vec![0.5; 2 * spec.n])?)
}

/// Least-squares slope of `log m` against `log λ` over rows with
/// `λ ≥ min_lambda`. `None` with fewer than two usable rows or a
/// nonpositive mass.
pub fn loglog_slope(lambdas: &[f64], masses: &[f64], min_lambda: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(masses)
        .filter(|(l, _)| **l >= min_lambda)
        .map(|(l, m)| (l.ln(), m.ln()))
        .collect();
    if pts.len() < 2 || pts.iter().any(|(_, y)| !y.is_finite()) {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn slope_window(expected: Expectation) -> f64 {
    match expected {
        Expectation::DecayQuadratic => 4.0,
        _ => 1.0,
    }
}

/// Checks a decay table against the scenario's expected behavior.
pub fn check_expectation(
    spec: &ScenarioSpec,
    p: &ProductFamily,
    report: &DecayReport,
) -> Result<Assertion, ScenarioError> {
    let lambdas = report.lambdas();
    let m = report.totals();
    let slope = loglog_slope(&lambdas, &m, slope_window(spec.expected));
    let (name, passed, detail) = match spec.expected {
        Expectation::DecayQuadratic => match slope {
            Some(s) => ("decay-quadratic", (s + 2.0).abs() <= 0.3, format!("slope {s:.4} over lambda >= 4")),
            None => ("decay-quadratic", false, "needs two positive masses with lambda >= 4".into()),
        },
        Expectation::DecaySlow => match slope {
            Some(s) => ("decay-slow", (-1.2..=-0.3).contains(&s), format!("slope {s:.4}")),
            None => ("decay-slow", false, "needs two positive masses".into()),
        },
        Expectation::Constant => {
            let dev = m.iter().map(|v| (v - m[0]).abs()).fold(0.0, f64::max) / m[0].abs();
            ("constant", dev <= 1e-6, format!("max relative deviation {dev:.3e}"))
        }
        Expectation::EventuallyConstant => {
            let TransverseMeasure::Atomic(atoms) = spec.measure(4)? else {
                return Err(ScenarioError::Config(format!("{}: eventual constancy needs atoms", spec.name)));
            };
            let lam = *lambdas.last().expect("nonempty grid");
            let zero = vec![C64::new(0.0, 0.0); spec.n - spec.q];
            let mut limit = 0.0;
            for (a, w) in &atoms {
                limit += w * w * rescaled_graph_mass(p, a, &zero, lam, &report.region, GRAPH_ORDER)?;
            }
            let last = *m.last().expect("nonempty grid");
            let rel = (last - limit).abs() / limit;
            (
                "eventually-constant",
                rel <= 0.01,
                format!("M({lam}) = {last:.6}, diagonal pairs give {limit:.6}, relative gap {rel:.3e}"),
            )
        }
    };
    Ok(Assertion {
        name: name.into(),
        passed,
        detail,
    })
}

fn stokes_form(n: usize) -> Result<OneForm, ScenarioError> {
    let cutoff = Cutoff {
        center: vec![C64::new(0.0, 0.0)],
        radius: 0.9,
        smooth: true,
    };
    let u = (0..n)
        .map(|j| if j % 2 == 0 { Poly::var(n, (j + 1) % n) } else { Poly::var_bar(n, j - 1) })
        .collect();
    Ok(OneForm::real(n, cutoff, u)?)
}

fn build_report(config: &RunConfig, spec: ScenarioSpec, t: &FoliatedCycleLocal) -> Result<RunReport, ScenarioError> {
    let region = decay_region(&spec)?;
    let p = build_product(t.family().clone(), spec.rho)?;
    let opts = DecayOptions {
        samples: config.samples,
        seed: config.seed,
        graph_order: GRAPH_ORDER,
        window_radius: None,
    };
    let decay = decay_curve(t, &region, &config.lambda_grid, &opts)?;
    let slope = loglog_slope(&decay.lambdas(), &decay.totals(), slope_window(spec.expected));
    let fit = match fit_inequality(&p, spec.rho, FIT_SAMPLES, config.seed) {
        Ok(f) => FitSection::Fitted(f),
        Err(e) => FitSection::Rejected { reason: e.to_string() },
    };
    let origin = vec![C64::new(0.0, 0.0); spec.n];
    let lelong = lelong(t, &origin, &LELONG_RADII, config.quad_order)?;
    let pm = product_measure(&t.measure);
    let diagonal = config
        .lambda_grid
        .iter()
        .map(|l| diagonal_mass(&pm, 1.0 / l, config.samples, config.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let stokes = stokes_residual(t, &stokes_form(spec.n)?, STOKES_ORDER)?;

    let split_defect = decay
        .rows
        .iter()
        .map(|r| (r.mass_total - r.mass_near - r.mass_far).abs() / r.mass_total.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let assertions = vec![
        Assertion {
            name: "mass-split".into(),
            passed: split_defect <= 1e-12,
            detail: format!("max |M - M' - M''|/M = {split_defect:.3e}"),
        },
        check_expectation(&spec, &p, &decay)?,
        Assertion {
            name: "closedness".into(),
            passed: stokes <= 1e-6,
            detail: format!("|T(d gamma)| = {stokes:.3e} at order {STOKES_ORDER}"),
        },
    ];
    let status = if assertions.iter().all(|a| a.passed) {
        RunStatus::Pass
    } else {
        RunStatus::AssertionFailed
    };
    Ok(RunReport {
        config: config.clone(),
        scenario: spec,
        decay,
        slope,
        fit,
        lelong,
        diagonal,
        stokes_residual: stokes,
        assertions,
        status,
    })
}

/// Runs every stage of a scenario without touching the file system.
pub fn run_report(config: &RunConfig) -> Result<RunReport, ScenarioError> {
    config.validate()?;
    let spec = find_scenario(&config.scenario)?;
    let t = spec.cycle(config.quad_order)?;
    build_report(config, spec, &t)
}

/// Runs a scenario and writes `<out>/<name>.json`, plus `<out>/<name>.csv`
/// for CSV output. Returns the report and the paths written.
pub fn run(config: &RunConfig) -> Result<(RunReport, Vec<PathBuf>), ScenarioError> {
    let report = run_report(config)?;
    let io = |e: std::io::Error| ScenarioError::Io(format!("{}: {e}", config.out.display()));
    std::fs::create_dir_all(&config.out).map_err(io)?;
    let mut written = Vec::new();
    if config.format == OutputFormat::Csv {
        let path = config.out.join(format!("{}.csv", report.scenario.name));
        std::fs::write(&path, report.decay.to_csv()).map_err(io)?;
        written.push(path);
    }
    let path = config.out.join(format!("{}.json", report.scenario.name));
    let json = serde_json::to_string_pretty(&report).map_err(|e| ScenarioError::Io(e.to_string()))?;
    std::fs::write(&path, json + "\n").map_err(io)?;
    written.push(path);
    Ok((report, written))
}
