//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the table.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use lamina_core::cohomology::{
    herm_wedge_square_norm, hirz_classify, hirz_cup, pn_verdict, rank1_decompose, HermitianClass, HirzBranch,
    HirzebruchClass, PnOutcome,
};
use lamina_core::cycle::{stokes_residual, Cutoff, OneForm, Poly};
use lamina_core::density::{
    build_product, decay_curve, far_mass_zero_box, fit_inequality, lelong, rescaled_mass_on, slice_invariance_check,
    DecayOptions, DensityError, ProductFamily, RescaledGrid,
};
use lamina_core::lamination::{PlaqueFamily, Transversal};
use lamina_core::numerics::{gauss_legendre, rng_stream, sup_norm, Region};
use lamina_core::scenarios::{ahlfors_ratios, decay_region, find_scenario, loglog_slope, run, RunConfig};
use lamina_core::C64;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn flat_closed_form(lambda: f64) -> f64 {
    PI * PI / (32.0 * lambda * lambda)
}

/// Deterministic double integral of the rescaled flat-pencil mass over
/// `D × D` with polar Gauss panels split where the integrand jumps.
fn flat_pencil_grid_oracle(p: &ProductFamily, region: &Region, lambda: f64) -> f64 {
    let (x, w) = gauss_legendre(12);
    let angular = 24;
    let panels = |breaks: &[f64]| -> Vec<(C64, f64)> {
        let mut nodes = Vec::new();
        for seg in breaks.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            for (xi, wi) in x.iter().zip(&w) {
                let r = lo + (hi - lo) * (xi + 1.0) / 2.0;
                let wr = wi * (hi - lo) / 2.0 * r;
                for k in 0..angular {
                    let th = 2.0 * PI * (k as f64 + 0.5) / angular as f64;
                    nodes.push((C64::from_polar(r, th), wr * 2.0 * PI / angular as f64));
                }
            }
        }
        nodes
    };
    let a_nodes = panels(&[0.0, 0.5, 1.0]);
    let b_nodes = panels(&[0.0, 0.5 / lambda, 1.0 / lambda, 2.0]);
    let grid = RescaledGrid::new(p, lambda, region, 4).unwrap();
    let mut total = 0.0;
    for (a, wa) in &a_nodes {
        for (d, wd) in &b_nodes {
            if (a + d).norm() > 1.0 {
                continue;
            }
            total += wa * wd * rescaled_mass_on(p, &[*a], &[*d], &grid);
        }
    }
    total / (PI * PI)
}

fn criterion_1() -> Outcome {
    let spec = find_scenario("flat-pencil").unwrap();
    let start = Instant::now();
    let t = spec.cycle(16).unwrap();
    let region = decay_region(&spec).unwrap();
    let lambdas = [1.0, 2.0, 4.0, 8.0, 16.0];
    let rep = decay_curve(&t, &region, &lambdas, &DecayOptions::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = rep
        .rows
        .iter()
        .map(|r| (r.mass_total / flat_closed_form(r.lambda) - 1.0).abs())
        .fold(0.0, f64::max);
    let p = build_product(t.family().clone(), 0.5).unwrap();
    let oracle_worst = lambdas
        .iter()
        .map(|l| (flat_pencil_grid_oracle(&p, &region, *l) / flat_closed_form(*l) - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 0.02 && elapsed < 120.0 && oracle_worst <= 0.01,
        format!(
            "max relative error {worst:.4} (<= 0.02) in {elapsed:.1}s; grid oracle vs closed form {oracle_worst:.2e} (<= 0.01)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let spec = find_scenario("atom-leaf").unwrap();
    let t = spec.cycle(16).unwrap();
    let rep = decay_curve(&t, &decay_region(&spec).unwrap(), &spec.lambda_grid, &DecayOptions::default()).unwrap();
    let target = PI * PI / 2.0;
    let worst = rep
        .totals()
        .iter()
        .map(|m| (m / target - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-6 && rep.rows.len() == 8,
        format!("max |M/(pi^2/2) - 1| = {worst:.2e} over {} lambdas", rep.rows.len()),
    )
}

fn criterion_3() -> Outcome {
    let mut split_ok = true;
    let mut nonzero = 0;
    let mut tested = 0;
    let lambdas = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    for name in ["flat-pencil", "shear"] {
        let spec = find_scenario(name).unwrap();
        let t = spec.cycle(16).unwrap();
        let opts = DecayOptions {
            samples: 4096,
            ..DecayOptions::default()
        };
        let rep = decay_curve(&t, &decay_region(&spec).unwrap(), &lambdas, &opts).unwrap();
        split_ok &= rep.rows.iter().all(|r| r.mass_total == r.mass_near + r.mass_far);
        let p = build_product(t.family().clone(), spec.rho).unwrap();
        let fit = fit_inequality(&p, spec.rho, 4096, 7).unwrap();
        let k_star = far_mass_zero_box(&fit, fit.k_derivative).unwrap();
        let grids: Vec<RescaledGrid> = lambdas
            .iter()
            .map(|l| RescaledGrid::new(&p, *l, &k_star, 4).unwrap())
            .collect();
        let mut i = 0u64;
        let mut taken = 0;
        while taken < 1000 {
            let mut rng = rng_stream(0xFA5, i);
            i += 1;
            let a = t.measure.draw(&mut rng).unwrap().point;
            let b = t.measure.draw(&mut rng).unwrap().point;
            let grid = &grids[rng.random_range(0..grids.len())];
            let a2: Vec<C64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
            if sup_norm(&a2) <= 1.0 / grid.lambda {
                continue;
            }
            taken += 1;
            if rescaled_mass_on(&p, &a, &a2, grid) != 0.0 {
                nonzero += 1;
            }
        }
        tested += taken;
    }
    outcome(
        split_ok && nonzero == 0,
        format!("M = M' + M'' on every row: {split_ok}; far samples with mass on K*: {nonzero} of {tested}"),
    )
}

fn criterion_4() -> Outcome {
    let spec = find_scenario("cantor-pencil").unwrap();
    let t = spec.cycle(16).unwrap();
    let lambdas = [1.0, 3.0, 9.0, 27.0, 81.0];
    let rep = decay_curve(&t, &decay_region(&spec).unwrap(), &lambdas, &DecayOptions::default()).unwrap();
    let m = rep.totals();
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let ratio = m[4] / m[0];
    let slope = loglog_slope(&lambdas, &m, 1.0).unwrap_or(f64::NAN);
    outcome(
        decreasing && ratio <= 0.2 && (-1.2..=-0.3).contains(&slope),
        format!("strictly decreasing: {decreasing}; M(81)/M(1) = {ratio:.4}; slope {slope:.4}"),
    )
}

fn criterion_5() -> Outcome {
    let radii = [0.4, 0.2, 0.1, 0.05];
    let origin = [c(0.0), c(0.0)];
    let flat = find_scenario("atom-leaf").unwrap().cycle(16).unwrap();
    let est = lelong(&flat, &origin, &radii, 16).unwrap();
    let worst = est.ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    let diffuse = find_scenario("flat-pencil").unwrap().cycle(16).unwrap();
    let nu = lelong(&diffuse, &origin, &radii, 16).unwrap().nu;
    outcome(
        worst <= 1e-3 && nu <= 0.05,
        format!("flat plane max |ratio - 1| = {worst:.2e}; diffuse pencil nu = {nu:.4}"),
    )
}

/// `h_a(z) = a + 0.25·√|a|·z`: Hölder but not Lipschitz in `a` at 0.
struct SqrtFamily {
    tr: Transversal,
}

impl PlaqueFamily for SqrtFamily {
    fn leaf_dim(&self) -> usize {
        1
    }
    fn codim(&self) -> usize {
        1
    }
    fn transversal(&self) -> &Transversal {
        &self.tr
    }
    fn eval_into(&self, a: &[C64], z: &[C64], out: &mut [C64]) {
        out[0] = a[0] + 0.25 * a[0].norm().sqrt() * z[0];
    }
}

fn criterion_6() -> Outcome {
    let spec = find_scenario("shear").unwrap();
    let p = build_product(spec.family().unwrap(), spec.rho).unwrap();
    let f1 = fit_inequality(&p, spec.rho, 4096, 11).unwrap();
    let f2 = fit_inequality(&p, spec.rho, 8192, 11).unwrap();
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    let drift = rel(f1.c1, f2.c1).max(rel(f1.c2, f2.c2)).max(rel(f1.c3, f2.c3));
    let finite = [f1.c1, f1.c2, f1.c3].iter().all(|v| v.is_finite() && *v > 0.0);
    let bad = SqrtFamily {
        tr: Transversal::Region(Region::centered_polydisc(&[0.5]).unwrap()),
    };
    let bad = build_product(Arc::new(bad), 0.5).unwrap();
    let rejected = match fit_inequality(&bad, 0.5, 1024, 11) {
        Err(DensityError::NonLipschitz { witness }) => !witness.is_empty(),
        _ => false,
    };
    outcome(
        finite && drift <= 0.1 && rejected,
        format!(
            "shear c1 = {:.4}, c2 = {:.4}, c3 = {:.4}; drift under doubling {drift:.3}; sqrt family rejected: {rejected}",
            f2.c1, f2.c2, f2.c3
        ),
    )
}

fn criterion_7() -> Outcome {
    let cutoff = Cutoff {
        center: vec![c(0.0)],
        radius: 0.9,
        smooth: true,
    };
    let gamma = OneForm::real(2, cutoff, vec![Poly::var(2, 1), Poly::var_bar(2, 0)]).unwrap();
    let mut stokes = 0.0_f64;
    let mut gap = 0.0_f64;
    for name in ["flat-pencil", "shear"] {
        let t = find_scenario(name).unwrap().cycle(16).unwrap();
        stokes = stokes.max(stokes_residual(&t, &gamma, 24).unwrap());
        for lambda in [2.0, 4.0, 8.0] {
            gap = gap.max(slice_invariance_check(&t, lambda, 0.5, 16).unwrap().gap);
        }
    }
    outcome(
        stokes <= 1e-6 && gap <= 1e-6,
        format!("max Stokes residual {stokes:.2e}; max slice gap {gap:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 0..6u32 {
        let (f, s) = (HirzebruchClass::fiber(n), HirzebruchClass::section(n));
        ok &= hirz_cup(&f, &f).unwrap() == 0.0
            && hirz_cup(&f, &s).unwrap() == 1.0
            && hirz_cup(&s, &s).unwrap() == -(n as f64);
    }
    let mut feasible = 0;
    let mut rejected_ok = true;
    for i in 0..10_000u64 {
        let mut rng = rng_stream(0xB12, i);
        let n: u32 = rng.random_range(1..8);
        let b: i64 = rng.random_range(0..20);
        let a = if i % 2 == 0 {
            rng.random_range(-20..20) as f64
        } else {
            (n as i64 * b) as f64 / 2.0
        };
        let b = if i % 2 == 0 { 0.0 } else { b as f64 };
        let cert = hirz_classify(n, a, b).unwrap();
        let is_feasible = cert.square == 0.0 && cert.dot_f >= 0.0 && cert.dot_c >= 0.0;
        if is_feasible {
            feasible += 1;
            ok &= cert.branch == HirzBranch::Accepted && cert.b == 0.0;
        }
        if b > 0.0 {
            rejected_ok &= cert.branch == HirzBranch::Rejected && cert.dot_c == -b * n as f64 / 2.0 && cert.dot_c < 0.0;
        }
    }
    ok &= rejected_ok;
    notes.push(format!("{feasible} feasible probes accepted with b = 0; rejected branch certificate: {rejected_ok}"));

    let mut agree = 0;
    let mut total = 0;
    for n in 2..=4usize {
        for i in 0..100u64 {
            let mut rng = rng_stream(0x9A5 + n as u64, i);
            let rank = if i % 2 == 0 { 1 } else { rng.random_range(2..=n) };
            let mut h = vec![C64::new(0.0, 0.0); n * n];
            for _ in 0..rank {
                let v: Vec<C64> = (0..n)
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                for j in 0..n {
                    for k in 0..n {
                        h[j * n + k] += v[j] * v[k].conj();
                    }
                }
            }
            let class = HermitianClass::new(n, h).unwrap();
            let rank_one = rank1_decompose(&class).is_ok();
            let wedge_zero = herm_wedge_square_norm(&class) <= 1e-10;
            total += 1;
            if rank_one == wedge_zero && rank_one == (rank == 1) {
                agree += 1;
            }
        }
    }
    ok &= agree == total;
    notes.push(format!("rank one <=> zero wedge square on {agree}/{total}"));

    let table = [(2, 1, PnOutcome::Contradiction), (4, 2, PnOutcome::Contradiction), (3, 1, PnOutcome::NoObstruction)];
    let pn_ok = table
        .iter()
        .all(|(n, q, want)| pn_verdict(*n, *q, 1.0).unwrap().outcome == *want);
    ok &= pn_ok;
    notes.push(format!("P^n table: {pn_ok}"));
    outcome(ok, notes.join("; "))
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0_f64;
    for v in [[c(1.0), c(0.0)], [C64::new(0.6, -0.3), C64::new(0.2, 1.1)]] {
        for row in ahlfors_ratios(&v, &[1.0, 10.0, 100.0]).unwrap() {
            worst = worst.max((row.ratio - row.closed_form).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max |ratio - 2/(r|v|)| = {worst:.2e}"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new("flat-pencil");
    cfg.samples = 2048;
    cfg.out = dir.path().to_path_buf();
    let read = |cfg: &RunConfig| -> Vec<Vec<u8>> {
        let (_, paths) = run(cfg).unwrap();
        paths.iter().map(|p| std::fs::read(p).unwrap()).collect()
    };
    let first = read(&cfg);
    let second = read(&cfg);
    cfg.scenario = "two-atoms".into();
    let third = read(&cfg);
    let fourth = read(&cfg);
    outcome(
        first == second && third == fourth && first.len() == 2,
        format!("{} files byte-identical across repeated runs: {}", first.len() + third.len(), first == second && third == fourth),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 flat-pencil decay law", criterion_1),
        ("2 atomic invariance", criterion_2),
        ("3 stratum identities", criterion_3),
        ("4 Cantor decay", criterion_4),
        ("5 Lelong calibration", criterion_5),
        ("6 inequality fits", criterion_6),
        ("7 closedness and slice invariance", criterion_7),
        ("8 cohomology exactness", criterion_8),
        ("9 Ahlfors ratios", criterion_9),
        ("10 determinism", criterion_10),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let o = check();
        println!("{} [{name}] {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
