//! Compactly supported test forms with polynomial coefficients.
//!
//! A `(q,q)`-form on `C^n` is stored as `Σ α_IJ σ_q dx_I ∧ dx̄_J` with
//! `σ_q = i^q (−1)^{q(q−1)/2}`, so that `σ_q dx_I ∧ dx̄_I` is the positive
//! form `Π_{j∈I} (i dx_j ∧ dx̄_j)` and `β^q = q! Σ_I σ_q dx_I ∧ dx̄_I` for
//! `β = i Σ dx_j ∧ dx̄_j`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use super::CycleError;
use crate::numerics::C64;

/// Polynomial in `x_1..x_n` and `x̄_1..x̄_n` with complex coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    n: usize,
    /// Key: exponents of `x` followed by exponents of `x̄`.
    terms: BTreeMap<Vec<u32>, C64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        Self::monomial(n, c, &vec![0; n], &vec![0; n])
    }

    pub fn monomial(n: usize, c: C64, pow: &[u32], pow_bar: &[u32]) -> Self {
        let mut p = Self::zero(n);
        if c != C64::new(0.0, 0.0) {
            let key: Vec<u32> = pow.iter().chain(pow_bar).copied().collect();
            p.terms.insert(key, c);
        }
        p
    }

    /// The coordinate `x_j`.
    pub fn var(n: usize, j: usize) -> Self {
        let mut pow = vec![0; n];
        pow[j] = 1;
        Self::monomial(n, C64::new(1.0, 0.0), &pow, &vec![0; n])
    }

    /// The coordinate `x̄_j`.
    pub fn var_bar(n: usize, j: usize) -> Self {
        let mut pow = vec![0; n];
        pow[j] = 1;
        Self::monomial(n, C64::new(1.0, 0.0), &vec![0; n], &pow)
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            let w = v * c;
            if w != C64::new(0.0, 0.0) {
                out.terms.insert(k.clone(), w);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(self.n, C64::new(1.0, 0.0));
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Complex conjugate polynomial: `conj(p(x))` as a polynomial.
    pub fn conj(&self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for (k, v) in &self.terms {
            let mut key = k[n..].to_vec();
            key.extend_from_slice(&k[..n]);
            out.terms.insert(key, v.conj());
        }
        out
    }

    /// `∂/∂x_j`.
    pub fn d(&self, j: usize) -> Self {
        self.derive(j)
    }

    /// `∂/∂x̄_j`.
    pub fn d_bar(&self, j: usize) -> Self {
        self.derive(self.n + j)
    }

    fn derive(&self, slot: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            if k[slot] == 0 {
                continue;
            }
            let mut key = k.clone();
            let e = key[slot];
            key[slot] -= 1;
            *out.terms.entry(key).or_insert(C64::new(0.0, 0.0)) += v * e as f64;
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        let n = self.n;
        let conj: Vec<C64> = x.iter().map(|z| z.conj()).collect();
        let mut acc = C64::new(0.0, 0.0);
        for (k, v) in &self.terms {
            let mut t = *v;
            for j in 0..n {
                if k[j] > 0 {
                    t *= x[j].powu(k[j]);
                }
                if k[n + j] > 0 {
                    t *= conj[j].powu(k[n + j]);
                }
            }
            acc += t;
        }
        acc
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (k, v) in &o.terms {
            *out.terms.entry(k.clone()).or_insert(C64::new(0.0, 0.0)) += v;
        }
        out.prune();
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (ka, va) in &self.terms {
            for (kb, vb) in &o.terms {
                let key: Vec<u32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                *out.terms.entry(key).or_insert(C64::new(0.0, 0.0)) += va * vb;
            }
        }
        out.prune();
        out
    }
}

/// How a form is cut off in the leaf coordinates `x_1..x_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    pub center: Vec<C64>,
    pub radius: f64,
    /// Smooth: coefficients carry the factor `(1 − |x′ − c|²/R²)³`.
    /// Sharp: coefficients are multiplied by the indicator of the ball.
    pub smooth: bool,
}

impl Cutoff {
    pub fn inside(&self, x: &[C64]) -> bool {
        let s: f64 = self
            .center
            .iter()
            .zip(x)
            .map(|(c, z)| (z - c).norm_sqr())
            .sum();
        s <= self.radius * self.radius
    }

    /// `(1 − |x′ − c|²/R²)³` as a polynomial in all `n` coordinates.
    pub fn bump(&self, n: usize) -> Poly {
        let mut s = Poly::constant(n, C64::new(1.0, 0.0));
        let inv = C64::new(-1.0 / (self.radius * self.radius), 0.0);
        for (j, c) in self.center.iter().enumerate() {
            let dz = &Poly::var(n, j) + &Poly::constant(n, -*c);
            let dzb = &Poly::var_bar(n, j) + &Poly::constant(n, -c.conj());
            s = &s + &(&dz * &dzb).scale(inv);
        }
        s.pow(3)
    }
}

/// One coefficient `α_IJ` of a `(q,q)`-form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormTerm {
    /// Strictly increasing holomorphic indices `I`.
    pub rows: Vec<usize>,
    /// Strictly increasing antiholomorphic indices `J`.
    pub cols: Vec<usize>,
    pub coeff: Poly,
}

/// A `(q,q)`-form on `C^n` supported where the leaf coordinates lie in the
/// cutoff ball.
#[derive(Debug, Clone, PartialEq)]
pub struct TestForm {
    pub n: usize,
    pub q: usize,
    pub cutoff: Cutoff,
    pub terms: Vec<FormTerm>,
}

fn check_indices(ix: &[usize], q: usize, n: usize) -> Result<(), CycleError> {
    if ix.len() != q || ix.windows(2).any(|w| w[0] >= w[1]) || ix.iter().any(|&i| i >= n) {
        return Err(CycleError::InvalidForm(format!(
            "index set {ix:?} is not a strictly increasing {q}-subset of 0..{n}"
        )));
    }
    Ok(())
}

impl TestForm {
    /// Builds a form; with a smooth cutoff every coefficient is multiplied
    /// by the bump polynomial.
    pub fn new(n: usize, q: usize, cutoff: Cutoff, terms: Vec<FormTerm>) -> Result<Self, CycleError> {
        if q == 0 || q > n || cutoff.center.len() != q || !(cutoff.radius > 0.0) {
            return Err(CycleError::InvalidForm(format!(
                "bidegree ({q},{q}) on C^{n} with cutoff in C^{}",
                cutoff.center.len()
            )));
        }
        let bump = cutoff.smooth.then(|| cutoff.bump(n));
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            check_indices(&t.rows, q, n)?;
            check_indices(&t.cols, q, n)?;
            if t.coeff.nvars() != n {
                return Err(CycleError::InvalidForm(format!(
                    "coefficient in {} variables on C^{n}",
                    t.coeff.nvars()
                )));
            }
            let coeff = match &bump {
                Some(b) => &t.coeff * b,
                None => t.coeff,
            };
            out.push(FormTerm { coeff, ..t });
        }
        Ok(TestForm {
            n,
            q,
            cutoff,
            terms: out,
        })
    }

    /// `φ · Π_{j<q} (i dx_j ∧ dx̄_j)`: the leaf area form times `φ`.
    pub fn leaf_area(n: usize, q: usize, cutoff: Cutoff, phi: Poly) -> Result<Self, CycleError> {
        let idx: Vec<usize> = (0..q).collect();
        Self::new(
            n,
            q,
            cutoff,
            vec![FormTerm {
                rows: idx.clone(),
                cols: idx,
                coeff: phi,
            }],
        )
    }

    pub fn zero(n: usize, q: usize, cutoff: Cutoff) -> Result<Self, CycleError> {
        Self::new(n, q, cutoff, Vec::new())
    }

    /// Sum of two forms with the same cutoff.
    pub fn plus(&self, other: &TestForm) -> Result<Self, CycleError> {
        if self.n != other.n || self.q != other.q || self.cutoff != other.cutoff {
            return Err(CycleError::InvalidForm("forms with different shapes".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(TestForm {
            terms,
            ..self.clone()
        })
    }

    pub fn scaled(&self, c: C64) -> Self {
        TestForm {
            terms: self
                .terms
                .iter()
                .map(|t| FormTerm {
                    coeff: t.coeff.scale(c),
                    ..t.clone()
                })
                .collect(),
            ..self.clone()
        }
    }

    /// `Σ α_IJ(x) det D_I conj(det D_J)` for the `n × q` Jacobian `D` of a
    /// leaf parametrization, row-major. Returns 0 outside the cutoff.
    pub fn pullback_density(&self, x: &[C64], d: &[C64]) -> C64 {
        if !self.cutoff.inside(&x[..self.q]) {
            return C64::new(0.0, 0.0);
        }
        let q = self.q;
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.terms {
            let a = t.coeff.eval(x);
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let di = minor(d, q, &t.rows);
            let dj = minor(d, q, &t.cols);
            acc += a * di * dj.conj();
        }
        acc
    }
}

fn minor(d: &[C64], q: usize, rows: &[usize]) -> C64 {
    let sub: Vec<C64> = rows
        .iter()
        .flat_map(|&r| d[r * q..(r + 1) * q].iter().copied())
        .collect();
    crate::numerics::complex_det(&sub, q)
}

/// A 1-form `γ = Σ_j u_j dx_j + v_j dx̄_j` with the same kind of cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub n: usize,
    pub cutoff: Cutoff,
    pub u: Vec<Poly>,
    pub v: Vec<Poly>,
}

impl OneForm {
    pub fn new(n: usize, cutoff: Cutoff, u: Vec<Poly>, v: Vec<Poly>) -> Result<Self, CycleError> {
        if u.len() != n || v.len() != n || cutoff.center.len() != 1 {
            return Err(CycleError::Unsupported(
                "1-forms are supported for closedness tests of curves (q = 1) only".into(),
            ));
        }
        let (u, v) = if cutoff.smooth {
            let b = cutoff.bump(n);
            (
                u.iter().map(|p| p * &b).collect(),
                v.iter().map(|p| p * &b).collect(),
            )
        } else {
            (u, v)
        };
        Ok(OneForm { n, cutoff, u, v })
    }

    /// Real 1-form `Σ u_j dx_j + conj(u_j) dx̄_j`.
    pub fn real(n: usize, cutoff: Cutoff, u: Vec<Poly>) -> Result<Self, CycleError> {
        let v = u.iter().map(Poly::conj).collect();
        Self::new(n, cutoff, u, v)
    }

    /// The `(1,1)` part of `dγ`, as a [`TestForm`]:
    /// `α_jk = (∂v_k/∂x_j − ∂u_j/∂x̄_k) / i`.
    ///
    /// The smooth cutoff vanishes to third order on the boundary, so the
    /// derivative of the cut-off form has no boundary term; a sharp cutoff
    /// would, and is rejected.
    pub fn d11(&self) -> Result<TestForm, CycleError> {
        if !self.cutoff.smooth {
            return Err(CycleError::InvalidForm(
                "exterior derivative of a sharply cut-off form".into(),
            ));
        }
        let n = self.n;
        let mut terms = Vec::new();
        let minus_i = C64::new(0.0, -1.0);
        for j in 0..n {
            for k in 0..n {
                let c = &self.v[k].d(j) + &self.u[j].d_bar(k).scale(C64::new(-1.0, 0.0));
                if !c.is_zero() {
                    terms.push(FormTerm {
                        rows: vec![j],
                        cols: vec![k],
                        coeff: c.scale(minus_i),
                    });
                }
            }
        }
        Ok(TestForm {
            n,
            q: 1,
            cutoff: Cutoff {
                smooth: false,
                ..self.cutoff.clone()
            },
            terms,
        })
    }

    /// Evaluates `(u(x), v(x))` inside the cutoff, zero outside.
    pub fn coefficients(&self, x: &[C64]) -> (Vec<C64>, Vec<C64>) {
        if !self.cutoff.inside(&x[..1]) {
            return (vec![C64::new(0.0, 0.0); self.n], vec![C64::new(0.0, 0.0); self.n]);
        }
        (
            self.u.iter().map(|p| p.eval(x)).collect(),
            self.v.iter().map(|p| p.eval(x)).collect(),
        )
    }
}

/// Twenty `(q,q)`-forms used to compare currents: a smooth cutoff of radius
/// `radius` around the leaf origin times real and complex polynomial
/// coefficients, on diagonal and off-diagonal index pairs.
pub fn form_battery(n: usize, q: usize, radius: f64) -> Result<Vec<TestForm>, CycleError> {
    let cutoff = Cutoff {
        center: vec![C64::new(0.0, 0.0); q],
        radius,
        smooth: true,
    };
    let subsets = subsets(n, q);
    let one = Poly::constant(n, C64::new(1.0, 0.0));
    let half = C64::new(0.5, 0.0);
    let normal = q.min(n - 1);
    let zn = Poly::var(n, normal);
    let znb = Poly::var_bar(n, normal);
    let z0 = Poly::var(n, 0);
    let z0b = Poly::var_bar(n, 0);
    let coeffs = [
        one.clone(),
        (&zn + &znb).scale(half),
        &zn * &znb,
        zn.clone(),
        &z0 * &znb,
        &zn * &zn,
        &one + &(&z0 + &z0b).scale(half),
        (&zn * &zn).conj(),
        &(&zn * &znb) * &(&z0 * &z0b),
        (&zn + &znb).scale(C64::new(0.0, 0.5)),
    ];
    let mut out = Vec::with_capacity(20);
    for k in 0..20 {
        let coeff = coeffs[k % coeffs.len()].clone();
        let (rows, cols) = if k < coeffs.len() || subsets.len() == 1 {
            (subsets[0].clone(), subsets[0].clone())
        } else {
            let i = k % subsets.len();
            let j = (k / 2 + 1) % subsets.len();
            (subsets[i].clone(), subsets[j].clone())
        };
        out.push(TestForm::new(n, q, cutoff.clone(), vec![FormTerm { rows, cols, coeff }])?);
    }
    Ok(out)
}

fn subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(q);
    fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    rec(0, n, q, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn poly_arithmetic_and_derivatives() {
        let n = 2;
        let x = Poly::var(n, 0);
        let yb = Poly::var_bar(n, 1);
        let p = &(&x * &x) * &yb; // x0² x̄1
        let pt = [c(0.3, 0.1), c(-0.2, 0.5)];
        let want = pt[0] * pt[0] * pt[1].conj();
        assert!((p.eval(&pt) - want).norm() < 1e-15);
        assert!((p.d(0).eval(&pt) - pt[0] * 2.0 * pt[1].conj()).norm() < 1e-15);
        assert!((p.d_bar(1).eval(&pt) - pt[0] * pt[0]).norm() < 1e-15);
        assert!(p.d(1).is_zero());
        assert!((p.conj().eval(&pt) - want.conj()).norm() < 1e-15);
    }

    #[test]
    fn bump_vanishes_on_the_boundary() {
        let cut = Cutoff {
            center: vec![c(0.1, 0.0)],
            radius: 0.5,
            smooth: true,
        };
        let b = cut.bump(2);
        assert!((b.eval(&[c(0.1, 0.0), c(0.3, 0.3)]) - 1.0).norm() < 1e-15);
        assert!(b.eval(&[c(0.6, 0.0), c(0.0, 0.0)]).norm() < 1e-15);
    }

    #[test]
    fn coded_derivative_matches_finite_differences() {
        // Wirtinger derivatives by central differences in real coordinates.
        let n = 2;
        let cut = Cutoff {
            center: vec![c(0.0, 0.0)],
            radius: 0.8,
            smooth: true,
        };
        let u = vec![&Poly::var(n, 1) * &Poly::var_bar(n, 0), Poly::var(n, 0).scale(c(0.0, 1.0))];
        let g = OneForm::real(n, cut, u).unwrap();
        let d = g.d11().unwrap();
        let pt = [c(0.2, -0.1), c(0.3, 0.4)];
        let h = 1e-5;
        let coeff = |x: &[C64], which: usize, j: usize| -> C64 {
            let (u, v) = g.coefficients(x);
            if which == 0 { u[j] } else { v[j] }
        };
        let shift = |k: usize, dz: C64| {
            let mut p = pt.to_vec();
            p[k] += dz;
            p
        };
        let dd = |which: usize, j: usize, k: usize, bar: bool| -> C64 {
            let dx = (coeff(&shift(k, c(h, 0.0)), which, j) - coeff(&shift(k, c(-h, 0.0)), which, j)) / (2.0 * h);
            let dy = (coeff(&shift(k, c(0.0, h)), which, j) - coeff(&shift(k, c(0.0, -h)), which, j)) / (2.0 * h);
            if bar {
                (dx + c(0.0, 1.0) * dy) * 0.5
            } else {
                (dx - c(0.0, 1.0) * dy) * 0.5
            }
        };
        for j in 0..n {
            for k in 0..n {
                let fd = (dd(1, k, j, false) - dd(0, j, k, true)) / c(0.0, 1.0);
                let coded = d
                    .terms
                    .iter()
                    .find(|t| t.rows == vec![j] && t.cols == vec![k])
                    .map_or(c(0.0, 0.0), |t| t.coeff.eval(&pt));
                assert!((fd - coded).norm() < 1e-6, "({j},{k}): {fd} vs {coded}");
            }
        }
    }

    #[test]
    fn battery_has_twenty_forms() {
        let b = form_battery(2, 1, 0.9).unwrap();
        assert_eq!(b.len(), 20);
        assert!(b.iter().any(|f| f.terms[0].rows != f.terms[0].cols));
    }

    #[test]
    fn bad_index_sets() {
        let cut = Cutoff {
            center: vec![c(0.0, 0.0)],
            radius: 0.5,
            smooth: false,
        };
        let t = FormTerm {
            rows: vec![2],
            cols: vec![0],
            coeff: Poly::constant(2, c(1.0, 0.0)),
        };
        assert!(TestForm::new(2, 1, cut, vec![t]).is_err());
    }
}
