use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::CohomologyError;
use crate::cycle::FoliatedCycleLocal;
use crate::numerics::{factorial, gauss_grid, mixed_discriminants, Region, C64};

/// The `(1,1)`-class `c = i Σ H_{jk} dz_j ∧ dz̄_k` on a complex torus of
/// dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianClass {
    pub n: usize,
    h: Vec<C64>,
}

impl HermitianClass {
    /// Row-major `n × n` entries; Hermitian to `10⁻¹²`.
    pub fn new(n: usize, h: Vec<C64>) -> Result<Self, CohomologyError> {
        if h.len() != n * n {
            return Err(CohomologyError::Mismatch(format!("{} entries for a {n}x{n} matrix", h.len())));
        }
        for j in 0..n {
            for k in 0..n {
                let d = (h[j * n + k] - h[k * n + j].conj()).norm();
                if d > 1e-12 || !h[j * n + k].re.is_finite() || !h[j * n + k].im.is_finite() {
                    return Err(CohomologyError::NotHermitian { row: j, col: k, defect: d });
                }
            }
        }
        Ok(HermitianClass { n, h })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, CohomologyError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CohomologyError::Mismatch("matrix is not square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn entry(&self, j: usize, k: usize) -> C64 {
        self.h[j * self.n + k]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.n, self.n, &self.h);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// All eigenvalues `≥ −10⁻¹⁰`.
    pub fn is_positive(&self) -> bool {
        self.eigenvalues().iter().all(|e| *e >= -1e-10)
    }
}

/// Largest `2 × 2` minor of `H` in modulus; the coefficients of `c ∧ c`
/// are these minors up to a factor 2.
pub fn herm_wedge_square_norm(c: &HermitianClass) -> f64 {
    let n = c.n;
    let mut best = 0.0_f64;
    for j in 0..n {
        for l in j + 1..n {
            for k in 0..n {
                for m in k + 1..n {
                    let minor = c.entry(j, k) * c.entry(l, m) - c.entry(j, m) * c.entry(l, k);
                    best = best.max(minor.norm());
                }
            }
        }
    }
    best
}

/// `γ` with `c = iγ ∧ γ̄`, normalized so its largest entry is real and
/// positive.
pub fn rank1_decompose(c: &HermitianClass) -> Result<Vec<C64>, CohomologyError> {
    let n = c.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = DMatrix::from_row_slice(n, n, &c.h);
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        return Err(CohomologyError::NotPositive { min_eigenvalue: min });
    }
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    let l2 = if n > 1 { eig.eigenvalues[order[1]] } else { 0.0 };
    if l2 > 1e-10 * l1 {
        return Err(CohomologyError::RankTooHigh { lambda1: l1, lambda2: l2 });
    }
    let u = eig.eigenvectors.column(order[0]);
    let big = (0..n).max_by(|a, b| u[*a].norm().total_cmp(&u[*b].norm())).unwrap();
    let phase = if u[big].norm() > 0.0 { u[big].conj() / u[big].norm() } else { C64::new(1.0, 0.0) };
    let gamma: Vec<C64> = (0..n).map(|j| u[j] * phase * l1.sqrt()).collect();
    let scale = c.h.iter().fold(0.0_f64, |s, x| s.max(x.norm()));
    let err = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .map(|(j, k)| (c.entry(j, k) - gamma[j] * gamma[k].conj()).norm())
        .fold(0.0_f64, f64::max);
    if err > 1e-8 * scale {
        return Err(CohomologyError::RankTooHigh { lambda1: l1, lambda2: l2 });
    }
    Ok(gamma)
}

/// Element of `Λ^•(C^{2n})` on generators `dz_1 < … < dz_n < dz̄_1 < … <
/// dz̄_n`, indexed `0..2n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtElement {
    pub n: usize,
    terms: BTreeMap<Vec<usize>, C64>,
}

impl ExtElement {
    pub fn zero(n: usize) -> Self {
        ExtElement { n, terms: BTreeMap::new() }
    }

    /// `coeff · e_{i_1} ∧ … ∧ e_{i_k}` for indices in any order.
    pub fn monomial(n: usize, coeff: C64, indices: &[usize]) -> Result<Self, CohomologyError> {
        if let Some(i) = indices.iter().find(|i| **i >= 2 * n) {
            return Err(CohomologyError::Mismatch(format!("generator {i} with n = {n}")));
        }
        let mut e = Self::zero(n);
        if let Some((sorted, sign)) = canonical(indices) {
            e.add_term(sorted, coeff * sign);
        }
        Ok(e)
    }

    pub fn dz(n: usize, j: usize) -> Self {
        Self::monomial(n, C64::new(1.0, 0.0), &[j]).expect("index in range")
    }

    pub fn dzbar(n: usize, j: usize) -> Self {
        Self::monomial(n, C64::new(1.0, 0.0), &[n + j]).expect("index in range")
    }

    fn add_term(&mut self, key: Vec<usize>, c: C64) {
        let v = self.terms.get(&key).copied().unwrap_or_default() + c;
        if v == C64::new(0.0, 0.0) {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], C64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn coefficient(&self, indices: &[usize]) -> C64 {
        self.terms.get(indices).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        self.terms.values().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    pub fn plus(&self, other: &ExtElement) -> ExtElement {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), *v);
        }
        out
    }

    pub fn scaled(&self, c: C64) -> ExtElement {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }
}

/// Sorted indices and the sign of the sorting permutation; `None` on a
/// repeated generator.
fn canonical(indices: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

pub fn ext_wedge(x: &ExtElement, y: &ExtElement) -> Result<ExtElement, CohomologyError> {
    if x.n != y.n {
        return Err(CohomologyError::Mismatch(format!("Lambda(C^{}) and Lambda(C^{})", 2 * x.n, 2 * y.n)));
    }
    let mut out = ExtElement::zero(x.n);
    for (kx, cx) in &x.terms {
        for (ky, cy) in &y.terms {
            let joined: Vec<usize> = kx.iter().chain(ky).copied().collect();
            if let Some((key, sign)) = canonical(&joined) {
                out.add_term(key, cx * cy * sign);
            }
        }
    }
    Ok(out)
}

/// `i Σ H_{jk} dz_j ∧ dz̄_k`.
pub fn hermitian_to_ext(c: &HermitianClass) -> ExtElement {
    let n = c.n;
    let mut out = ExtElement::zero(n);
    for j in 0..n {
        for k in 0..n {
            let v = c.entry(j, k) * C64::new(0.0, 1.0);
            if v != C64::new(0.0, 0.0) {
                out.add_term(vec![j, n + k], v);
            }
        }
    }
    out
}

/// Mass of `T ∧ iγ∧γ̄` over the flow box for a constant `(1,0)`-form
/// `γ = Σ γ_j dz_j`, measured against `β^{q−1}`.
pub fn directedness_residual(t: &FoliatedCycleLocal, gamma: &[C64], order: usize) -> Result<f64, CohomologyError> {
    let family = t.family().clone();
    let q = family.leaf_dim();
    let c = family.codim();
    let n = q + c;
    if gamma.len() != n {
        return Err(CohomologyError::Mismatch(format!("(1,0)-form on C^{} for a chart in C^{n}", gamma.len())));
    }
    let grid = gauss_grid(order, &Region::centered_polydisc(&vec![1.0; q])?)?;
    let norm = factorial(q - 1) * 2f64.powi(q as i32);
    let mass = t.measure.integrate(|a| {
        let zero = C64::new(0.0, 0.0);
        let mut value = vec![zero; c];
        let mut dh = vec![zero; c * q];
        let mut terms = Vec::with_capacity(grid.len());
        for (z, w) in grid.iter() {
            family.jet_into(a, z, &mut value, &mut dh);
            // rows of D = [I; Dh]
            let d = |row: usize, col: usize| {
                if row < q {
                    if row == col { C64::new(1.0, 0.0) } else { zero }
                } else {
                    dh[(row - q) * q + col]
                }
            };
            let g: Vec<C64> = (0..q).map(|k| (0..n).map(|j| gamma[j] * d(j, k)).sum()).collect();
            let mut am = vec![zero; q * q];
            let mut bm = vec![zero; q * q];
            for k in 0..q {
                for l in 0..q {
                    am[k * q + l] = g[k] * g[l].conj();
                    bm[k * q + l] = (0..n).map(|j| d(j, k) * d(j, l).conj()).sum();
                }
            }
            let coeffs = mixed_discriminants(&am, &bm, q);
            terms.push(w * coeffs[1].re);
        }
        Ok(crate::numerics::pairwise_sum(&terms))
    })?;
    Ok((norm * mass).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusReport {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub positive: bool,
    pub wedge_square_norm: f64,
    pub ext_square_norm: f64,
    /// `γ` as `(re, im)` pairs when `c = iγ∧γ̄`.
    pub gamma: Option<Vec<(f64, f64)>>,
    pub note: String,
}

/// Everything the CLI prints for a Hermitian class.
pub fn torus_report(c: &HermitianClass) -> Result<TorusReport, CohomologyError> {
    let e = hermitian_to_ext(c);
    let sq = ext_wedge(&e, &e)?;
    let (gamma, note) = match rank1_decompose(c) {
        Ok(g) => (Some(g.iter().map(|z| (z.re, z.im)).collect()), "rank one: c = i gamma ^ conj(gamma)".to_string()),
        Err(e) => (None, e.to_string()),
    };
    Ok(TorusReport {
        n: c.n,
        eigenvalues: c.eigenvalues(),
        positive: c.is_positive(),
        wedge_square_norm: herm_wedge_square_norm(c),
        ext_square_norm: sq.max_norm(),
        gamma,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn outer(v: &[C64]) -> HermitianClass {
        let n = v.len();
        let h = (0..n * n).map(|i| v[i / n] * v[i % n].conj()).collect();
        HermitianClass::new(n, h).unwrap()
    }

    #[test]
    fn wedge_signs() {
        let n = 2;
        let x = ExtElement::dz(n, 0);
        assert!(ext_wedge(&x, &x).unwrap().is_zero());
        let a = ext_wedge(&ExtElement::dz(n, 0), &ExtElement::dzbar(n, 0)).unwrap();
        let b = ext_wedge(&ExtElement::dz(n, 1), &ExtElement::dzbar(n, 1)).unwrap();
        let ab = ext_wedge(&a, &b).unwrap();
        assert_eq!(ab.coefficient(&[0, 1, 2, 3]), c(-1.0, 0.0));
        assert_eq!(ab.terms().count(), 1);
        // odd elements anticommute, even ones commute
        let y = ExtElement::dz(n, 1);
        let xy = ext_wedge(&x, &y).unwrap();
        assert_eq!(xy.plus(&ext_wedge(&y, &x).unwrap()), ExtElement::zero(n));
        assert_eq!(ext_wedge(&a, &b).unwrap(), ext_wedge(&b, &a).unwrap());
    }

    #[test]
    fn rank_one_class() {
        let h = outer(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(herm_wedge_square_norm(&h), 0.0);
        let g = rank1_decompose(&h).unwrap();
        assert!((g[0] - c(1.0, 0.0)).norm() < 1e-12 && (g[1] - c(1.0, 0.0)).norm() < 1e-12);
        let e = hermitian_to_ext(&h);
        assert!(ext_wedge(&e, &e).unwrap().max_norm() < 1e-15);
    }

    #[test]
    fn identity_is_not_rank_one() {
        let id = HermitianClass::new(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(herm_wedge_square_norm(&id), 1.0);
        match rank1_decompose(&id) {
            Err(CohomologyError::RankTooHigh { lambda2, .. }) => assert!((lambda2 - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let e = hermitian_to_ext(&id);
        assert!((ext_wedge(&e, &e).unwrap().max_norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_and_invalid() {
        let z = HermitianClass::new(2, vec![c(0.0, 0.0); 4]).unwrap();
        assert_eq!(rank1_decompose(&z).unwrap(), vec![c(0.0, 0.0); 2]);
        assert_eq!(herm_wedge_square_norm(&z), 0.0);
        assert!(HermitianClass::new(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).is_err());
        let neg = HermitianClass::new(1, vec![c(-1.0, 0.0)]).unwrap();
        assert!(!neg.is_positive());
        assert!(matches!(rank1_decompose(&neg), Err(CohomologyError::NotPositive { .. })));
    }
}
