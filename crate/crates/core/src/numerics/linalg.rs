use super::C64;

/// Determinant of a square complex matrix (row-major), by Gaussian
/// elimination with partial pivoting.
pub fn complex_det(a: &[C64], n: usize) -> C64 {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].norm().total_cmp(&m[j * n + col].norm()))
            .unwrap_or(col);
        let p = m[pivot * n + col];
        if p.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= factor * v;
            }
        }
    }
    det
}

/// `det(I_m + JᴴJ)` for a row-major `N × m` matrix `J`.
pub fn gram_det(jac: &[C64], n_out: usize, m: usize) -> f64 {
    debug_assert_eq!(jac.len(), n_out * m);
    match m {
        0 => 1.0,
        1 => 1.0 + jac.iter().map(C64::norm_sqr).sum::<f64>(),
        _ => {
            let mut g = vec![C64::new(0.0, 0.0); m * m];
            for a in 0..m {
                for b in 0..m {
                    let mut s = if a == b {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    for i in 0..n_out {
                        s += jac[i * m + a].conj() * jac[i * m + b];
                    }
                    g[a * m + b] = s;
                }
            }
            complex_det(&g, m).re
        }
    }
}

/// Coefficients `c_0..c_m` of the polynomial `s ↦ det(s·a + b)` for
/// `m × m` matrices, recovered by exact interpolation at `s = 0..m`.
///
/// `c_j` is the mixed discriminant pairing `j` copies of `a` with `m − j`
/// copies of `b`, scaled by the binomial coefficient.
pub fn mixed_discriminants(a: &[C64], b: &[C64], m: usize) -> Vec<C64> {
    let samples: Vec<C64> = (0..=m)
        .map(|s| {
            let s = s as f64;
            let mat: Vec<C64> = a.iter().zip(b).map(|(x, y)| x * s + y).collect();
            complex_det(&mat, m)
        })
        .collect();
    // Newton divided differences on nodes 0..m, then expand to monomials.
    let mut coef = samples.clone();
    for level in 1..=m {
        for i in (level..=m).rev() {
            coef[i] = (coef[i] - coef[i - 1]) / level as f64;
        }
    }
    let mut poly = vec![C64::new(0.0, 0.0); m + 1];
    for k in (0..=m).rev() {
        // poly = poly * (s - k) + coef[k]
        let mut next = vec![C64::new(0.0, 0.0); m + 1];
        for (d, p) in poly.iter().enumerate() {
            if d < m {
                next[d + 1] += *p;
            }
            next[d] -= *p * k as f64;
        }
        next[0] += coef[k];
        poly = next;
    }
    poly
}
