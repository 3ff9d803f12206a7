use serde::Serialize;

use super::CohomologyError;

/// `c·ω^p` in `H^•(P^n, R) = R[ω]/(ω^{n+1})`. Degrees above `n` only carry
/// the zero class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnClass {
    pub n: usize,
    pub p: usize,
    pub c: f64,
}

impl PnClass {
    pub fn new(n: usize, p: usize, c: f64) -> Result<Self, CohomologyError> {
        if p > n {
            return Err(CohomologyError::Degree(format!("omega^{p} on P^{n}")));
        }
        if !c.is_finite() {
            return Err(CohomologyError::Degree(format!("coefficient {c}")));
        }
        Ok(PnClass { n, p, c })
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0
    }
}

pub fn pn_cup(x: &PnClass, y: &PnClass) -> Result<PnClass, CohomologyError> {
    if x.n != y.n {
        return Err(CohomologyError::Mismatch(format!("P^{} and P^{}", x.n, y.n)));
    }
    let p = x.p + y.p;
    Ok(PnClass {
        n: x.n,
        p,
        c: if p > x.n { 0.0 } else { x.c * y.c },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PnOutcome {
    /// The self-intersection of the cycle's class is nonzero, so no diffuse
    /// foliated cycle of this dimension exists.
    Contradiction,
    NoObstruction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PnVerdict {
    pub n: usize,
    pub q: usize,
    /// `{T} = c·ω^{n−q}` with `c` the mass of the cycle.
    pub cycle_class: PnClass,
    pub square: PnClass,
    /// Self-intersection forced by diffuseness.
    pub required_square: f64,
    pub outcome: PnOutcome,
}

/// Confronts `{T}² = c²ω^{2n−2q}` with the vanishing self-intersection of a
/// diffuse cycle directed by a Lipschitz lamination of dimension `q`.
pub fn pn_verdict(n: usize, q: usize, mass: f64) -> Result<PnVerdict, CohomologyError> {
    if q == 0 || q >= n {
        return Err(CohomologyError::Degree(format!("leaf dimension {q} on P^{n} must lie in 1..n-1")));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(CohomologyError::Degree(format!("cycle mass {mass} must be positive")));
    }
    let class = PnClass::new(n, n - q, mass)?;
    let square = pn_cup(&class, &class)?;
    let outcome = if square.is_zero() {
        PnOutcome::NoObstruction
    } else {
        PnOutcome::Contradiction
    };
    Ok(PnVerdict {
        n,
        q,
        cycle_class: class,
        square,
        required_square: 0.0,
        outcome,
    })
}

/// `aF + bC` on the Hirzebruch surface `Σ_n`, with fiber `F` and the curve
/// `C` of self-intersection `−n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HirzebruchClass {
    pub n: u32,
    pub a: f64,
    pub b: f64,
}

impl HirzebruchClass {
    pub fn fiber(n: u32) -> Self {
        HirzebruchClass { n, a: 1.0, b: 0.0 }
    }

    pub fn section(n: u32) -> Self {
        HirzebruchClass { n, a: 0.0, b: 1.0 }
    }
}

pub fn hirz_cup(x: &HirzebruchClass, y: &HirzebruchClass) -> Result<f64, CohomologyError> {
    if x.n != y.n {
        return Err(CohomologyError::Mismatch(format!("Sigma_{} and Sigma_{}", x.n, y.n)));
    }
    Ok(x.a * y.b + y.a * x.b - x.n as f64 * x.b * y.b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HirzBranch {
    /// `c² ≠ 0`: not the class of a diffuse cycle of a Lipschitz lamination.
    OutsideHypothesis,
    /// `c² = 0` but a pairing with `F` or `C` is negative.
    Rejected,
    Accepted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HirzCertificate {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub square: f64,
    pub dot_f: f64,
    pub dot_c: f64,
    pub branch: HirzBranch,
    pub reason: String,
    /// Surviving class, e.g. `3F`; on `Σ_0` either ruling.
    pub class: Option<String>,
}

/// Runs the class `aF + bC` of a would-be diffuse cycle through the
/// constraints `c² = 0`, `c·F ≥ 0`, `c·C ≥ 0`.
///
/// For `n ≥ 1`, `c² = b(2a − bn) = 0` leaves `b = 0` or `2a = bn`; the
/// second gives `c·C = −bn/2 < 0` unless `b = 0`. So accepted classes are
/// multiples of `F`.
pub fn hirz_classify(n: u32, a: f64, b: f64) -> Result<HirzCertificate, CohomologyError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(CohomologyError::Degree(format!("probe ({a}, {b})")));
    }
    let c = HirzebruchClass { n, a, b };
    let square = hirz_cup(&c, &c)?;
    let dot_f = hirz_cup(&c, &HirzebruchClass::fiber(n))?;
    let dot_c = hirz_cup(&c, &HirzebruchClass::section(n))?;
    let tol = 1e-12 * (1.0 + a.abs() + b.abs()).powi(2);
    let mut cert = HirzCertificate {
        n,
        a,
        b,
        square,
        dot_f,
        dot_c,
        branch: HirzBranch::Accepted,
        reason: String::new(),
        class: None,
    };
    if square.abs() > tol {
        cert.branch = HirzBranch::OutsideHypothesis;
        cert.reason = format!("c^2 = 2ab - n b^2 = {square} is not zero");
        return Ok(cert);
    }
    if n == 0 {
        // P^1 × P^1: c² = 2ab = 0, both rulings are fibers
        if a < -tol || b < -tol {
            cert.branch = HirzBranch::Rejected;
            cert.reason = format!("negative pairing: c.F = {dot_f}, c.C = {dot_c}");
        } else if b.abs() <= tol {
            cert.reason = "b = 0: pullback from the first factor".into();
            cert.class = Some(format!("{a}F1"));
        } else {
            cert.reason = "a = 0: pullback from the second factor".into();
            cert.class = Some(format!("{b}F2"));
        }
        return Ok(cert);
    }
    if dot_f < -tol {
        cert.branch = HirzBranch::Rejected;
        cert.reason = format!("c.F = b = {b} < 0");
    } else if b.abs() > tol {
        cert.branch = HirzBranch::Rejected;
        cert.reason = format!("b != 0 forces 2a = bn, so c.C = -bn/2 = {dot_c} < 0");
    } else if dot_c < -tol {
        cert.branch = HirzBranch::Rejected;
        cert.reason = format!("c.C = a = {a} < 0");
    } else {
        cert.reason = "b = 0: the class is a multiple of the fiber".into();
        cert.class = Some(format!("{a}F"));
    }
    Ok(cert)
}
