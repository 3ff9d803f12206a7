use rand::Rng;
use serde::Serialize;

use super::{factorial, NumericsError, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// Product of discs `|x_j - c_j| <= r_j`.
    Polydisc,
    /// Product of squares `|Re(x_j - c_j)| <= r_j`, `|Im(x_j - c_j)| <= r_j`.
    Box,
    /// Euclidean ball `sum |x_j - c_j|^2 <= r^2` (all radii equal).
    Ball,
}

/// A closed, bounded region of `C^m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    kind: RegionKind,
    center: Vec<C64>,
    radii: Vec<f64>,
}

impl Region {
    fn new(kind: RegionKind, center: Vec<C64>, radii: Vec<f64>) -> Result<Self, NumericsError> {
        if center.len() != radii.len() {
            return Err(NumericsError::InvalidRegion(format!(
                "{} center coordinates but {} radii",
                center.len(),
                radii.len()
            )));
        }
        if center.is_empty() {
            return Err(NumericsError::InvalidRegion("zero-dimensional region".into()));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(NumericsError::InvalidRegion(format!(
                "radius {r} is not strictly positive"
            )));
        }
        Ok(Region {
            kind,
            center,
            radii,
        })
    }

    pub fn polydisc(center: Vec<C64>, radii: Vec<f64>) -> Result<Self, NumericsError> {
        Self::new(RegionKind::Polydisc, center, radii)
    }

    /// Polydisc centered at the origin.
    pub fn centered_polydisc(radii: &[f64]) -> Result<Self, NumericsError> {
        Self::polydisc(vec![C64::new(0.0, 0.0); radii.len()], radii.to_vec())
    }

    pub fn cube(center: Vec<C64>, half_widths: Vec<f64>) -> Result<Self, NumericsError> {
        Self::new(RegionKind::Box, center, half_widths)
    }

    pub fn ball(center: Vec<C64>, radius: f64) -> Result<Self, NumericsError> {
        let radii = vec![radius; center.len()];
        Self::new(RegionKind::Ball, center, radii)
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Membership in the closed region.
    pub fn contains(&self, p: &[C64]) -> bool {
        debug_assert_eq!(p.len(), self.dim());
        match self.kind {
            RegionKind::Polydisc => p
                .iter()
                .zip(&self.center)
                .zip(&self.radii)
                .all(|((x, c), r)| (x - c).norm_sqr() <= r * r),
            RegionKind::Box => p.iter().zip(&self.center).zip(&self.radii).all(|((x, c), r)| {
                let d = x - c;
                d.re.abs() <= *r && d.im.abs() <= *r
            }),
            RegionKind::Ball => {
                let s: f64 = p
                    .iter()
                    .zip(&self.center)
                    .map(|(x, c)| (x - c).norm_sqr())
                    .sum();
                s <= self.radii[0] * self.radii[0]
            }
        }
    }

    /// Lebesgue volume in `R^{2m}`.
    pub fn volume(&self) -> f64 {
        let pi = std::f64::consts::PI;
        match self.kind {
            RegionKind::Polydisc => self.radii.iter().map(|r| pi * r * r).product(),
            RegionKind::Box => self.radii.iter().map(|r| 4.0 * r * r).product(),
            RegionKind::Ball => {
                let m = self.dim();
                pi.powi(m as i32) * self.radii[0].powi(2 * m as i32) / factorial(m)
            }
        }
    }

    /// The coordinate block `range` of the region. For balls and
    /// polydiscs this is the exact projection; boxes project to boxes.
    pub fn project(&self, range: std::ops::Range<usize>) -> Region {
        Region {
            kind: self.kind,
            center: self.center[range.clone()].to_vec(),
            radii: self.radii[range].to_vec(),
        }
    }

    /// Smallest polydisc with the same center that contains the region.
    pub fn bounding_polydisc(&self) -> Region {
        let scale = match self.kind {
            RegionKind::Box => std::f64::consts::SQRT_2,
            _ => 1.0,
        };
        Region {
            kind: RegionKind::Polydisc,
            center: self.center.clone(),
            radii: self.radii.iter().map(|r| r * scale).collect(),
        }
    }

    /// Largest sup norm of a point of the region.
    pub fn sup_radius(&self) -> f64 {
        let scale = match self.kind {
            RegionKind::Box => std::f64::consts::SQRT_2,
            _ => 1.0,
        };
        self.center
            .iter()
            .zip(&self.radii)
            .fold(0.0_f64, |acc, (c, r)| acc.max(c.norm() + r * scale))
    }

    /// Shrinks a quadrature domain to the part that can meet `bound`.
    ///
    /// Only concentric polydisc pairs are intersected; any other
    /// combination returns `self` unchanged, which is always valid because
    /// callers still apply the exact membership test.
    pub fn clip_to(&self, bound: &Region) -> Region {
        let bound = bound.bounding_polydisc();
        if self.kind != RegionKind::Polydisc || bound.dim() != self.dim() {
            return self.clone();
        }
        let concentric = self
            .center
            .iter()
            .zip(&bound.center)
            .all(|(a, b)| (a - b).norm() <= 1e-15);
        if !concentric {
            return self.clone();
        }
        Region {
            kind: RegionKind::Polydisc,
            center: self.center.clone(),
            radii: self
                .radii
                .iter()
                .zip(&bound.radii)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }

    /// Uniform sample from the region.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        match self.kind {
            RegionKind::Polydisc => self
                .center
                .iter()
                .zip(&self.radii)
                .map(|(c, r)| {
                    let rad = r * rng.random::<f64>().sqrt();
                    let th = std::f64::consts::TAU * rng.random::<f64>();
                    c + C64::from_polar(rad, th)
                })
                .collect(),
            RegionKind::Box => self
                .center
                .iter()
                .zip(&self.radii)
                .map(|(c, r)| {
                    let x = (2.0 * rng.random::<f64>() - 1.0) * r;
                    let y = (2.0 * rng.random::<f64>() - 1.0) * r;
                    c + C64::new(x, y)
                })
                .collect(),
            RegionKind::Ball => {
                let cube = Region {
                    kind: RegionKind::Box,
                    center: self.center.clone(),
                    radii: self.radii.clone(),
                };
                loop {
                    let p = cube.sample_uniform(rng);
                    if self.contains(&p) {
                        return p;
                    }
                }
            }
        }
    }
}
