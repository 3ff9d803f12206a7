use serde::Serialize;

use super::{
    composite_grid, factorial, gauss_grid, gram_det, jet, pairwise_sum, HoloMap, NumericsError,
    QuadratureGrid, Region, C64,
};

/// Graph volume with the quadrature error estimate from one refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Value on the unrefined grid.
    pub coarse: f64,
    /// Whether the indicator changed value on the grid, triggering refinement.
    pub refined: bool,
    /// `|value − coarse|` when refined, else 0.
    pub error_estimate: f64,
}

/// Volume density `det(I + JᴴJ)` of the graph of `f` at `x`.
pub fn graph_density<M: HoloMap + ?Sized>(f: &M, x: &[C64]) -> Result<f64, NumericsError> {
    let j = jet(f, x)?;
    Ok(gram_det(&j.jacobian, j.dim_out(), j.dim_in))
}

fn check_dims<M: HoloMap + ?Sized>(f: &M, domain: &Region) -> Result<(), NumericsError> {
    if domain.dim() != f.dim_in() {
        return Err(NumericsError::Dimension {
            expected: f.dim_in(),
            got: domain.dim(),
        });
    }
    Ok(())
}

/// Returns the volume sum and whether the indicator was mixed on the grid.
fn volume_on_grid<M, I>(f: &M, grid: &QuadratureGrid, indicator: &I) -> Result<(f64, bool), NumericsError>
where
    M: HoloMap + ?Sized,
    I: Fn(&[C64], &[C64]) -> bool + ?Sized,
{
    let mut terms = Vec::with_capacity(grid.len());
    let mut hits = 0usize;
    for (x, w) in grid.iter() {
        let fx = f.eval(x)?;
        if indicator(x, &fx) {
            hits += 1;
            terms.push(w * graph_density(f, x)?);
        }
    }
    Ok((pairwise_sum(&terms), hits > 0 && hits < grid.len()))
}

/// `∫ det(I + JᴴJ)` over the points `x` of `domain` with `indicator(x, f(x))`.
pub fn graph_volume<M, I>(
    f: &M,
    domain: &Region,
    indicator: &I,
    order: usize,
) -> Result<f64, NumericsError>
where
    M: HoloMap + ?Sized,
    I: Fn(&[C64], &[C64]) -> bool + ?Sized,
{
    check_dims(f, domain)?;
    let grid = gauss_grid(order, domain)?;
    Ok(volume_on_grid(f, &grid, indicator)?.0)
}

/// [`graph_volume`] with one level of dyadic refinement when the
/// indicator is not constant on the grid.
pub fn graph_volume_refined<M, I>(
    f: &M,
    domain: &Region,
    indicator: &I,
    order: usize,
) -> Result<VolumeEstimate, NumericsError>
where
    M: HoloMap + ?Sized,
    I: Fn(&[C64], &[C64]) -> bool + ?Sized,
{
    check_dims(f, domain)?;
    let grid = gauss_grid(order, domain)?;
    let (coarse, mixed) = volume_on_grid(f, &grid, indicator)?;
    if !mixed {
        return Ok(VolumeEstimate {
            value: coarse,
            coarse,
            refined: false,
            error_estimate: 0.0,
        });
    }
    let fine = composite_grid(order, domain, 2)?;
    let (value, _) = volume_on_grid(f, &fine, indicator)?;
    Ok(VolumeEstimate {
        value,
        coarse,
        refined: true,
        error_estimate: (value - coarse).abs(),
    })
}

/// Mass of the graph of `f` over `domain` inside `region`, measured
/// against `β^m` with `β = i Σ dz_j ∧ dz̄_j`: `m!·2^m` times the
/// Riemannian volume.
pub fn trace_mass_graph<M: HoloMap + ?Sized>(
    f: &M,
    domain: &Region,
    region: &Region,
    order: usize,
) -> Result<f64, NumericsError> {
    let m = f.dim_in();
    if region.dim() != m + f.dim_out() {
        return Err(NumericsError::Dimension {
            expected: m + f.dim_out(),
            got: region.dim(),
        });
    }
    let domain = domain.clip_to(&region.project(0..m));
    let inside = |x: &[C64], fx: &[C64]| {
        let p: Vec<C64> = x.iter().chain(fx).copied().collect();
        region.contains(&p)
    };
    let vol = graph_volume(f, &domain, &inside, order)?;
    Ok(factorial(m) * 2f64.powi(m as i32) * vol)
}
