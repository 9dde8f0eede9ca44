//! Shared domain types: grid, fields, nonlinearity, potential, parameters.

pub mod field;
pub mod grid;
pub mod interp;
pub mod nonlinearity;
pub mod potential;
pub mod spectral;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use field::{ComplexField, RealField};
pub use grid::SpatialGrid;
pub use nonlinearity::NonlinearitySpec;
pub use potential::PotentialSpec;

use crate::error::{Error, Result};

/// Grid spacing needed at unit scale; at scale ε the requirement is `ε * REFERENCE_SPACING`.
pub const REFERENCE_SPACING: f64 = 0.125;

/// Floor applied to `u^2` wherever the momentum density is divided by it.
pub const DENSITY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    mass: f64,
    eps: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, eps: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Parameter(format!("mass must be positive (got {mass})")));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Parameter(format!("epsilon must be positive (got {eps})")));
        }
        Ok(Self { mass, eps })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.mass, eps)
    }
}

/// Everything that defines the equation on a given grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub grid: SpatialGrid,
    pub nonlinearity: NonlinearitySpec,
    pub potential: PotentialSpec,
    pub params: PhysicalParams,
}

impl Model {
    pub fn new(
        grid: SpatialGrid,
        nonlinearity: NonlinearitySpec,
        potential: PotentialSpec,
        params: PhysicalParams,
    ) -> Result<Self> {
        if nonlinearity.dim() != grid.dim() {
            return Err(Error::Parameter(format!(
                "nonlinearity is set up for N = {} but the grid has N = {}",
                nonlinearity.dim(),
                grid.dim()
            )));
        }
        if nonlinearity.eps() != params.eps() {
            return Err(Error::Parameter(format!(
                "nonlinearity scale {} differs from physical epsilon {}",
                nonlinearity.eps(),
                params.eps()
            )));
        }
        potential.validate(grid.dim())?;
        Ok(Self {
            grid,
            nonlinearity,
            potential,
            params,
        })
    }

    pub fn mass(&self) -> f64 {
        self.params.mass()
    }

    pub fn eps(&self) -> f64 {
        self.params.eps()
    }
}

/// Fails unless every axis of `grid` has spacing at most `ε * REFERENCE_SPACING`.
pub fn check_resolution(grid: &SpatialGrid, eps: f64) -> Result<()> {
    let required = eps * REFERENCE_SPACING;
    let actual = grid.max_spacing();
    if actual > required * (1.0 + 1e-12) {
        return Err(Error::Resolution { required, actual });
    }
    Ok(())
}

/// `u(x) = ε^{-N/2} v(x/ε)` sampled on `target`.
pub fn rescale_field(v: &ComplexField, eps: f64, target: &SpatialGrid) -> Result<ComplexField> {
    rescale_about(v, eps, target, &vec![0.0; target.dim()])
}

/// `u(x) = ε^{-N/2} v((x - c)/ε)` with `x - c` taken as the minimum image on `target`.
///
/// `v` is read as zero outside its own box and is rolled off smoothly near the box edge.
pub fn rescale_about(
    v: &ComplexField,
    eps: f64,
    target: &SpatialGrid,
    center: &[f64],
) -> Result<ComplexField> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive (got {eps})")));
    }
    if v.grid().dim() != target.dim() || center.len() != target.dim() {
        return Err(Error::Parameter("dimension mismatch in rescaling".into()));
    }
    if eps == 1.0 && v.grid() == target && center.iter().all(|c| *c == 0.0) {
        return Ok(v.clone());
    }
    check_resolution(target, eps)?;
    let source = v.grid();
    let map = |axis: usize, x: f64| target.wrap(axis, x - center[axis]) / eps;
    let mut samples = interp::resample(source, v.samples(), target, |axis, x| Some(map(axis, x)));
    let weights: Vec<Vec<f64>> = (0..target.dim())
        .map(|axis| {
            target
                .axis_coordinates(axis)
                .into_iter()
                .map(|x| edge_window(map(axis, x), source.extent(axis)))
                .collect()
        })
        .collect();
    let amp = eps.powf(-0.5 * target.dim() as f64);
    for (i, s) in samples.iter_mut().enumerate() {
        let idx = target.multi_index(i);
        let w: f64 = idx.iter().enumerate().map(|(a, &k)| weights[a][k]).product();
        *s *= amp * w;
    }
    ComplexField::new(target.clone(), samples, v.time())
}

/// Rolls the source profile off to zero over the outer tenth of each half-box
/// so that reading it outside its box does not leave a jump.
fn edge_window(y: f64, extent: f64) -> f64 {
    let start = 0.4 * extent;
    let t = ((y.abs() - start) / (0.5 * extent - start)).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// `Im(conj(psi) grad psi)`, one component per axis.
pub fn momentum_density(psi: &ComplexField) -> Vec<Vec<f64>> {
    let grad = spectral::gradient(psi.grid(), psi.samples());
    grad.iter()
        .map(|g| {
            psi.samples()
                .iter()
                .zip(g)
                .map(|(p, d)| (p.conj() * d).im)
                .collect()
        })
        .collect()
}

/// Total momentum `P = ∫ Im(conj(psi) grad psi)`.
pub fn total_momentum(psi: &ComplexField) -> Vec<f64> {
    momentum_density(psi)
        .iter()
        .map(|j| spectral::integrate(psi.grid(), j))
        .collect()
}

/// Multiplies `psi` by the plane wave `exp(i p·x)`.
pub fn boost(psi: &mut ComplexField, p: &[f64]) {
    let grid = psi.grid().clone();
    let samples = psi.samples_mut();
    grid.for_each_position(|i, x| {
        let phase: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
        samples[i] *= Complex64::from_polar(1.0, phase);
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &SpatialGrid, w: f64) -> ComplexField {
        let mut f = ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new((-x[0] * x[0] / (2.0 * w * w)).exp(), 0.0)
        });
        let n = f.l2_norm();
        f.scale(1.0 / n);
        f
    }

    #[test]
    fn rescale_identity_at_unit_scale() {
        let g = SpatialGrid::cubic(1, 40.0, 256).unwrap();
        let v = gaussian(&g, 2.0);
        assert_eq!(rescale_field(&v, 1.0, &g).unwrap(), v);
    }

    #[test]
    fn rescale_preserves_charge() {
        let src = SpatialGrid::cubic(1, 40.0, 512).unwrap();
        let tgt = SpatialGrid::cubic(1, 40.0, 2048).unwrap();
        let v = gaussian(&src, 2.0);
        for eps in [0.5, 0.25] {
            let u = rescale_field(&v, eps, &tgt).unwrap();
            assert!((u.charge() - 1.0).abs() < 1e-12, "eps = {eps}");
        }
    }

    #[test]
    fn rescale_rejects_coarse_grid() {
        let g = SpatialGrid::cubic(1, 40.0, 256).unwrap();
        let v = gaussian(&g, 2.0);
        assert!(matches!(
            rescale_field(&v, 0.25, &g),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn momentum_density_of_boosted_field() {
        let g = SpatialGrid::cubic(1, 40.0, 512).unwrap();
        let mut psi = gaussian(&g, 1.5);
        assert!(momentum_density(&psi)[0].iter().all(|v| v.abs() < 1e-14));
        let p = 2.0 * std::f64::consts::PI * 3.0 / 40.0;
        boost(&mut psi, &[p]);
        let j = momentum_density(&psi);
        for (ji, s) in j[0].iter().zip(psi.samples()) {
            assert!((ji - p * s.norm_sqr()).abs() < 1e-12);
        }
        assert!((total_momentum(&psi)[0] - p).abs() < 1e-12);
    }
}
