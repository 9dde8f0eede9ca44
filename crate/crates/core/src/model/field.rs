use num_complex::Complex64;

use super::grid::SpatialGrid;
use super::spectral;
use crate::error::{Error, Result};

/// Complex wave function sampled on a periodic grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpatialGrid,
    samples: Vec<Complex64>,
    time: f64,
}

impl ComplexField {
    pub fn new(grid: SpatialGrid, samples: Vec<Complex64>, time: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "field has {} samples but the grid has {}",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            samples,
            time,
        })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        let samples = vec![Complex64::default(); grid.len()];
        Self {
            grid,
            samples,
            time: 0.0,
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut samples = vec![Complex64::default(); grid.len()];
        grid.for_each_position(|i, x| samples[i] = f(x));
        Self {
            grid,
            samples,
            time: 0.0,
        }
    }

    pub fn from_real(field: &RealField) -> Self {
        Self {
            grid: field.grid().clone(),
            samples: field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    /// `|psi|^2` per sample.
    pub fn density(&self) -> Vec<f64> {
        self.samples.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.samples.iter().map(|v| v.norm()).collect()
    }

    /// Hylenic charge `C = ∫|psi|^2`.
    pub fn charge(&self) -> f64 {
        spectral::integrate(&self.grid, &self.density())
    }

    pub fn l2_norm(&self) -> f64 {
        self.charge().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.samples.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn l2_distance(&self, other: &ComplexField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let diff: Vec<f64> = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .collect();
        spectral::integrate(&self.grid, &diff).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Flat index of the largest modulus (first one on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, v) in self.samples.iter().enumerate() {
            let d = v.norm_sqr();
            if d > best_val {
                best_val = d;
                best = i;
            }
        }
        best
    }
}

/// Real scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "field has {} samples but the grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_position(|i, x| values[i] = f(x));
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        spectral::integrate(&self.grid, &self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        spectral::integrate(&self.grid, &sq).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
