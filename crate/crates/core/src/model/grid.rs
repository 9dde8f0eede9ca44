use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS_PER_AXIS: usize = 16;
pub const MAX_DIM: usize = 3;

/// Uniform periodic grid covering `[-L/2, L/2)^N`.
///
/// Samples are stored row-major: axis 0 varies slowest. Along each axis the
/// coordinate of index `i` is `-L/2 + i * dx`, so the origin is the sample
/// `n/2` and the grid is reflection-symmetric about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    extents: Vec<f64>,
    points: Vec<usize>,
}

impl SpatialGrid {
    pub fn new(extents: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let dim = extents.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!(
                "grid dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if points.len() != dim {
            return Err(Error::Parameter(
                "grid extents and point counts differ in length".into(),
            ));
        }
        for (axis, (&l, &n)) in extents.iter().zip(&points).enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Parameter(format!(
                    "axis {axis}: extent must be positive (got {l})"
                )));
            }
            if n < MIN_POINTS_PER_AXIS || !n.is_power_of_two() {
                return Err(Error::Parameter(format!(
                    "axis {axis}: point count must be a power of two >= {MIN_POINTS_PER_AXIS} (got {n})"
                )));
            }
        }
        Ok(Self { extents, points })
    }

    /// Same extent and point count on every axis.
    pub fn cubic(dim: usize, extent: f64, points: usize) -> Result<Self> {
        Self::new(vec![extent; dim], vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn points_on(&self, axis: usize) -> usize {
        self.points[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.points[axis] as f64
    }

    /// Largest spacing over all axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance between consecutive samples of `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        -0.5 * self.extents[axis] + index as f64 * self.spacing(axis)
    }

    /// Coordinates of every sample along one axis.
    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis])
            .map(|i| self.coordinate(axis, i))
            .collect()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = rest % self.points[axis];
            rest /= self.points[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.points)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coordinate(axis, i))
            .collect()
    }

    /// Calls `f(flat, position)` for every sample in storage order.
    pub fn for_each_position(&self, mut f: impl FnMut(usize, &[f64])) {
        let dim = self.dim();
        let mut idx = vec![0usize; dim];
        let mut pos: Vec<f64> = (0..dim).map(|a| self.coordinate(a, 0)).collect();
        for flat in 0..self.len() {
            f(flat, &pos);
            for axis in (0..dim).rev() {
                idx[axis] += 1;
                if idx[axis] < self.points[axis] {
                    pos[axis] = self.coordinate(axis, idx[axis]);
                    break;
                }
                idx[axis] = 0;
                pos[axis] = self.coordinate(axis, 0);
            }
        }
    }

    /// Minimum-image displacement `x - origin` along `axis`.
    pub fn wrap(&self, axis: usize, displacement: f64) -> f64 {
        let l = self.extents[axis];
        displacement - l * (displacement / l).round()
    }

    /// Minimum-image displacement vector from `origin` to `x`.
    pub fn displacement(&self, x: &[f64], origin: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(origin)
            .enumerate()
            .map(|(a, (xi, oi))| self.wrap(a, xi - oi))
            .collect()
    }

    /// Same axes with the point count of every axis multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.extents.clone(),
            self.points.iter().map(|n| n * factor).collect(),
        )
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.extents)
            .all(|(xi, l)| *xi >= -0.5 * l && *xi < 0.5 * l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_axes() {
        assert!(SpatialGrid::cubic(1, 80.0, 8).is_err());
        assert!(SpatialGrid::cubic(1, 80.0, 100).is_err());
        assert!(SpatialGrid::cubic(4, 80.0, 16).is_err());
        assert!(SpatialGrid::cubic(1, -1.0, 16).is_err());
        assert!(SpatialGrid::new(vec![1.0, 1.0], vec![16]).is_err());
    }

    #[test]
    fn origin_is_a_sample() {
        let g = SpatialGrid::cubic(1, 80.0, 4096).unwrap();
        assert_eq!(g.coordinate(0, 2048), 0.0);
        assert_eq!(g.coordinate(0, 0), -40.0);
        assert!((g.spacing(0) - 80.0 / 4096.0).abs() < 1e-15);
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = SpatialGrid::new(vec![1.0, 2.0, 3.0], vec![16, 32, 16]).unwrap();
        for flat in [0, 1, 17, 511, g.len() - 1] {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        let mut visited = 0;
        g.for_each_position(|flat, pos| {
            assert_eq!(pos, g.position(flat).as_slice());
            visited += 1;
        });
        assert_eq!(visited, g.len());
    }

    #[test]
    fn wrap_gives_minimum_image() {
        let g = SpatialGrid::cubic(1, 10.0, 16).unwrap();
        assert!((g.wrap(0, 9.0) + 1.0).abs() < 1e-12);
        assert!((g.wrap(0, -6.0) - 4.0).abs() < 1e-12);
        assert!((g.wrap(0, 2.0) - 2.0).abs() < 1e-12);
    }
}
