use serde::{Deserialize, Serialize};

use super::grid::SpatialGrid;
use crate::error::{Error, Result};

/// Closed-form external potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// `V = ½ k |x|^2`.
    Harmonic { stiffness: f64 },
    /// `V = g x_1` (slope along the first axis).
    Linear { slope: f64 },
    /// `V = V0 (1 - exp(-|x - c|^2 / (2 w^2)))`, so `0 <= V <= V0`.
    BoundedWell {
        depth: f64,
        width: f64,
        center: Vec<f64>,
    },
}

impl PotentialSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PotentialSpec::Zero | PotentialSpec::Linear { .. } => Ok(()),
            PotentialSpec::Harmonic { stiffness } => {
                if stiffness.is_finite() && *stiffness >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "harmonic stiffness must be non-negative (got {stiffness})"
                    )))
                }
            }
            PotentialSpec::BoundedWell {
                depth,
                width,
                center,
            } => {
                if !(depth.is_finite() && *depth >= 0.0) {
                    return Err(Error::Parameter(format!("well depth must be >= 0 (got {depth})")));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::Parameter(format!("well width must be > 0 (got {width})")));
                }
                if center.len() != dim {
                    return Err(Error::Parameter(format!(
                        "well center has {} components, expected {dim}",
                        center.len()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Harmonic { stiffness } => 0.5 * stiffness * norm_sqr(x),
            PotentialSpec::Linear { slope } => slope * x[0],
            PotentialSpec::BoundedWell {
                depth,
                width,
                center,
            } => depth * (1.0 - gauss(x, center, *width)),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PotentialSpec::Zero => vec![0.0; x.len()],
            PotentialSpec::Harmonic { stiffness } => x.iter().map(|v| stiffness * v).collect(),
            PotentialSpec::Linear { slope } => {
                let mut g = vec![0.0; x.len()];
                g[0] = *slope;
                g
            }
            PotentialSpec::BoundedWell {
                depth,
                width,
                center,
            } => {
                let e = gauss(x, center, *width);
                x.iter()
                    .zip(center)
                    .map(|(xi, ci)| depth * e * (xi - ci) / (width * width))
                    .collect()
            }
        }
    }

    /// Upper bound `V0`: exact for the bounded well, the grid maximum otherwise.
    pub fn bound(&self, grid: &SpatialGrid) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::BoundedWell { depth, .. } => *depth,
            _ => self.sample(grid).into_iter().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        grid.for_each_position(|i, x| out[i] = self.value(x));
        out
    }

    /// Gradient samples, one vector per axis.
    pub fn sample_gradient(&self, grid: &SpatialGrid) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; grid.len()]; grid.dim()];
        grid.for_each_position(|i, x| {
            for (axis, g) in self.gradient(x).into_iter().enumerate() {
                out[axis][i] = g;
            }
        });
        out
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialSpec::Zero)
    }
}

fn norm_sqr(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn gauss(x: &[f64], center: &[f64], width: f64) -> f64 {
    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / (2.0 * width * width)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        let well = PotentialSpec::BoundedWell {
            depth: 2.0,
            width: 1.5,
            center: vec![0.3, -0.2],
        };
        let harmonic = PotentialSpec::Harmonic { stiffness: 1.7 };
        let linear = PotentialSpec::Linear { slope: -0.4 };
        let x = [0.7, 1.1];
        let h = 1e-6;
        for v in [&well, &harmonic, &linear] {
            let g = v.gradient(&x);
            for axis in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                let fd = (v.value(&xp) - v.value(&xm)) / (2.0 * h);
                assert!((fd - g[axis]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bounded_well_stays_in_range() {
        let g = SpatialGrid::cubic(1, 40.0, 256).unwrap();
        let well = PotentialSpec::BoundedWell {
            depth: 3.0,
            width: 2.0,
            center: vec![1.0],
        };
        let v = well.sample(&g);
        assert!(v.iter().all(|&x| (0.0..=3.0).contains(&x)));
        assert_eq!(well.bound(&g), 3.0);
    }

    #[test]
    fn validation() {
        assert!(PotentialSpec::Harmonic { stiffness: -1.0 }.validate(1).is_err());
        let well = PotentialSpec::BoundedWell {
            depth: 1.0,
            width: 1.0,
            center: vec![0.0],
        };
        assert!(well.validate(2).is_err());
        assert!(well.validate(1).is_ok());
    }
}
