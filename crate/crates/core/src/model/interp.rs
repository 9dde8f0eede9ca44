//! Band-limited (trigonometric) resampling between grids.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::SpatialGrid;
use super::spectral;

/// Evaluates the trigonometric interpolant of one periodic line.
struct LineInterpolant {
    coeffs: Vec<Complex64>,
    extent: f64,
}

impl LineInterpolant {
    fn new(line: &[Complex64], extent: f64) -> Self {
        let n = line.len();
        let mut coeffs = line.to_vec();
        spectral::fft_line(&mut coeffs, false);
        let scale = 1.0 / n as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Self { coeffs, extent }
    }

    /// Value at source coordinate `y` in `[-L/2, L/2)`.
    fn eval(&self, y: f64) -> Complex64 {
        let n = self.coeffs.len();
        let theta = 2.0 * PI * (y + 0.5 * self.extent) / self.extent;
        let step = Complex64::from_polar(1.0, theta);
        let mut z = step;
        let mut acc = self.coeffs[0];
        for m in 1..n / 2 {
            if m % 32 == 0 {
                z = Complex64::from_polar(1.0, theta * m as f64);
            }
            acc += self.coeffs[m] * z + self.coeffs[n - m] * z.conj();
            z *= step;
        }
        acc + self.coeffs[n / 2] * (0.5 * n as f64 * theta).cos()
    }
}

/// Resamples `data` from `source` onto `target`.
///
/// `map(axis, x)` returns the source coordinate at which the target sample
/// with coordinate `x` on `axis` should be read, or `None` for zero.
/// Source coordinates outside `[-L/2, L/2)` also read as zero.
pub fn resample(
    source: &SpatialGrid,
    data: &[Complex64],
    target: &SpatialGrid,
    map: impl Fn(usize, f64) -> Option<f64>,
) -> Vec<Complex64> {
    assert_eq!(source.dim(), target.dim());
    assert_eq!(data.len(), source.len());
    let mut shape: Vec<usize> = source.points().to_vec();
    let mut current = data.to_vec();
    for axis in 0..source.dim() {
        let extent = source.extent(axis);
        let targets: Vec<Option<f64>> = target
            .axis_coordinates(axis)
            .into_iter()
            .map(|x| map(axis, x).filter(|y| *y >= -0.5 * extent && *y < 0.5 * extent))
            .collect();
        current = resample_axis(&current, &shape, axis, extent, &targets);
        shape[axis] = targets.len();
    }
    current
}

fn resample_axis(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    extent: f64,
    targets: &[Option<f64>],
) -> Vec<Complex64> {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let m = targets.len();
    let mut out = vec![Complex64::default(); outer * m * inner];
    let mut line = vec![Complex64::default(); n];
    for o in 0..outer {
        for i in 0..inner {
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[(o * n + j) * inner + i];
            }
            if line.iter().all(|v| *v == Complex64::default()) {
                continue;
            }
            let interp = LineInterpolant::new(&line, extent);
            for (t, y) in targets.iter().enumerate() {
                if let Some(y) = y {
                    out[(o * m + t) * inner + i] = interp.eval(*y);
                }
            }
        }
    }
    out
}
