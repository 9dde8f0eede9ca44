//! Fourier transforms, spectral derivatives and quadrature on a [`SpatialGrid`].
//!
//! Transforms act axis by axis on row-major data. The inverse transform is
//! normalized so that `inverse(forward(x)) == x`. Derivatives are Fourier
//! multipliers; odd-order multipliers drop the Nyquist mode.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::SpatialGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place 1D transform of a single line.
pub fn fft_line(line: &mut [Complex64], inverse: bool) {
    plan(line.len(), inverse).process(line);
}

fn transform(grid: &SpatialGrid, data: &mut [Complex64], inverse: bool) {
    assert_eq!(data.len(), grid.len(), "sample count does not match grid");
    for axis in 0..grid.dim() {
        let n = grid.points_on(axis);
        let stride = grid.stride(axis);
        let fft = plan(n, inverse);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        if stride == 1 {
            for line in data.chunks_exact_mut(n) {
                fft.process_with_scratch(line, &mut scratch);
            }
        } else {
            let mut line = vec![Complex64::default(); n];
            for block in data.chunks_exact_mut(n * stride) {
                for offset in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = block[offset + i * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        block[offset + i * stride] = *v;
                    }
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

pub fn forward(grid: &SpatialGrid, data: &mut [Complex64]) {
    transform(grid, data, false);
}

pub fn inverse(grid: &SpatialGrid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

pub fn forward_real(grid: &SpatialGrid, data: &[f64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(grid, &mut out);
    out
}

/// Inverse transform keeping only the real part.
pub fn inverse_real(grid: &SpatialGrid, mut spectrum: Vec<Complex64>) -> Vec<f64> {
    inverse(grid, &mut spectrum);
    spectrum.into_iter().map(|v| v.re).collect()
}

/// Angular wavenumbers of one axis in FFT order.
pub fn wavenumbers(grid: &SpatialGrid, axis: usize) -> Vec<f64> {
    let n = grid.points_on(axis);
    let base = 2.0 * PI / grid.extent(axis);
    (0..n)
        .map(|i| {
            let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            base * m
        })
        .collect()
}

/// Wavenumbers for first derivatives: the Nyquist entry is zeroed.
pub fn derivative_wavenumbers(grid: &SpatialGrid, axis: usize) -> Vec<f64> {
    let mut k = wavenumbers(grid, axis);
    let n = k.len();
    k[n / 2] = 0.0;
    k
}

/// Calls `f(flat, k)` for every mode in storage order.
pub fn for_each_wavevector(grid: &SpatialGrid, mut f: impl FnMut(usize, &[f64])) {
    let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| wavenumbers(grid, a)).collect();
    let dim = grid.dim();
    let mut idx = vec![0usize; dim];
    let mut k: Vec<f64> = ks.iter().map(|v| v[0]).collect();
    for flat in 0..grid.len() {
        f(flat, &k);
        for axis in (0..dim).rev() {
            idx[axis] += 1;
            if idx[axis] < grid.points_on(axis) {
                k[axis] = ks[axis][idx[axis]];
                break;
            }
            idx[axis] = 0;
            k[axis] = ks[axis][0];
        }
    }
}

/// `|k|^2` for every mode in storage order.
pub fn wavenumber_squared(grid: &SpatialGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for_each_wavevector(grid, |flat, k| out[flat] = k.iter().map(|v| v * v).sum());
    out
}

/// Multiplies a spectrum by `i k_axis` (Nyquist dropped).
fn differentiate_spectrum(grid: &SpatialGrid, spectrum: &[Complex64], axis: usize) -> Vec<Complex64> {
    let k = derivative_wavenumbers(grid, axis);
    let stride = grid.stride(axis);
    let n = grid.points_on(axis);
    spectrum
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            let i = (flat / stride) % n;
            v * Complex64::new(0.0, k[i])
        })
        .collect()
}

/// Spectral gradient of a complex field, one component per axis.
pub fn gradient(grid: &SpatialGrid, data: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut spectrum = data.to_vec();
    forward(grid, &mut spectrum);
    gradient_from_spectrum(grid, &spectrum)
}

pub fn gradient_from_spectrum(grid: &SpatialGrid, spectrum: &[Complex64]) -> Vec<Vec<Complex64>> {
    (0..grid.dim())
        .map(|axis| {
            let mut d = differentiate_spectrum(grid, spectrum, axis);
            inverse(grid, &mut d);
            d
        })
        .collect()
}

pub fn gradient_real(grid: &SpatialGrid, data: &[f64]) -> Vec<Vec<f64>> {
    let spectrum = forward_real(grid, data);
    gradient_real_from_spectrum(grid, &spectrum)
}

pub fn gradient_real_from_spectrum(grid: &SpatialGrid, spectrum: &[Complex64]) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|axis| inverse_real(grid, differentiate_spectrum(grid, spectrum, axis)))
        .collect()
}

/// Spectral divergence of a real vector field.
pub fn divergence_real(grid: &SpatialGrid, components: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(components.len(), grid.dim());
    let mut total = vec![Complex64::default(); grid.len()];
    for (axis, comp) in components.iter().enumerate() {
        let spectrum = forward_real(grid, comp);
        let d = differentiate_spectrum(grid, &spectrum, axis);
        total.iter_mut().zip(d).for_each(|(t, v)| *t += v);
    }
    inverse_real(grid, total)
}

pub fn laplacian(grid: &SpatialGrid, data: &[Complex64]) -> Vec<Complex64> {
    let mut spectrum = data.to_vec();
    forward(grid, &mut spectrum);
    let k2 = wavenumber_squared(grid);
    spectrum.iter_mut().zip(&k2).for_each(|(v, k2)| *v *= -k2);
    inverse(grid, &mut spectrum);
    spectrum
}

pub fn laplacian_real(grid: &SpatialGrid, data: &[f64]) -> Vec<f64> {
    let mut spectrum = forward_real(grid, data);
    let k2 = wavenumber_squared(grid);
    spectrum.iter_mut().zip(&k2).for_each(|(v, k2)| *v *= -k2);
    inverse_real(grid, spectrum)
}

/// Sum in a fixed pairwise order, independent of threading.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Trapezoidal (periodic) quadrature of sampled values.
pub fn integrate(grid: &SpatialGrid, values: &[f64]) -> f64 {
    pairwise_sum(values) * grid.cell_volume()
}

/// Quadrature of `f(flat)` over the grid.
pub fn integrate_with(grid: &SpatialGrid, f: impl Fn(usize) -> f64) -> f64 {
    let values: Vec<f64> = (0..grid.len()).map(f).collect();
    integrate(grid, &values)
}

/// Band-limited interpolation onto `grid.refined(factor)` by zero-padding
/// the spectrum. Nyquist modes are split evenly so coarse samples are kept.
pub fn upsample_real(grid: &SpatialGrid, data: &[f64], factor: usize) -> Vec<f64> {
    if factor == 1 {
        return data.to_vec();
    }
    let fine = grid.refined(factor).expect("refined grid");
    let spectrum = forward_real(grid, data);
    let mut padded = vec![Complex64::default(); fine.len()];
    let dim = grid.dim();
    let mut targets: Vec<(Vec<usize>, f64)> = Vec::with_capacity(1 << dim);
    for (flat, v) in spectrum.iter().enumerate() {
        targets.clear();
        targets.push((Vec::with_capacity(dim), 1.0));
        for (axis, &i) in grid.multi_index(flat).iter().enumerate() {
            let n = grid.points_on(axis);
            let big = n * factor;
            let mut next = Vec::with_capacity(targets.len() * 2);
            for (idx, w) in targets.drain(..) {
                if 2 * i == n {
                    for j in [i, big - i] {
                        let mut e = idx.clone();
                        e.push(j);
                        next.push((e, 0.5 * w));
                    }
                } else {
                    let mut e = idx;
                    e.push(if 2 * i < n { i } else { big - (n - i) });
                    next.push((e, w));
                }
            }
            targets = next;
        }
        for (idx, w) in &targets {
            padded[fine.flat_index(idx)] += v * *w;
        }
    }
    let scale = (factor as f64).powi(dim as i32);
    padded.iter_mut().for_each(|v| *v *= scale);
    inverse_real(&fine, padded)
}
