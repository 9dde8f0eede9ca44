use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::spectral;
use crate::model::{ComplexField, SpatialGrid};

/// Halo-mask margin: a sample is in the halo when `1 + MARGIN < ρ < 2 - MARGIN`.
pub const HALO_MARGIN: f64 = 1e-12;

pub const PLATEAU: f64 = 3.0;

/// Radial kernel `a_η`: `3` on `|s| ≤ r₋`, `0` on `|s| ≥ r₊`, a cubic
/// smoothstep in between, with `r± = η^{1/8}(1 ± η^{1/8})`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityKernel {
    eta: f64,
    r_minus: f64,
    r_plus: f64,
    grid: SpatialGrid,
    spectrum: Vec<Complex64>,
}

impl DensityKernel {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn inner_radius(&self) -> f64 {
        self.r_minus
    }

    pub fn outer_radius(&self) -> f64 {
        self.r_plus
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn profile(&self, s: f64) -> f64 {
        let t = ((s - self.r_minus) / (self.r_plus - self.r_minus)).clamp(0.0, 1.0);
        PLATEAU * (1.0 - t * t * (3.0 - 2.0 * t))
    }

    /// `|a'(s)|`.
    pub fn slope(&self, s: f64) -> f64 {
        let w = self.r_plus - self.r_minus;
        let t = (s - self.r_minus) / w;
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        PLATEAU * 6.0 * t * (1.0 - t) / w
    }

    /// Largest slope of the smoothstep, `2.25 η^{-1/4}`.
    pub fn gradient_bound(&self) -> f64 {
        1.5 * PLATEAU / (self.r_plus - self.r_minus)
    }

    /// Largest `|∇a|` over the grid samples.
    pub fn max_sampled_gradient(&self) -> f64 {
        let mut worst: f64 = 0.0;
        self.grid.for_each_position(|_, x| {
            worst = worst.max(self.slope(norm(x)));
        });
        worst
    }

    /// Inner radius `η^{1/8}(1 - 2η^{1/8})` of the annulus expected to contain the halo (clamped at 0).
    pub fn annulus_inner(&self) -> f64 {
        let e8 = self.eta.powf(0.125);
        (e8 * (1.0 - 2.0 * e8)).max(0.0)
    }

    /// Support radius `R_ε = η^{1/8}(1 + 2η^{1/8})`.
    pub fn support_radius(&self) -> f64 {
        let e8 = self.eta.powf(0.125);
        e8 * (1.0 + 2.0 * e8)
    }

    /// Circular convolution `a ∗ f`.
    pub fn convolve(&self, f: &[f64]) -> Vec<f64> {
        let mut s = spectral::forward_real(&self.grid, f);
        s.iter_mut().zip(&self.spectrum).for_each(|(a, b)| *a *= b);
        spectral::inverse_real(&self.grid, s)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn build_kernel(eta: f64, grid: &SpatialGrid) -> Result<DensityKernel> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Parameter(format!("eta must lie in (0, 1) (got {eta})")));
    }
    let e8 = eta.powf(0.125);
    let r_minus = e8 * (1.0 - e8);
    let r_plus = e8 * (1.0 + e8);
    let required = r_plus / 4.0;
    if grid.max_spacing() > required {
        return Err(Error::Resolution {
            required,
            actual: grid.max_spacing(),
        });
    }
    let mut kernel = DensityKernel {
        eta,
        r_minus,
        r_plus,
        grid: grid.clone(),
        spectrum: Vec::new(),
    };
    // sample the kernel with its center on index 0 so the convolution is unshifted
    let mut samples = vec![0.0; grid.len()];
    for (flat, v) in samples.iter_mut().enumerate() {
        let offset: Vec<f64> = grid
            .multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| grid.wrap(axis, i as f64 * grid.spacing(axis)))
            .collect();
        *v = kernel.profile(norm(&offset)) * grid.cell_volume();
    }
    kernel.spectrum = spectral::forward_real(grid, &samples);
    Ok(kernel)
}

/// `ρ = a ∗ |ψ|²`, negatives from roundoff clipped to zero.
pub fn density_rho(psi: &ComplexField, kernel: &DensityKernel) -> Vec<f64> {
    assert_eq!(psi.grid(), kernel.grid(), "kernel built on another grid");
    let mut rho = kernel.convolve(&psi.density());
    rho.iter_mut().for_each(|v| *v = v.max(0.0));
    rho
}

/// `χ = sqrt(φ(ρ))` with `φ(s) = clamp(s - 1, 0, 1)`.
pub fn cutoff_chi(rho: &[f64]) -> Vec<f64> {
    rho.iter().map(|&r| (r - 1.0).clamp(0.0, 1.0).sqrt()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonDecomposition {
    pub rho: Vec<f64>,
    pub chi: Vec<f64>,
    /// `Ψ_ε = χ ψ`.
    pub soliton: ComplexField,
    /// `(1 - χ) ψ`.
    pub wave: ComplexField,
    /// `1 < ρ < 2`.
    pub halo: Vec<bool>,
    pub support_radius: f64,
    /// True when `χ ≡ 0`: the soliton has dispersed.
    pub degenerate: bool,
}

impl SolitonDecomposition {
    pub fn grid(&self) -> &SpatialGrid {
        self.soliton.grid()
    }

    pub fn halo_count(&self) -> usize {
        self.halo.iter().filter(|h| **h).count()
    }

    /// Whether every halo sample lies within `[inner, outer]` of `center`.
    pub fn halo_within(&self, center: &[f64], inner: f64, outer: f64) -> bool {
        let grid = self.grid();
        let mut ok = true;
        grid.for_each_position(|i, x| {
            if self.halo[i] {
                let r = norm(&grid.displacement(x, center));
                ok &= r >= inner && r <= outer;
            }
        });
        ok
    }
}

pub fn decompose(psi: &ComplexField, kernel: &DensityKernel) -> SolitonDecomposition {
    let rho = density_rho(psi, kernel);
    let chi = cutoff_chi(&rho);
    let soliton: Vec<Complex64> = psi.samples().iter().zip(&chi).map(|(p, c)| p * c).collect();
    let wave: Vec<Complex64> = psi
        .samples()
        .iter()
        .zip(&chi)
        .map(|(p, c)| p * (1.0 - c))
        .collect();
    let halo = rho
        .iter()
        .map(|&r| r > 1.0 + HALO_MARGIN && r < 2.0 - HALO_MARGIN)
        .collect();
    let degenerate = chi.iter().all(|c| *c == 0.0);
    let grid = psi.grid().clone();
    let t = psi.time();
    SolitonDecomposition {
        rho,
        chi,
        soliton: ComplexField::new(grid.clone(), soliton, t).expect("same grid"),
        wave: ComplexField::new(grid, wave, t).expect("same grid"),
        halo,
        support_radius: kernel.support_radius(),
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_branches() {
        let chi = cutoff_chi(&[0.5, 1.5, 3.0]);
        assert_eq!(chi[0], 0.0);
        assert!((chi[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(chi[2], 1.0);
    }

    #[test]
    fn kernel_shape() {
        let g = SpatialGrid::cubic(1, 20.0, 1024).unwrap();
        let k = build_kernel(0.2, &g).unwrap();
        assert_eq!(k.profile(0.0), 3.0);
        assert_eq!(k.profile(k.outer_radius()), 0.0);
        assert_eq!(k.profile(k.outer_radius() + 1.0), 0.0);
        let mut last = 3.0;
        for i in 0..200 {
            let v = k.profile(i as f64 * 0.01);
            assert!(v <= last);
            last = v;
        }
        assert!(k.max_sampled_gradient() <= k.gradient_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_needs_resolution() {
        let g = SpatialGrid::cubic(1, 80.0, 16).unwrap();
        assert!(matches!(build_kernel(0.2, &g), Err(Error::Resolution { .. })));
    }

    #[test]
    fn point_mass_reproduces_kernel() {
        let g = SpatialGrid::cubic(1, 20.0, 1024).unwrap();
        let k = build_kernel(0.3, &g).unwrap();
        let i0 = 600;
        let mut psi = ComplexField::zeros(g.clone());
        psi.samples_mut()[i0] = Complex64::new((1.0 / g.spacing(0)).sqrt(), 0.0);
        let rho = density_rho(&psi, &k);
        let x0 = g.coordinate(0, i0);
        for (i, r) in rho.iter().enumerate() {
            let expect = k.profile((g.coordinate(0, i) - x0).abs());
            assert!((r - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_field_is_degenerate() {
        let g = SpatialGrid::cubic(1, 20.0, 256).unwrap();
        let k = build_kernel(0.3, &g).unwrap();
        let psi = ComplexField::from_fn(g.clone(), |_| Complex64::new((1.0f64 / 20.0).sqrt(), 0.0));
        let dec = decompose(&psi, &k);
        assert!(dec.degenerate);
        assert_eq!(dec.halo_count(), 0);
    }
}
