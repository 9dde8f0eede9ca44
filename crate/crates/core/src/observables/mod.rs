//! First integrals, stress tensor, density/cutoff decomposition, soliton
//! quantities and halo terms.
//!
//! Throughout, `j = Im(conj(ψ) ∇ψ)` stands for `u²∇S` and `|∇S|²u²` is
//! `|j|²/u²` with `u²` floored at [`DENSITY_FLOOR`].

mod kernel;
mod soliton;
mod tracker;

pub use kernel::{build_kernel, cutoff_chi, decompose, density_rho, DensityKernel, SolitonDecomposition};
pub use soliton::{
    concentration_point, halo_terms, refined_soliton, soliton_state, surface_pressure_literal, ConcentrationPoint,
    HaloTerms, SolitonState,
};
pub use tracker::{TrackSample, Tracker};

use serde::{Deserialize, Serialize};

use crate::model::spectral;
use crate::model::{momentum_density, ComplexField, Model, SpatialGrid, DENSITY_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `E_ε = ∫ |∇ψ|²/2m + W_ε(|ψ|) + V|ψ|²`, evaluated directly.
    pub total: f64,
    /// `J_ε = ∫ |∇u|²/2m + W_ε(u)`.
    pub internal: f64,
    /// `G = kinetic + potential`.
    pub dynamical: f64,
    /// `∫ |∇S|² u² / 2m`.
    pub kinetic: f64,
    /// `∫ V u²`.
    pub potential: f64,
    pub charge: f64,
    pub momentum: Vec<f64>,
}

pub fn energy_report(psi: &ComplexField, model: &Model) -> EnergyReport {
    let grid = psi.grid();
    let mass = model.mass();
    let w = &model.nonlinearity;
    let grad = spectral::gradient(grid, psi.samples());
    let v = model.potential.sample(grid);
    let n = grid.len();
    let mut total = vec![0.0; n];
    let mut internal = vec![0.0; n];
    let mut kinetic = vec![0.0; n];
    let mut potential = vec![0.0; n];
    let mut density = vec![0.0; n];
    let mut current = vec![vec![0.0; n]; grid.dim()];
    for i in 0..n {
        let p = psi.samples()[i];
        let u2 = p.norm_sqr();
        let u = u2.sqrt();
        let floor = u2.max(DENSITY_FLOOR);
        let mut grad2 = 0.0;
        let mut re2 = 0.0;
        let mut im2 = 0.0;
        for (axis, g) in grad.iter().enumerate() {
            let z = p.conj() * g[i];
            grad2 += g[i].norm_sqr();
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            current[axis][i] = z.im;
        }
        let wu = w.w_eps(u);
        total[i] = grad2 / (2.0 * mass) + wu + v[i] * u2;
        internal[i] = re2 / floor / (2.0 * mass) + wu;
        kinetic[i] = im2 / floor / (2.0 * mass);
        potential[i] = v[i] * u2;
        density[i] = u2;
    }
    let kinetic = spectral::integrate(grid, &kinetic);
    let potential = spectral::integrate(grid, &potential);
    EnergyReport {
        total: spectral::integrate(grid, &total),
        internal: spectral::integrate(grid, &internal),
        dynamical: kinetic + potential,
        kinetic,
        potential,
        charge: spectral::integrate(grid, &density),
        momentum: current.iter().map(|j| spectral::integrate(grid, j)).collect(),
    }
}

/// Symmetric `N×N` tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct StressField {
    dim: usize,
    components: Vec<Vec<f64>>,
}

impl StressField {
    fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            components: vec![vec![0.0; len]; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, j: usize, k: usize) -> &[f64] {
        &self.components[j * self.dim + k]
    }

    fn set_pair(&mut self, j: usize, k: usize, i: usize, v: f64) {
        self.components[j * self.dim + k][i] = v;
        self.components[k * self.dim + j][i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(∇·T)_k = Σ_j ∂_j T_jk`.
    pub fn divergence(&self, grid: &SpatialGrid) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|k| {
                let column: Vec<Vec<f64>> =
                    (0..self.dim).map(|j| self.component(j, k).to_vec()).collect();
                spectral::divergence_real(grid, &column)
            })
            .collect()
    }

    pub fn max_difference(&self, other: &StressField) -> f64 {
        self.components
            .iter()
            .flatten()
            .zip(other.components.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `T_jk = -(1/m) Re(∂_jψ ∂_kψ̄) + δ_jk [ (1/4m) Δ|ψ|² - ½ W_ε'(u) u + W_ε(u) ]`.
///
/// With this sign `∂_t j = -u²∇V + ∇·T`.
pub fn stress_tensor(psi: &ComplexField, model: &Model) -> StressField {
    let grid = psi.grid();
    let grad = spectral::gradient(grid, psi.samples());
    stress_from(psi, model, |i, j, k| (grad[j][i] * grad[k][i].conj()).re)
}

/// Same tensor through the polar split `∂_j u ∂_k u + u² ∂_j S ∂_k S`.
pub fn stress_tensor_polar(psi: &ComplexField, model: &Model) -> StressField {
    let grid = psi.grid();
    let grad = spectral::gradient(grid, psi.samples());
    let z: Vec<Vec<num_complex::Complex64>> = grad
        .iter()
        .map(|g| {
            g.iter()
                .zip(psi.samples())
                .map(|(d, p)| p.conj() * d)
                .collect()
        })
        .collect();
    let density = psi.density();
    stress_from(psi, model, |i, j, k| {
        let floor = density[i].max(DENSITY_FLOOR);
        (z[j][i].re * z[k][i].re + z[j][i].im * z[k][i].im) / floor
    })
}

fn stress_from(
    psi: &ComplexField,
    model: &Model,
    kinetic: impl Fn(usize, usize, usize) -> f64,
) -> StressField {
    let grid = psi.grid();
    let mass = model.mass();
    let density = psi.density();
    let lap = spectral::laplacian_real(grid, &density);
    let dim = grid.dim();
    let mut out = StressField::zeros(dim, grid.len());
    for i in 0..grid.len() {
        let u = density[i].sqrt();
        let diag = lap[i] / (4.0 * mass) - model.nonlinearity.pressure(u);
        for j in 0..dim {
            for k in j..dim {
                let mut v = -kinetic(i, j, k) / mass;
                if j == k {
                    v += diag;
                }
                out.set_pair(j, k, i, v);
            }
        }
    }
    out
}

/// Pointwise check of `∂_t j = -u²∇V + ∇·T` from three consecutive snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumBalance {
    /// `max |∂_t j - (-u²∇V + ∇·T)|` with `∂_t j` by centered differences.
    pub residual: f64,
    /// `max(|u²∇V|, |∇·T|)` over samples and axes.
    pub scale: f64,
}

impl MomentumBalance {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

pub fn momentum_balance(
    prev: &ComplexField,
    current: &ComplexField,
    next: &ComplexField,
    model: &Model,
) -> MomentumBalance {
    let grid = current.grid();
    let dt2 = next.time() - prev.time();
    let j_prev = momentum_density(prev);
    let j_next = momentum_density(next);
    let div_t = stress_tensor(current, model).divergence(grid);
    let grad_v = model.potential.sample_gradient(grid);
    let density = current.density();
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for axis in 0..grid.dim() {
        for i in 0..grid.len() {
            let force = -density[i] * grad_v[axis][i];
            let lhs = (j_next[axis][i] - j_prev[axis][i]) / dt2;
            residual = residual.max((lhs - force - div_t[axis][i]).abs());
            scale = scale.max(force.abs()).max(div_t[axis][i].abs());
        }
    }
    MomentumBalance { residual, scale }
}
