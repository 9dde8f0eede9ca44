use serde::{Deserialize, Serialize};

use super::kernel::{density_rho, DensityKernel, SolitonDecomposition, HALO_MARGIN};
use super::stress_tensor;
use crate::error::{Error, Result};
use crate::ground_state::RescaledState;
use crate::model::spectral;
use crate::model::{momentum_density, ComplexField, Model, SpatialGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonState {
    /// Barycenter `q_ε = ∫ x |Ψ_ε|² / ∫ |Ψ_ε|²`.
    pub q: Vec<f64>,
    /// `p_ε = ∫ χ² j`.
    pub p: Vec<f64>,
    /// `m_ε = m ∫ |Ψ_ε|²`.
    pub mass: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaloTerms {
    pub k: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub f: Vec<f64>,
    pub t: f64,
}

impl HaloTerms {
    pub fn h(&self) -> Vec<f64> {
        self.h1.iter().zip(&self.h2).map(|(a, b)| a + b).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.k
            .iter()
            .chain(&self.h1)
            .chain(&self.h2)
            .chain(&self.f)
            .all(|v| v.is_finite())
    }
}

pub fn soliton_state(
    dec: &SolitonDecomposition,
    psi: &ComplexField,
    mass: f64,
) -> Result<SolitonState> {
    if dec.degenerate {
        return Err(Error::Degenerate);
    }
    let grid = psi.grid();
    let chi2: Vec<f64> = dec.chi.iter().map(|c| c * c).collect();
    let peak = grid.position(psi.peak_index());
    state_from(grid, &psi.density(), &chi2, &momentum_density(psi), &peak, mass, psi.time())
}

fn state_from(
    grid: &SpatialGrid,
    density: &[f64],
    chi2: &[f64],
    j: &[Vec<f64>],
    peak: &[f64],
    mass: f64,
    t: f64,
) -> Result<SolitonState> {
    let weight: Vec<f64> = chi2.iter().zip(density).map(|(c, d)| c * d).collect();
    let charge = spectral::integrate(grid, &weight);
    if !(charge > 0.0) {
        return Err(Error::Degenerate);
    }
    let q = barycenter(grid, &weight, peak);
    let p = j
        .iter()
        .map(|ja| spectral::integrate_with(grid, |i| chi2[i] * ja[i]))
        .collect();
    Ok(SolitonState {
        q,
        p,
        mass: mass * charge,
        t,
    })
}

/// First moment of `weight` with positions unwrapped within `L/4` of `peak`.
fn barycenter(grid: &SpatialGrid, weight: &[f64], peak: &[f64]) -> Vec<f64> {
    let dim = grid.dim();
    let mut moments = vec![vec![0.0; grid.len()]; dim];
    let mut mass = vec![0.0; grid.len()];
    grid.for_each_position(|i, x| {
        let d = grid.displacement(x, peak);
        if d.iter().enumerate().all(|(a, v)| v.abs() <= 0.25 * grid.extent(a)) {
            mass[i] = weight[i];
            for a in 0..dim {
                moments[a][i] = d[a] * weight[i];
            }
        }
    });
    let total = spectral::pairwise_sum(&mass);
    (0..dim)
        .map(|a| grid.wrap(a, peak[a] + spectral::pairwise_sum(&moments[a]) / total))
        .collect()
}

/// Sampled fields entering the soliton integrals.
struct Fields {
    grid: SpatialGrid,
    density: Vec<f64>,
    rho: Vec<f64>,
    j: Vec<Vec<f64>>,
    div_j: Vec<f64>,
    div_aj: Vec<f64>,
    div_t: Vec<Vec<f64>>,
}

impl Fields {
    fn new(psi: &ComplexField, rho: Vec<f64>, kernel: &DensityKernel, model: &Model) -> Self {
        let grid = psi.grid().clone();
        let j = momentum_density(psi);
        let div_j = spectral::divergence_real(&grid, &j);
        let div_aj = kernel.convolve(&div_j);
        let div_t = stress_tensor(psi, model).divergence(&grid);
        Self {
            density: psi.density(),
            rho,
            j,
            div_j,
            div_aj,
            div_t,
            grid,
        }
    }

    fn refine(self, factor: usize) -> Self {
        if factor == 1 {
            return self;
        }
        let g = &self.grid;
        let up = |v: &[f64]| spectral::upsample_real(g, v, factor);
        Self {
            density: up(&self.density),
            rho: up(&self.rho),
            j: self.j.iter().map(|v| up(v)).collect(),
            div_j: up(&self.div_j),
            div_aj: up(&self.div_aj),
            div_t: self.div_t.iter().map(|v| up(v)).collect(),
            grid: g.refined(factor).expect("refined grid"),
        }
    }

    fn chi2(&self) -> Vec<f64> {
        self.rho.iter().map(|&r| (r - 1.0).clamp(0.0, 1.0)).collect()
    }

    fn halo(&self) -> Vec<bool> {
        self.rho
            .iter()
            .map(|&r| r > 1.0 + HALO_MARGIN && r < 2.0 - HALO_MARGIN)
            .collect()
    }
}

/// Halo terms of the exact soliton equations
/// `q̇ = p/m_ε + K`, `ṗ = -∇V(q) + F + H₁ + H₂`:
///
/// - `K = (1/m_ε) ∫_Σ (x - q)[ j·∇ρ - u² ∇·(a∗j) ]`
/// - `H₁ = -∫_Σ j (∇·J_ρ)` with `J_ρ = a∗(j/m)`
/// - `H₂ = ∇V(q) - ∫ ∇V |Ψ_ε|²`
/// - `F = -∫_Σ T·∇ρ`
///
/// The `j·∇ρ` part of `K` and all of `F` are evaluated after integrating by
/// parts against `χ² = φ(ρ)`, which avoids quadrature of the jump of the halo
/// indicator: `∫_Σ (x - q) j·∇ρ = -∫ χ² (j + (x - q) ∇·j)` and
/// `F = ∫ χ² ∇·T`.
pub fn halo_terms(
    psi: &ComplexField,
    dec: &SolitonDecomposition,
    state: &SolitonState,
    kernel: &DensityKernel,
    model: &Model,
) -> Result<HaloTerms> {
    if dec.degenerate {
        return Err(Error::Degenerate);
    }
    let fields = Fields::new(psi, dec.rho.clone(), kernel, model);
    Ok(terms_from(&fields, state, model, psi.time()))
}

fn terms_from(f: &Fields, state: &SolitonState, model: &Model, t: f64) -> HaloTerms {
    let grid = &f.grid;
    let dim = grid.dim();
    let mass = model.mass();
    let chi2 = f.chi2();
    let halo = f.halo();
    let grad_v = model.potential.sample_gradient(grid);
    let mut disp = vec![vec![0.0; grid.len()]; dim];
    grid.for_each_position(|i, x| {
        for (a, d) in grid.displacement(x, &state.q).into_iter().enumerate() {
            disp[a][i] = d;
        }
    });

    let mut k = vec![0.0; dim];
    let mut h1 = vec![0.0; dim];
    let mut h2 = model.potential.gradient(&state.q);
    let mut force = vec![0.0; dim];
    for a in 0..dim {
        let transport = spectral::integrate_with(grid, |i| {
            -chi2[i] * (f.j[a][i] + disp[a][i] * f.div_j[i])
        });
        let exchange = spectral::integrate_with(grid, |i| {
            if halo[i] {
                -disp[a][i] * f.density[i] * f.div_aj[i]
            } else {
                0.0
            }
        });
        k[a] = (transport + exchange) / state.mass;
        h1[a] = spectral::integrate_with(grid, |i| {
            if halo[i] {
                -f.j[a][i] * f.div_aj[i] / mass
            } else {
                0.0
            }
        });
        h2[a] -= spectral::integrate_with(grid, |i| grad_v[a][i] * chi2[i] * f.density[i]);
        force[a] = spectral::integrate_with(grid, |i| chi2[i] * f.div_t[a][i]);
    }
    HaloTerms {
        k,
        h1,
        h2,
        f: force,
        t,
    }
}

/// Soliton state and halo terms with every integral evaluated on the
/// band-limited interpolants over `grid.refined(refine)`.
///
/// The halo indicator and `φ(ρ)` have kinks, so grid quadrature of them
/// carries `O(dx)` jumps in time as samples cross `ρ ∈ {1, 2}`; refinement
/// shrinks those by `refine`.
pub fn refined_soliton(
    psi: &ComplexField,
    kernel: &DensityKernel,
    model: &Model,
    refine: usize,
) -> Result<(SolitonState, HaloTerms)> {
    if refine == 0 {
        return Err(Error::Parameter("quadrature refinement must be >= 1".into()));
    }
    let rho = density_rho(psi, kernel);
    if rho.iter().all(|&r| r <= 1.0) {
        return Err(Error::Degenerate);
    }
    let fields = Fields::new(psi, rho, kernel, model).refine(refine);
    let peak = psi.grid().position(psi.peak_index());
    let state = state_from(
        &fields.grid,
        &fields.density,
        &fields.chi2(),
        &fields.j,
        &peak,
        model.mass(),
        psi.time(),
    )?;
    let terms = terms_from(&fields, &state, model, psi.time());
    Ok((state, terms))
}

/// `F = -∫_Σ T·∇ρ` evaluated literally on the halo samples.
pub fn surface_pressure_literal(
    psi: &ComplexField,
    dec: &SolitonDecomposition,
    model: &Model,
) -> Vec<f64> {
    let grid = psi.grid();
    let t = stress_tensor(psi, model);
    let grad_rho = spectral::gradient_real(grid, &dec.rho);
    (0..grid.dim())
        .map(|k| {
            spectral::integrate_with(grid, |i| {
                if !dec.halo[i] {
                    return 0.0;
                }
                -(0..grid.dim())
                    .map(|jx| t.component(jx, k)[i] * grad_rho[jx][i])
                    .sum::<f64>()
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub position: Vec<f64>,
    /// `f(q̂) = || |ψ| - U_ε(· - q̂) ||₂²` at the refined optimum.
    pub mismatch: f64,
    /// Storage index of the grid point nearest the optimum.
    pub index: usize,
}

/// Minimizer of `q ↦ || |ψ| - U_ε(· - q) ||₂²` via FFT cross-correlation.
///
/// Ties within `1e-12` relative go to the lowest storage index; the grid
/// optimum is refined by a three-point parabola per axis.
pub fn concentration_point(psi: &ComplexField, rs: &RescaledState) -> ConcentrationPoint {
    let grid = psi.grid();
    assert_eq!(grid, rs.grid(), "profile built on another grid");
    let u = psi.modulus();
    let g: Vec<f64> = rs.profile().samples().iter().map(|v| v.re).collect();
    let mut su = spectral::forward_real(grid, &u);
    let sg = spectral::forward_real(grid, &g);
    su.iter_mut().zip(&sg).for_each(|(a, b)| *a *= b.conj());
    let corr: Vec<f64> = spectral::inverse_real(grid, su)
        .into_iter()
        .map(|v| v * grid.cell_volume())
        .collect();
    let norms = spectral::integrate(grid, &u.iter().map(|v| v * v).collect::<Vec<_>>())
        + spectral::integrate(grid, &g.iter().map(|v| v * v).collect::<Vec<_>>());

    // shift index s corresponds to position wrap(s dx), i.e. grid index s + n/2
    let to_grid = |shift: &[usize]| -> Vec<usize> {
        shift
            .iter()
            .enumerate()
            .map(|(a, &s)| (s + grid.points_on(a) / 2) % grid.points_on(a))
            .collect()
    };
    let max = corr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * max.abs();
    let mut best: Option<(usize, usize)> = None;
    for (s, &c) in corr.iter().enumerate() {
        if c >= max - tol {
            let idx = grid.flat_index(&to_grid(&grid.multi_index(s)));
            if best.map_or(true, |(b, _)| idx < b) {
                best = Some((idx, s));
            }
        }
    }
    let (index, shift) = best.expect("non-empty grid");
    let shift_idx = grid.multi_index(shift);
    let mut position = grid.position(index);
    let mut peak = corr[shift];
    for a in 0..grid.dim() {
        let n = grid.points_on(a);
        let neighbour = |delta: isize| {
            let mut idx = shift_idx.clone();
            idx[a] = ((idx[a] as isize + delta).rem_euclid(n as isize)) as usize;
            corr[grid.flat_index(&idx)]
        };
        let (cm, c0, cp) = (neighbour(-1), corr[shift], neighbour(1));
        let denom = cm - 2.0 * c0 + cp;
        if denom < 0.0 {
            let offset = (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5);
            position[a] = grid.wrap(a, position[a] + offset * grid.spacing(a));
            peak -= 0.125 * (cm - cp) * (cm - cp) / denom;
        }
    }
    ConcentrationPoint {
        position,
        mismatch: (norms - 2.0 * peak).max(0.0),
        index,
    }
}
