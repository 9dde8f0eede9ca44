//! Ground state of `-(1/2m) ΔU + ½ W'(U) = ω U` on the unit L² sphere.
//!
//! The minimizer is found by a normalized gradient flow, semi-implicit in the
//! Laplacian: `û* = (û(1/τ + ω) - F[½ W'(u)]) / (1/τ + |k|²/2m)` followed by
//! projection back onto `||u||₂ = 1`. Keeping `ω u` on the right makes the
//! fixed points exactly the solutions of the Euler–Lagrange equation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::spectral;
use crate::model::{
    check_resolution, rescale_about, ComplexField, NonlinearitySpec, PhysicalParams, RealField,
    SpatialGrid,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Initial pseudo-time step; halved whenever a step would raise the energy.
    pub tau: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 100_000,
            tau: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    profile: RealField,
    nonlinearity: NonlinearitySpec,
    mass: f64,
    omega: f64,
    energy: f64,
    residual: f64,
    iterations: usize,
    step_halvings: usize,
    history: Vec<f64>,
}

impl GroundState {
    pub fn profile(&self) -> &RealField {
        &self.profile
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.profile.grid()
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlinearity
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Multiplier ω₁.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Minimal energy c₀.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `J` at the seed and after every accepted iteration.
    pub fn energy_history(&self) -> &[f64] {
        &self.history
    }

    /// Number of times the pseudo-time step was halved to keep the energy decreasing.
    pub fn step_halvings(&self) -> usize {
        self.step_halvings
    }

    pub fn as_complex(&self) -> ComplexField {
        ComplexField::from_real(&self.profile)
    }

    /// Largest `|U(x) - U(-x)|` over the samples.
    pub fn asymmetry(&self) -> f64 {
        reflection_asymmetry(&self.profile)
    }

    /// `∫_{|x|>R} U²`.
    pub fn tail_mass(&self, radius: f64) -> f64 {
        let grid = self.grid();
        let v = self.profile.values();
        spectral::integrate_with(grid, |i| {
            let r2: f64 = grid.position(i).iter().map(|x| x * x).sum();
            if r2 > radius * radius {
                v[i] * v[i]
            } else {
                0.0
            }
        })
    }
}

/// `J(u) = ∫ |∇u|²/(2m) + W_ε(u)` for a real profile.
pub fn internal_energy(grid: &SpatialGrid, u: &[f64], spec: &NonlinearitySpec, mass: f64) -> f64 {
    let grad = spectral::gradient_real(grid, u);
    let density: Vec<f64> = (0..grid.len())
        .map(|i| {
            let g2: f64 = grad.iter().map(|g| g[i] * g[i]).sum();
            g2 / (2.0 * mass) + spec.w_eps(u[i].abs())
        })
        .collect();
    spectral::integrate(grid, &density)
}

/// `∫ |∇u|²/(2m) + ½ W_ε'(u) u`, the multiplier paired with a unit-norm `u`.
pub fn multiplier_of(grid: &SpatialGrid, u: &[f64], spec: &NonlinearitySpec, mass: f64) -> f64 {
    let grad = spectral::gradient_real(grid, u);
    let density: Vec<f64> = (0..grid.len())
        .map(|i| {
            let g2: f64 = grad.iter().map(|g| g[i] * g[i]).sum();
            g2 / (2.0 * mass) + 0.5 * spec.w_eps_prime(u[i].abs()) * u[i].abs()
        })
        .collect();
    spectral::integrate(grid, &density)
}

/// Pointwise `-(1/2m) Δu + ½ W_ε'(u) - ω u`.
pub fn residual_field(
    grid: &SpatialGrid,
    u: &[f64],
    omega: f64,
    spec: &NonlinearitySpec,
    mass: f64,
) -> Vec<f64> {
    let lap = spectral::laplacian_real(grid, u);
    u.iter()
        .zip(&lap)
        .map(|(&ui, &li)| -li / (2.0 * mass) + 0.5 * signed_w_prime(spec, ui) - omega * ui)
        .collect()
}

/// L² norm of [`residual_field`].
pub fn residual_norm(
    grid: &SpatialGrid,
    u: &[f64],
    omega: f64,
    spec: &NonlinearitySpec,
    mass: f64,
) -> f64 {
    let r = residual_field(grid, u, omega, spec, mass);
    let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
    spectral::integrate(grid, &sq).sqrt()
}

/// `W'(|u|) sign(u)`, the derivative of `W(|u|)` for real `u`.
fn signed_w_prime(spec: &NonlinearitySpec, u: f64) -> f64 {
    if u < 0.0 {
        -spec.w_eps_prime(-u)
    } else {
        spec.w_eps_prime(u)
    }
}

fn l2_norm(grid: &SpatialGrid, u: &[f64]) -> f64 {
    let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
    spectral::integrate(grid, &sq).sqrt()
}

fn normalize(grid: &SpatialGrid, u: &mut [f64]) {
    let n = l2_norm(grid, u);
    u.iter_mut().for_each(|v| *v /= n);
}

pub fn solve_ground_state(
    spec: &NonlinearitySpec,
    params: &PhysicalParams,
    grid: &SpatialGrid,
    tol: f64,
) -> Result<GroundState> {
    solve_with(
        spec,
        params,
        grid,
        SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_with(
    spec: &NonlinearitySpec,
    params: &PhysicalParams,
    grid: &SpatialGrid,
    opts: SolverOptions,
) -> Result<GroundState> {
    if spec.dim() != grid.dim() {
        return Err(Error::Parameter("nonlinearity and grid dimensions differ".into()));
    }
    if spec.eps() != 1.0 {
        return Err(Error::Parameter(format!(
            "the ground state is solved at unit scale (got epsilon = {})",
            spec.eps()
        )));
    }
    if !(opts.tol > 0.0 && opts.tau > 0.0) {
        return Err(Error::Parameter("tolerance and step must be positive".into()));
    }
    let mass = params.mass();
    let width = grid.extents().iter().cloned().fold(f64::INFINITY, f64::min) / 16.0;
    let mut u = vec![0.0; grid.len()];
    grid.for_each_position(|i, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        u[i] = (-r2 / (2.0 * width * width)).exp();
    });
    normalize(grid, &mut u);

    let k2 = spectral::wavenumber_squared(grid);
    let mut tau = opts.tau;
    let mut energy = internal_energy(grid, &u, spec, mass);
    let mut omega = multiplier_of(grid, &u, spec, mass);
    let mut residual = residual_norm(grid, &u, omega, spec, mass);
    let mut iterations = 0;
    let mut halvings = 0;
    let mut history = vec![energy];

    while residual > opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::Convergence {
                iterations,
                residual,
            });
        }
        let force: Vec<f64> = u.iter().map(|&v| 0.5 * signed_w_prime(spec, v)).collect();
        let u_hat = spectral::forward_real(grid, &u);
        let f_hat = spectral::forward_real(grid, &force);
        let candidate = loop {
            let next: Vec<Complex64> = u_hat
                .iter()
                .zip(&f_hat)
                .zip(&k2)
                .map(|((uh, fh), k2)| (uh * (1.0 / tau + omega) - fh) / (1.0 / tau + k2 / (2.0 * mass)))
                .collect();
            let mut next = spectral::inverse_real(grid, next);
            normalize(grid, &mut next);
            let e = internal_energy(grid, &next, spec, mass);
            if e <= energy + 1e-14 * energy.abs() {
                energy = e;
                break next;
            }
            tau *= 0.5;
            halvings += 1;
            if tau < 1e-12 {
                return Err(Error::Convergence {
                    iterations,
                    residual,
                });
            }
        };
        u = candidate;
        history.push(energy);
        omega = multiplier_of(grid, &u, spec, mass);
        residual = residual_norm(grid, &u, omega, spec, mass);
        iterations += 1;
    }

    if spectral::integrate(grid, &u) < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    u = recenter(grid, u)?;
    u.iter_mut().for_each(|v| *v = v.max(0.0));
    normalize(grid, &mut u);
    let energy = internal_energy(grid, &u, spec, mass);
    let omega = multiplier_of(grid, &u, spec, mass);
    let residual = residual_norm(grid, &u, omega, spec, mass);

    Ok(GroundState {
        profile: RealField::new(grid.clone(), u)?,
        nonlinearity: *spec,
        mass,
        omega,
        energy,
        residual,
        iterations,
        step_halvings: halvings,
        history,
    })
}

/// Moves the barycenter of `u²` to the origin by a spectral shift.
fn recenter(grid: &SpatialGrid, u: Vec<f64>) -> Result<Vec<f64>> {
    let density: Vec<f64> = u.iter().map(|v| v * v).collect();
    let total = spectral::integrate(grid, &density);
    let center: Vec<f64> = (0..grid.dim())
        .map(|axis| {
            spectral::integrate_with(grid, |i| {
                grid.position(i)[axis] * density[i]
            }) / total
        })
        .collect();
    if center.iter().all(|c| c.abs() <= 1e-14 * grid.volume()) {
        return Ok(u);
    }
    let field = ComplexField::new(
        grid.clone(),
        u.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        0.0,
    )?;
    let minus: Vec<f64> = center.iter().map(|c| -c).collect();
    let shifted = crate::model::interp::resample(grid, field.samples(), grid, |axis, x| {
        Some(grid.wrap(axis, x - minus[axis]))
    });
    Ok(shifted.into_iter().map(|v| v.re).collect())
}

fn reflection_asymmetry(field: &RealField) -> f64 {
    let grid = field.grid();
    let v = field.values();
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let idx = grid.multi_index(i);
        let mirror: Vec<usize> = idx
            .iter()
            .enumerate()
            .map(|(axis, &k)| (grid.points_on(axis) - k) % grid.points_on(axis))
            .collect();
        worst = worst.max((v[i] - v[grid.flat_index(&mirror)]).abs());
    }
    worst
}

/// `ω₁ = ∫ |∇U|²/(2m) + ½ W'(U) U`.
pub fn lagrange_multiplier(gs: &GroundState, params: &PhysicalParams) -> f64 {
    multiplier_of(gs.grid(), gs.profile().values(), gs.nonlinearity(), params.mass())
}

/// `U_ε(x) = ε^{-N/2} U(x/ε)` with `ω_ε = ω₁/ε²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledState {
    profile: ComplexField,
    nonlinearity: NonlinearitySpec,
    mass: f64,
    eps: f64,
    omega: f64,
    base_energy: f64,
    base_profile: ComplexField,
}

impl RescaledState {
    pub fn profile(&self) -> &ComplexField {
        &self.profile
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.profile.grid()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// ω_ε.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// c₀ of the underlying ground state.
    pub fn base_energy(&self) -> f64 {
        self.base_energy
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlinearity
    }

    /// Residual of `-(1/2m) ΔU_ε + ½ W_ε'(U_ε) = ω_ε U_ε`.
    pub fn residual(&self) -> f64 {
        let u: Vec<f64> = self.profile.samples().iter().map(|v| v.re).collect();
        residual_norm(self.grid(), &u, self.omega, &self.nonlinearity, self.mass)
    }

    /// `J_ε(U_ε)`.
    pub fn internal_energy(&self) -> f64 {
        let u: Vec<f64> = self.profile.samples().iter().map(|v| v.re).collect();
        internal_energy(self.grid(), &u, &self.nonlinearity, self.mass)
    }

    /// `U_ε(x - q)` on the same grid, `x - q` taken as the minimum image.
    pub fn shifted(&self, q: &[f64]) -> Result<ComplexField> {
        rescale_about(&self.base_profile, self.eps, self.grid(), q)
    }
}

pub fn rescale_ground_state(gs: &GroundState, eps: f64, grid: &SpatialGrid) -> Result<RescaledState> {
    if grid.dim() != gs.grid().dim() {
        return Err(Error::Parameter("grid dimension differs from the ground state".into()));
    }
    if eps != 1.0 || grid != gs.grid() {
        check_resolution(grid, eps)?;
    }
    let nonlinearity = gs.nonlinearity().at_scale(eps)?;
    let base_profile = gs.as_complex();
    let zero = vec![0.0; grid.dim()];
    let mut profile = rescale_about(&base_profile, eps, grid, &zero)?;
    profile
        .samples_mut()
        .iter_mut()
        .for_each(|v| *v = Complex64::new(v.re.max(0.0), 0.0));
    Ok(RescaledState {
        profile,
        nonlinearity,
        mass: gs.mass(),
        eps,
        omega: gs.omega() / (eps * eps),
        base_energy: gs.energy(),
        base_profile,
    })
}
