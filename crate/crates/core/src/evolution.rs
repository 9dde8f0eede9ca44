//! Admissible initial data and symmetric split-step time integration of
//! `i ψ_t = -(1/2m) Δψ + ½ W_ε'(|ψ|) ψ/|ψ| + V ψ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::RescaledState;
use crate::model::spectral;
use crate::model::{boost, ComplexField, Model, NonlinearitySpec, SpatialGrid};
use crate::observables::energy_report;

/// Smooth additive perturbation `φ₀` of the initial soliton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Perturbation {
    #[default]
    Zero,
    /// `amplitude · exp(-|x - center|² / (2 width²))`.
    Gaussian {
        amplitude: f64,
        width: f64,
        center: Vec<f64>,
    },
}

impl Perturbation {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Perturbation::Zero => Ok(()),
            Perturbation::Gaussian {
                amplitude,
                width,
                center,
            } => {
                if !amplitude.is_finite() {
                    return Err(Error::Parameter("perturbation amplitude must be finite".into()));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::Parameter(format!(
                        "perturbation width must be positive (got {width})"
                    )));
                }
                if center.len() != dim {
                    return Err(Error::Parameter(format!(
                        "perturbation center has {} components, expected {dim}",
                        center.len()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Option<ComplexField> {
        match self {
            Perturbation::Zero => None,
            Perturbation::Gaussian {
                amplitude,
                width,
                center,
            } => Some(ComplexField::from_fn(grid.clone(), |x| {
                let d = grid.displacement(x, center);
                let r2: f64 = d.iter().map(|v| v * v).sum();
                Complex64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
            })),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub qbar: Vec<f64>,
    pub pbar: Vec<f64>,
    pub perturbation: Perturbation,
    /// Energy headroom M of the admissible set.
    pub energy_bound: f64,
}

/// Assembled `ψ₀` with its admissibility diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledData {
    pub field: ComplexField,
    /// `E_ε(ψ₀) - c₀/ε²`.
    pub realized_headroom: f64,
    /// `||U_ε(· - q̄) e^{i p̄·x} + φ₀||₂ - 1` before renormalization.
    pub norm_deviation: f64,
}

/// `ψ₀ = U_ε(x - q̄) e^{i p̄·x} + φ₀`, renormalized to unit charge.
pub fn assemble_initial_data(
    rs: &RescaledState,
    data: &InitialData,
    model: &Model,
) -> Result<AssembledData> {
    let grid = &model.grid;
    if rs.grid() != grid {
        return Err(Error::Parameter("rescaled state lives on a different grid".into()));
    }
    let dim = grid.dim();
    if data.qbar.len() != dim || data.pbar.len() != dim {
        return Err(Error::Parameter(format!(
            "qbar and pbar need {dim} components"
        )));
    }
    data.perturbation.validate(dim)?;
    let margin = 10.0 * rs.eps();
    for (axis, q) in data.qbar.iter().enumerate() {
        let half = 0.5 * grid.extent(axis);
        if !(q.abs() <= half - margin) {
            return Err(Error::Parameter(format!(
                "qbar[{axis}] = {q} is closer than 10 epsilon to the box edge"
            )));
        }
    }
    let mut field = rs.shifted(&data.qbar)?;
    boost(&mut field, &data.pbar);
    if let Some(phi) = data.perturbation.sample(grid) {
        field
            .samples_mut()
            .iter_mut()
            .zip(phi.samples())
            .for_each(|(a, b)| *a += b);
    }
    let norm = field.l2_norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Parameter("assembled datum has zero norm".into()));
    }
    field.scale(1.0 / norm);
    field.set_time(0.0);
    let eps = rs.eps();
    let energy = energy_report(&field, model).total;
    let realized = energy - rs.base_energy() / (eps * eps);
    if realized > data.energy_bound {
        return Err(Error::Admissibility {
            realized,
            bound: data.energy_bound,
        });
    }
    Ok(AssembledData {
        field,
        realized_headroom: realized,
        norm_deviation: norm - 1.0,
    })
}

/// One symmetric kinetic–phase–kinetic step of fixed size.
#[derive(Debug, Clone)]
pub struct Stepper {
    dt: f64,
    grid: SpatialGrid,
    half_kinetic: Vec<Complex64>,
    potential: Vec<f64>,
    nonlinearity: NonlinearitySpec,
}

impl Stepper {
    /// `dt` may be negative (backward stepping) or zero.
    pub fn new(model: &Model, dt: f64) -> Result<Self> {
        if !dt.is_finite() {
            return Err(Error::Parameter("time step must be finite".into()));
        }
        let mass = model.mass();
        let half_kinetic = spectral::wavenumber_squared(&model.grid)
            .into_iter()
            .map(|k2| Complex64::from_polar(1.0, -k2 * dt / (4.0 * mass)))
            .collect();
        Ok(Self {
            dt,
            grid: model.grid.clone(),
            half_kinetic,
            potential: model.potential.sample(&model.grid),
            nonlinearity: model.nonlinearity,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic(&self, data: &mut [Complex64]) {
        spectral::forward(&self.grid, data);
        data.iter_mut()
            .zip(&self.half_kinetic)
            .for_each(|(v, m)| *v *= m);
        spectral::inverse(&self.grid, data);
    }

    fn rotate(&self, data: &mut [Complex64]) {
        for (v, pot) in data.iter_mut().zip(&self.potential) {
            let rate = self.nonlinearity.phase_rate(v.norm()) + pot;
            *v *= Complex64::from_polar(1.0, -rate * self.dt);
        }
    }

    /// Advances `psi` by one step, stamping the time `t + dt`.
    pub fn advance(&self, psi: &mut ComplexField) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(Error::Parameter("field lives on a different grid".into()));
        }
        let data = psi.samples_mut();
        self.kinetic(data);
        self.rotate(data);
        self.kinetic(data);
        let t = psi.time() + self.dt;
        psi.set_time(t);
        if !psi.is_finite() {
            return Err(Error::BlowUp { t });
        }
        Ok(())
    }
}

/// One split step of size `dt` applied to a copy of `psi`; `dt = 0` returns the copy untouched.
pub fn step(psi: &ComplexField, dt: f64, model: &Model) -> Result<ComplexField> {
    let mut out = psi.clone();
    if dt == 0.0 {
        return Ok(out);
    }
    Stepper::new(model, dt)?.advance(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Observers fire every `sample_stride` steps.
    pub sample_stride: usize,
    /// Checkpoint hooks fire every `checkpoint_stride` steps; 0 disables them.
    pub checkpoint_stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 4.0,
            sample_stride: 10,
            checkpoint_stride: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::Parameter(format!(
                "final time must be non-negative (got {})",
                self.t_final
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::Parameter("sample stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_stride as f64
    }

    /// Largest kinetic phase advance per step, `dt · max|k|² / (2m)`.
    pub fn max_kinetic_phase(&self, grid: &SpatialGrid, mass: f64) -> f64 {
        let k2max: f64 = (0..grid.dim())
            .map(|a| {
                let k = std::f64::consts::PI / grid.spacing(a);
                k * k
            })
            .sum();
        self.dt * k2max / (2.0 * mass)
    }
}

/// Receives read-only snapshots during [`evolve`].
pub trait Observer {
    fn observe(&mut self, psi: &ComplexField) -> Result<()>;

    fn checkpoint(&mut self, _psi: &ComplexField) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_state: ComplexField,
    pub steps: usize,
    pub samples: usize,
}

/// Integrates to `cfg.t_final`, calling every observer at step 0 and then every
/// `sample_stride` steps.
pub fn evolve(
    psi0: ComplexField,
    model: &Model,
    cfg: &EvolutionConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    cfg.validate()?;
    let stepper = Stepper::new(model, cfg.dt)?;
    let t0 = psi0.time();
    let mut psi = psi0;
    let steps = cfg.steps();
    let mut samples = 0;
    for n in 0..=steps {
        if n > 0 {
            stepper.advance(&mut psi)?;
            psi.set_time(t0 + n as f64 * cfg.dt);
        }
        if n % cfg.sample_stride == 0 {
            for obs in observers.iter_mut() {
                obs.observe(&psi)?;
            }
            samples += 1;
        }
        if cfg.checkpoint_stride > 0 && n % cfg.checkpoint_stride == 0 {
            for obs in observers.iter_mut() {
                obs.checkpoint(&psi)?;
            }
        }
    }
    Ok(Trajectory {
        final_state: psi,
        steps,
        samples,
    })
}

/// `U_ε(x - q̄ - v̄t) e^{i(p̄·x - ωt)}` with `v̄ = p̄/m`, `ω = ω_ε + ½ m |v̄|²`.
pub fn exact_free_soliton(
    t: f64,
    rs: &RescaledState,
    qbar: &[f64],
    pbar: &[f64],
    mass: f64,
) -> Result<ComplexField> {
    let velocity: Vec<f64> = pbar.iter().map(|p| p / mass).collect();
    let v2: f64 = velocity.iter().map(|v| v * v).sum();
    let omega = rs.omega() + 0.5 * mass * v2;
    let center: Vec<f64> = qbar
        .iter()
        .zip(&velocity)
        .enumerate()
        .map(|(a, (q, v))| rs.grid().wrap(a, q + v * t))
        .collect();
    let mut field = rs.shifted(&center)?;
    boost(&mut field, pbar);
    let phase = Complex64::from_polar(1.0, -omega * t);
    field.samples_mut().iter_mut().for_each(|v| *v *= phase);
    Ok(field.with_time(t))
}
