//! Single-run pipeline and ε-sweeps with trend verdicts.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::classical::{
    compare, effective_series, integrate_classical, replay_effective, ClassicalTrajectory,
    ComparisonReport, ReplayReport, RunScales,
};
use crate::error::{Error, Result};
use crate::evolution::{assemble_initial_data, evolve, EvolutionConfig, InitialData, Observer, Perturbation};
use crate::ground_state::{rescale_ground_state, solve_with, GroundState, SolverOptions};
use crate::model::{Model, NonlinearitySpec, PhysicalParams, PotentialSpec, SpatialGrid, REFERENCE_SPACING};
use crate::observables::{build_kernel, TrackSample, Tracker};

/// Largest sample count of a refined quadrature grid.
pub const FINE_POINT_LIMIT: usize = 1 << 20;

/// Default quadrature refinement for the soliton integrals.
pub const DEFAULT_REFINEMENT: usize = 64;

/// Largest power of two `≤ requested` whose refined grid stays within [`FINE_POINT_LIMIT`].
pub fn effective_refinement(grid: &SpatialGrid, requested: usize) -> usize {
    let mut r = 1;
    while r * 2 <= requested.max(1) && grid.len() * (r * 2).pow(grid.dim() as u32) <= FINE_POINT_LIMIT {
        r *= 2;
    }
    r
}

/// How `η` follows `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaRule {
    EqualEpsilon,
    Fixed(f64),
}

impl EtaRule {
    pub fn eta(&self, eps: f64) -> f64 {
        match *self {
            EtaRule::EqualEpsilon => eps,
            EtaRule::Fixed(v) => v,
        }
    }
}

/// Everything one run needs besides the ε = 1 ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub grid: SpatialGrid,
    /// Nonlinearity at scale 1.
    pub nonlinearity: NonlinearitySpec,
    pub potential: PotentialSpec,
    pub mass: f64,
    pub eps: f64,
    pub initial: InitialData,
    pub time: EvolutionConfig,
    pub eta: f64,
    pub refine: usize,
}

impl RunSpec {
    pub fn model(&self) -> Result<Model> {
        Model::new(
            self.grid.clone(),
            self.nonlinearity.at_scale(self.eps)?,
            self.potential.clone(),
            PhysicalParams::new(self.mass, self.eps)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub eps: f64,
    pub eta: f64,
    pub grid_points: Vec<usize>,
    pub refine: usize,
    pub realized_headroom: f64,
    pub samples: Vec<TrackSample>,
    pub classical: ClassicalTrajectory,
    pub comparison: ComparisonReport,
    /// `None` with fewer than three samples.
    pub replay: Option<ReplayReport>,
}

/// Rescale, assemble, evolve with tracking, integrate the classical system
/// from `(q̄, p̄)` and compare.
pub fn run_pipeline(
    gs: &GroundState,
    spec: &RunSpec,
    extra: &mut [&mut dyn Observer],
) -> Result<RunRecord> {
    spec.time.validate()?;
    let model = spec.model()?;
    let rs = rescale_ground_state(gs, spec.eps, &model.grid)?;
    let assembled = assemble_initial_data(&rs, &spec.initial, &model)?;
    let kernel = build_kernel(spec.eta, &model.grid)?;
    let refine = effective_refinement(&model.grid, spec.refine);
    let mut tracker = Tracker::new(model.clone(), kernel.clone(), rs).with_refinement(refine);
    {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut tracker];
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        evolve(assembled.field, &model, &spec.time, &mut observers)?;
    }
    let samples = tracker.into_samples();
    let series = effective_series(&samples)?;
    let horizon = samples.last().map_or(0.0, |s| s.t - samples[0].t);
    let classical = integrate_classical(
        &spec.initial.qbar,
        &spec.initial.pbar,
        &spec.potential,
        spec.mass,
        horizon,
        spec.time.dt,
    )?
    .every(spec.time.sample_stride);
    let comparison = compare(
        &series,
        &classical,
        RunScales {
            eta: spec.eta,
            eps: spec.eps,
            support_radius: kernel.support_radius(),
        },
    )?;
    let replay = if series.len() >= 3 {
        Some(replay_effective(&series, &spec.potential)?)
    } else {
        None
    };
    Ok(RunRecord {
        eps: spec.eps,
        eta: spec.eta,
        grid_points: model.grid.points().to_vec(),
        refine,
        realized_headroom: assembled.realized_headroom,
        samples,
        classical,
        comparison,
        replay,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Distinct values in `(0, 1]`; any order.
    pub eps: Vec<f64>,
    pub dim: usize,
    pub exponent: f64,
    pub amplitude: f64,
    pub mass: f64,
    pub potential: PotentialSpec,
    pub qbar: Vec<f64>,
    pub pbar: Vec<f64>,
    pub perturbation: Perturbation,
    pub energy_bound: f64,
    pub extent: f64,
    /// Points per axis before refinement; doubled until `dx ≤ ε·REFERENCE_SPACING`.
    pub base_points: usize,
    /// Explicit `(ε, points)` pairs overriding the doubling rule.
    pub grid_overrides: Vec<(f64, usize)>,
    pub time: EvolutionConfig,
    pub eta: EtaRule,
    pub refine: usize,
    /// Ground-state solver tolerance.
    pub tolerance: f64,
    /// Upper bound on the estimated peak memory of all runs together.
    pub memory_budget: usize,
    pub threads: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            eps: vec![0.4, 0.3, 0.2, 0.15, 0.1],
            dim: 1,
            exponent: 3.0,
            amplitude: 1.0,
            mass: 1.0,
            potential: PotentialSpec::Harmonic { stiffness: 1.0 },
            qbar: vec![2.0],
            pbar: vec![0.0],
            perturbation: Perturbation::Zero,
            energy_bound: 10.0,
            extent: 80.0,
            base_points: 4096,
            grid_overrides: Vec::new(),
            time: EvolutionConfig {
                dt: 1e-3,
                t_final: 4.0,
                sample_stride: 10,
                checkpoint_stride: 0,
            },
            eta: EtaRule::EqualEpsilon,
            refine: DEFAULT_REFINEMENT,
            tolerance: 1e-8,
            memory_budget: 4 << 30,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::Parameter("sweep needs at least one epsilon".into()));
        }
        for &e in &self.eps {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Parameter(format!("epsilon must lie in (0, 1] (got {e})")));
            }
        }
        let mut sorted = self.eps.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("epsilon values must be distinct".into()));
        }
        if self.qbar.len() != self.dim || self.pbar.len() != self.dim {
            return Err(Error::Parameter("qbar and pbar must have one entry per axis".into()));
        }
        if self.threads == 0 {
            return Err(Error::Parameter("threads must be >= 1".into()));
        }
        self.perturbation.validate(self.dim)?;
        self.potential.validate(self.dim)?;
        self.time.validate()?;
        NonlinearitySpec::with_amplitude(self.dim, self.exponent, self.amplitude, 1.0)?;
        PhysicalParams::new(self.mass, 1.0)?;
        for &e in &self.eps {
            let grid = self.grid_for(e)?;
            let eta = self.eta.eta(e);
            build_kernel(eta, &grid)?;
        }
        let needed = self.estimated_memory()?;
        if needed > self.memory_budget {
            return Err(Error::Parameter(format!(
                "estimated memory {needed} bytes exceeds the budget of {} bytes",
                self.memory_budget
            )));
        }
        Ok(())
    }

    /// Descending ε list.
    pub fn sorted_eps(&self) -> Vec<f64> {
        let mut e = self.eps.clone();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }

    pub fn grid_for(&self, eps: f64) -> Result<SpatialGrid> {
        if let Some(&(_, n)) = self.grid_overrides.iter().find(|(e, _)| *e == eps) {
            let grid = SpatialGrid::cubic(self.dim, self.extent, n)?;
            crate::model::check_resolution(&grid, eps)?;
            return Ok(grid);
        }
        let mut n = self.base_points;
        while self.extent / n as f64 > eps * REFERENCE_SPACING {
            n *= 2;
        }
        SpatialGrid::cubic(self.dim, self.extent, n)
    }

    pub fn ground_state_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::cubic(self.dim, self.extent, self.base_points)
    }

    /// Rough peak bytes: ~40 coarse complex fields plus ~12 refined real
    /// fields per concurrently running ε, plus the retained samples.
    pub fn estimated_memory(&self) -> Result<usize> {
        let mut per_run = Vec::new();
        for &e in &self.eps {
            let grid = self.grid_for(e)?;
            let r = effective_refinement(&grid, self.refine);
            let fine = grid.len() * r.pow(self.dim as u32);
            let samples = self.time.steps() / self.time.sample_stride + 1;
            per_run.push(40 * 16 * grid.len() + 12 * 8 * fine + 512 * samples);
        }
        per_run.sort_unstable_by(|a, b| b.cmp(a));
        Ok(per_run.iter().take(self.threads).sum())
    }

    fn spec_for(&self, eps: f64) -> Result<RunSpec> {
        Ok(RunSpec {
            grid: self.grid_for(eps)?,
            nonlinearity: NonlinearitySpec::with_amplitude(self.dim, self.exponent, self.amplitude, 1.0)?,
            potential: self.potential.clone(),
            mass: self.mass,
            eps,
            initial: InitialData {
                qbar: self.qbar.clone(),
                pbar: self.pbar.clone(),
                perturbation: self.perturbation.clone(),
                energy_bound: self.energy_bound,
            },
            time: self.time,
            eta: self.eta.eta(eps),
            refine: self.refine,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub eps: f64,
    pub result: std::result::Result<RunRecord, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    /// Coefficient of determination.
    pub quality: f64,
}

/// Least-squares slope of `log value` against `log ε`.
pub fn fit_trend(values: &[f64], eps: &[f64]) -> Result<TrendFit> {
    if values.len() != eps.len() {
        return Err(Error::Parameter("values and epsilons differ in length".into()));
    }
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "trend fit needs at least 3 points (got {})",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("value {v} below floor, not fitted")));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Domain(format!("epsilon {e} is not positive")));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all epsilons coincide".into()));
    }
    let slope = sxy / sxx;
    let quality = if syy == 0.0 { 1.0 } else { slope * sxy / syy };
    Ok(TrendFit { slope, quality })
}

/// Verdict on one recorded quantity across completed runs, ε descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// `None` with fewer than two completed runs.
    pub strictly_decreasing: Option<bool>,
    pub fit: std::result::Result<TrendFit, String>,
}

impl Trend {
    fn from_values(eps: Vec<f64>, values: Vec<f64>) -> Self {
        let strictly_decreasing = (values.len() >= 2).then(|| values.windows(2).all(|w| w[1] < w[0]));
        let fit = fit_trend(&values, &eps).map_err(|e| e.to_string());
        Self {
            eps,
            values,
            strictly_decreasing,
            fit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// One entry per ε, descending.
    pub runs: Vec<RunOutcome>,
    pub position_error: Trend,
    pub max_k: Trend,
    pub max_h: Trend,
    pub f_coefficient: Trend,
}

impl SweepReport {
    pub fn from_runs(mut runs: Vec<RunOutcome>) -> Self {
        runs.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let done: Vec<&RunRecord> = runs.iter().filter_map(|r| r.result.as_ref().ok()).collect();
        let eps: Vec<f64> = done.iter().map(|r| r.eps).collect();
        let trend = |f: fn(&ComparisonReport) -> f64| {
            Trend::from_values(eps.clone(), done.iter().map(|r| f(&r.comparison)).collect())
        };
        Self {
            position_error: trend(|c| c.position_error),
            max_k: trend(|c| c.max_k),
            max_h: trend(|c| c.max_h),
            f_coefficient: trend(|c| c.f_coefficient),
            runs,
        }
    }

    pub fn completed(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter_map(|r| r.result.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (f64, &str)> {
        self.runs
            .iter()
            .filter_map(|r| r.result.as_ref().err().map(|e| (r.eps, e.as_str())))
    }
}

pub fn solve_sweep_ground_state(plan: &SweepPlan) -> Result<GroundState> {
    solve_with(
        &NonlinearitySpec::with_amplitude(plan.dim, plan.exponent, plan.amplitude, 1.0)?,
        &PhysicalParams::new(plan.mass, 1.0)?,
        &plan.ground_state_grid()?,
        SolverOptions {
            tol: plan.tolerance,
            ..Default::default()
        },
    )
}

/// Solves the ground state once, then runs every ε on up to `plan.threads`
/// workers. A failing ε is recorded and does not stop the others.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let gs = solve_sweep_ground_state(plan)?;
    run_sweep_with(plan, &gs)
}

pub fn run_sweep_with(plan: &SweepPlan, gs: &GroundState) -> Result<SweepReport> {
    plan.validate()?;
    let eps = plan.sorted_eps();
    let queue = Mutex::new(0usize);
    let results: Mutex<Vec<Option<RunOutcome>>> = Mutex::new(vec![None; eps.len()]);
    std::thread::scope(|s| {
        for _ in 0..plan.threads.min(eps.len()) {
            s.spawn(|| loop {
                let i = {
                    let mut q = queue.lock().expect("queue lock");
                    let i = *q;
                    *q += 1;
                    i
                };
                let Some(&e) = eps.get(i) else { break };
                let result = plan
                    .spec_for(e)
                    .and_then(|spec| run_pipeline(gs, &spec, &mut []))
                    .map_err(|err| err.to_string());
                results.lock().expect("results lock")[i] = Some(RunOutcome { eps: e, result });
            });
        }
    });
    let runs = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every epsilon ran"))
        .collect();
    Ok(SweepReport::from_runs(runs))
}
