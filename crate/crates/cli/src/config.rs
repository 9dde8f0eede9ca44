//! Run configuration: TOML schema, defaults and validation.
//!
//! Every section and key is optional; omitted values take the defaults below.
//!
//! | key | default |
//! |---|---|
//! | `[grid] dim, extent, points` | 1, 80, 4096 |
//! | `[physics] mass, nu, amplitude, epsilon` | 1, 3, 1, 0.2 |
//! | `[physics.potential]` | `kind = "harmonic", stiffness = 1` |
//! | `[initial] qbar, pbar, energy_bound` | [2], [0], 10 |
//! | `[initial.perturbation]` | `kind = "zero"` |
//! | `[time] dt, t_final, sample_stride, checkpoint_stride` | 1e-3, 4, 10, 0 |
//! | `[halo] eta, refine` | "equal-epsilon", 64 |
//! | `[ground_state] tolerance, extent, points` | 1e-8, grid extent, grid points |
//! | `[sweep] epsilons, threads, memory_budget_mib, base_points, grid_overrides` | none |
//! | `[output] directory, formats` | "runs", all of csv/json/svg/checkpoint |

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use soliton_core::evolution::{EvolutionConfig, InitialData, Perturbation};
use soliton_core::ground_state::SolverOptions;
use soliton_core::model::{check_resolution, nonlinearity::subcritical_bound};
use soliton_core::observables::build_kernel;
use soliton_core::sweep::{EtaRule, RunSpec, SweepPlan};
use soliton_core::{NonlinearitySpec, PotentialSpec, SpatialGrid};

pub const FORMATS: [&str; 4] = ["csv", "json", "svg", "checkpoint"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub initial: InitialSection,
    pub time: TimeSection,
    pub halo: HaloSection,
    pub ground_state: GroundStateSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSection::default(),
            physics: PhysicsSection::default(),
            initial: InitialSection::default(),
            time: TimeSection::default(),
            halo: HaloSection::default(),
            ground_state: GroundStateSection::default(),
            sweep: None,
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSection {
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dim: 1,
            extent: 80.0,
            points: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsSection {
    pub mass: f64,
    pub nu: f64,
    pub amplitude: f64,
    pub epsilon: f64,
    pub potential: PotentialSpec,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            mass: 1.0,
            nu: 3.0,
            amplitude: 1.0,
            epsilon: 0.2,
            potential: PotentialSpec::Harmonic { stiffness: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialSection {
    pub qbar: Vec<f64>,
    pub pbar: Vec<f64>,
    pub perturbation: Perturbation,
    pub energy_bound: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            qbar: vec![2.0],
            pbar: vec![0.0],
            perturbation: Perturbation::Zero,
            energy_bound: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
    pub checkpoint_stride: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        let e = EvolutionConfig::default();
        Self {
            dt: e.dt,
            t_final: e.t_final,
            sample_stride: e.sample_stride,
            checkpoint_stride: e.checkpoint_stride,
        }
    }
}

/// `"equal-epsilon"` or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSetting {
    Value(f64),
    Rule(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HaloSection {
    pub eta: EtaSetting,
    pub refine: usize,
}

impl Default for HaloSection {
    fn default() -> Self {
        Self {
            eta: EtaSetting::Rule("equal-epsilon".into()),
            refine: soliton_core::sweep::DEFAULT_REFINEMENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundStateSection {
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl Default for GroundStateSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            extent: None,
            points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOverride {
    pub epsilon: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    pub threads: usize,
    pub memory_budget_mib: usize,
    /// Starting point count of the doubling rule; defaults to `[grid].points`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_points: Option<usize>,
    pub grid_overrides: Vec<GridOverride>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            epsilons: vec![0.4, 0.3, 0.2, 0.15, 0.1],
            threads: 1,
            memory_budget_mib: 4096,
            base_points: None,
            grid_overrides: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: "runs".into(),
            formats: FORMATS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// One rejected setting, located by `[section].key`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration:\n{}", list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation {
        path: path.into(),
        message: message.into(),
    }
}

/// `a.b.c` as `[a.b].c`.
fn section_path(dotted: &str) -> String {
    match dotted.rsplit_once('.') {
        Some((head, key)) => format!("[{head}].{key}"),
        None => format!("[{dotted}]"),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Syntax {
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    let mut unknown = Vec::new();
    let mut track = serde_path_to_error::Track::new();
    let value = toml::Value::Table(table);
    let parsed = serde_ignored::deserialize(
        serde_path_to_error::Deserializer::new(value, &mut track),
        |p| unknown.push(p.to_string()),
    );
    let mut violations: Vec<Violation> = unknown
        .iter()
        .map(|p| violation(section_path(p), "unknown key"))
        .collect();
    let config: RunConfig = match parsed {
        Ok(c) => c,
        Err(e) => {
            let at = track.path().to_string();
            let msg = e.to_string();
            // unknown fields surface as errors with the path of their parent
            let path = if msg.starts_with("unknown field") || msg.contains("unknown variant") {
                format!("[{at}]")
            } else {
                section_path(&at)
            };
            violations.push(violation(path, msg));
            return Err(ConfigError::Invalid(violations));
        }
    };
    violations.extend(config.violations());
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl RunConfig {
    /// Every semantic problem, in section order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |p: &str, m: String| out.push(violation(p, m));
        let g = &self.grid;
        let dim_ok = (1..=3).contains(&g.dim);
        if !dim_ok {
            bad("[grid].dim", format!("must be 1, 2 or 3 (got {})", g.dim));
        }
        if !positive(g.extent) {
            bad("[grid].extent", format!("must be positive (got {})", g.extent));
        }
        if g.points < 16 || !g.points.is_power_of_two() {
            bad("[grid].points", format!("must be a power of two >= 16 (got {})", g.points));
        }

        let ph = &self.physics;
        if !positive(ph.mass) {
            bad("[physics].mass", format!("must be positive (got {})", ph.mass));
        }
        if dim_ok {
            let bound = subcritical_bound(g.dim);
            if !(ph.nu > 2.0 && ph.nu < bound) {
                bad(
                    "[physics].nu",
                    format!(
                        "nu = {} violates the mass-subcritical bound 2 < nu < 2 + 4/N = {bound} for N = {}",
                        ph.nu, g.dim
                    ),
                );
            }
        }
        if !positive(ph.amplitude) {
            bad("[physics].amplitude", format!("must be positive (got {})", ph.amplitude));
        }
        if !(ph.epsilon > 0.0 && ph.epsilon <= 1.0) {
            bad("[physics].epsilon", format!("must lie in (0, 1] (got {})", ph.epsilon));
        }
        if let Err(e) = ph.potential.validate(g.dim) {
            bad("[physics.potential]", e.to_string());
        }

        let init = &self.initial;
        for (name, v) in [("qbar", &init.qbar), ("pbar", &init.pbar)] {
            if v.len() != g.dim {
                bad(
                    &format!("[initial].{name}"),
                    format!("needs {} components (got {})", g.dim, v.len()),
                );
            } else if v.iter().any(|x| !x.is_finite()) {
                bad(&format!("[initial].{name}"), "components must be finite".into());
            }
        }
        if let Err(e) = init.perturbation.validate(g.dim) {
            bad("[initial.perturbation]", e.to_string());
        }
        if !positive(init.energy_bound) {
            bad("[initial].energy_bound", format!("must be positive (got {})", init.energy_bound));
        }

        let t = &self.time;
        if !positive(t.dt) {
            bad("[time].dt", format!("must be positive (got {})", t.dt));
        }
        if !(t.t_final.is_finite() && t.t_final >= 0.0) {
            bad("[time].t_final", format!("must be non-negative (got {})", t.t_final));
        }
        if t.sample_stride == 0 {
            bad("[time].sample_stride", "must be at least 1".into());
        }

        let eta = match &self.halo.eta {
            EtaSetting::Rule(r) if r == "equal-epsilon" => Some(EtaRule::EqualEpsilon),
            EtaSetting::Rule(r) => {
                bad("[halo].eta", format!("expected \"equal-epsilon\" or a number (got \"{r}\")"));
                None
            }
            EtaSetting::Value(v) if *v > 0.0 && *v < 1.0 => Some(EtaRule::Fixed(*v)),
            EtaSetting::Value(v) => {
                bad("[halo].eta", format!("must lie in (0, 1) (got {v})"));
                None
            }
        };
        if self.halo.refine == 0 {
            bad("[halo].refine", "must be at least 1".into());
        }

        let gs = &self.ground_state;
        if !positive(gs.tolerance) {
            bad("[ground_state].tolerance", format!("must be positive (got {})", gs.tolerance));
        }
        if let Some(l) = gs.extent {
            if !positive(l) {
                bad("[ground_state].extent", format!("must be positive (got {l})"));
            }
        }
        if let Some(n) = gs.points {
            if n < 16 || !n.is_power_of_two() {
                bad("[ground_state].points", format!("must be a power of two >= 16 (got {n})"));
            }
        }

        if let Some(s) = &self.sweep {
            if s.epsilons.is_empty() {
                bad("[sweep].epsilons", "must not be empty".into());
            }
            if let Some(e) = s.epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
                bad("[sweep].epsilons", format!("values must lie in (0, 1] (got {e})"));
            }
            let mut sorted = s.epsilons.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                bad("[sweep].epsilons", "values must be distinct".into());
            }
            if s.threads == 0 {
                bad("[sweep].threads", "must be at least 1".into());
            }
            if let Some(n) = s.base_points {
                if n < 16 || !n.is_power_of_two() {
                    bad("[sweep].base_points", format!("must be a power of two >= 16 (got {n})"));
                }
            }
        }

        for f in &self.output.formats {
            if !FORMATS.contains(&f.as_str()) {
                bad("[output].formats", format!("unknown format \"{f}\" (expected one of {FORMATS:?})"));
            }
        }
        if self.output.directory.is_empty() {
            bad("[output].directory", "must not be empty".into());
        }

        // resolution checks need a valid grid and scale
        if out.is_empty() {
            let grid = self.grid().expect("validated grid");
            if let Err(e) = check_resolution(&grid, ph.epsilon) {
                out.push(violation("[grid].points", format!("{e}; need extent/points <= epsilon/8")));
            }
            if let Some(rule) = eta {
                if let Err(e) = build_kernel(rule.eta(ph.epsilon), &grid) {
                    out.push(violation("[halo].eta", e.to_string()));
                }
            }
            let half = g.extent / 2.0;
            let margin = 10.0 * ph.epsilon;
            if init.qbar.iter().any(|q| q.abs() > half - margin) {
                out.push(violation(
                    "[initial].qbar",
                    format!("must stay {margin} (10 epsilon) inside the half-box {half}"),
                ));
            }
            if let Some(plan) = self.sweep_plan() {
                if let Err(e) = plan.validate() {
                    out.push(violation("[sweep]", e.to_string()));
                }
            }
        }
        out
    }

    pub fn grid(&self) -> soliton_core::Result<SpatialGrid> {
        SpatialGrid::cubic(self.grid.dim, self.grid.extent, self.grid.points)
    }

    pub fn ground_state_grid(&self) -> soliton_core::Result<SpatialGrid> {
        SpatialGrid::cubic(
            self.grid.dim,
            self.ground_state.extent.unwrap_or(self.grid.extent),
            self.ground_state.points.unwrap_or(self.grid.points),
        )
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.ground_state.tolerance,
            ..Default::default()
        }
    }

    /// Nonlinearity at scale 1.
    pub fn nonlinearity(&self) -> soliton_core::Result<NonlinearitySpec> {
        NonlinearitySpec::with_amplitude(self.grid.dim, self.physics.nu, self.physics.amplitude, 1.0)
    }

    pub fn eta_rule(&self) -> EtaRule {
        match self.halo.eta {
            EtaSetting::Value(v) => EtaRule::Fixed(v),
            EtaSetting::Rule(_) => EtaRule::EqualEpsilon,
        }
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.time.dt,
            t_final: self.time.t_final,
            sample_stride: self.time.sample_stride,
            checkpoint_stride: self.time.checkpoint_stride,
        }
    }

    fn initial_data(&self) -> InitialData {
        InitialData {
            qbar: self.initial.qbar.clone(),
            pbar: self.initial.pbar.clone(),
            perturbation: self.initial.perturbation.clone(),
            energy_bound: self.initial.energy_bound,
        }
    }

    pub fn run_spec(&self) -> soliton_core::Result<RunSpec> {
        let eps = self.physics.epsilon;
        Ok(RunSpec {
            grid: self.grid()?,
            nonlinearity: self.nonlinearity()?,
            potential: self.physics.potential.clone(),
            mass: self.physics.mass,
            eps,
            initial: self.initial_data(),
            time: self.evolution(),
            eta: self.eta_rule().eta(eps),
            refine: self.halo.refine,
        })
    }

    /// `None` without a `[sweep]` section.
    pub fn sweep_plan(&self) -> Option<SweepPlan> {
        let s = self.sweep.as_ref()?;
        Some(SweepPlan {
            eps: s.epsilons.clone(),
            dim: self.grid.dim,
            exponent: self.physics.nu,
            amplitude: self.physics.amplitude,
            mass: self.physics.mass,
            potential: self.physics.potential.clone(),
            qbar: self.initial.qbar.clone(),
            pbar: self.initial.pbar.clone(),
            perturbation: self.initial.perturbation.clone(),
            energy_bound: self.initial.energy_bound,
            extent: self.grid.extent,
            base_points: s.base_points.unwrap_or(self.grid.points),
            grid_overrides: s.grid_overrides.iter().map(|o| (o.epsilon, o.points)).collect(),
            time: self.evolution(),
            eta: self.eta_rule(),
            refine: self.halo.refine,
            tolerance: self.ground_state.tolerance,
            memory_budget: s.memory_budget_mib << 20,
            threads: s.threads,
        })
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    /// Hex SHA-256 of the canonical form, ignoring the output directory.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.directory.clear();
        let text = toml::to_string(&canonical).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
