//! Subcommand implementations and run-directory layout.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use soliton_core::classical::{compare, integrate_classical, replay_effective, EffectivePoint, RunScales};
use soliton_core::evolution::Observer;
use soliton_core::ground_state::{solve_with, GroundState};
use soliton_core::observables::build_kernel;
use soliton_core::sweep::{run_pipeline, run_sweep_with, solve_sweep_ground_state, RunOutcome, SweepReport};
use soliton_core::{ComplexField, PhysicalParams};

use crate::checkpoint::{self, Checkpoint};
use crate::config::{load_config, ConfigError, RunConfig};
use crate::plots::emit_plot_data;
use crate::series::{read_timeseries, rows_from_record, write_timeseries};

#[derive(Debug, Parser)]
#[command(name = "soliton-lab", version, about = "Soliton dynamics experiments for the nonlinear Schrödinger equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the unit-scale ground state and store it.
    GroundState(CommonArgs),
    /// Evolve one soliton, track it and compare with the classical path.
    Evolve(CommonArgs),
    /// Run every epsilon of the [sweep] section and fit trends.
    Sweep(CommonArgs),
    /// Recompare a stored evolve time series with the classical path.
    Compare(CommonArgs),
    /// Render plot data and SVG charts from a stored report.
    EmitPlots(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Parent of the run directory; defaults to [output].directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Runtime(_) => 2,
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => AppError::Runtime(e.to_string()),
            _ => AppError::Validation(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> AppError {
    AppError::Runtime(e.to_string())
}

struct Context {
    config: RunConfig,
    dir: PathBuf,
    run_id: String,
    quiet: bool,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self, AppError> {
        let config = load_config(&args.config)?;
        let run_id = config.content_hash()[..16].to_string();
        let parent = args
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&config.output.directory));
        let dir = parent.join(format!("run-{run_id}"));
        Ok(Self {
            config,
            dir,
            run_id,
            quiet: args.quiet,
        })
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn prepare(&self) -> Result<(), AppError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| runtime(format!("{}: {e}", self.dir.display())))?;
        write(&self.dir.join("config.toml"), self.config.to_toml().as_bytes())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn ground_state(&self) -> Result<GroundState, AppError> {
        self.note("solving ground state");
        let c = &self.config;
        solve_with(
            &c.nonlinearity().map_err(runtime)?,
            &PhysicalParams::new(c.physics.mass, 1.0).map_err(runtime)?,
            &c.ground_state_grid().map_err(runtime)?,
            c.solver_options(),
        )
        .map_err(runtime)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    std::fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    write(path, text.as_bytes())
}

/// Runs one subcommand and returns the run directory.
pub fn execute(cli: Cli) -> Result<PathBuf, AppError> {
    match cli.command {
        Command::GroundState(a) => ground_state(Context::new(&a)?),
        Command::Evolve(a) => evolve(Context::new(&a)?),
        Command::Sweep(a) => sweep(Context::new(&a)?),
        Command::Compare(a) => compare_stored(Context::new(&a)?),
        Command::EmitPlots(a) => plots(Context::new(&a)?),
    }
}

#[derive(Serialize)]
struct GroundStateSummary<'a> {
    omega: f64,
    energy: f64,
    residual: f64,
    iterations: usize,
    step_halvings: usize,
    extents: &'a [f64],
    points: &'a [usize],
}

fn ground_state(ctx: Context) -> Result<PathBuf, AppError> {
    ctx.prepare()?;
    let gs = ctx.ground_state()?;
    let grid = gs.grid();
    write_json(
        &ctx.path("ground_state.json"),
        &GroundStateSummary {
            omega: gs.omega(),
            energy: gs.energy(),
            residual: gs.residual(),
            iterations: gs.iterations(),
            step_halvings: gs.step_halvings(),
            extents: grid.extents(),
            points: grid.points(),
        },
    )?;
    if ctx.config.wants("csv") {
        let mut text = String::from("x,U\n");
        let values = gs.profile().values();
        for (i, u) in values.iter().enumerate() {
            let x = grid.position(i);
            text += &format!("{},{}\n", x.iter().map(|v| crate::series::render(*v)).collect::<Vec<_>>().join(";"), crate::series::render(*u));
        }
        write(&ctx.path("ground_state.csv"), text.as_bytes())?;
    }
    if ctx.config.wants("checkpoint") {
        save_checkpoint(&ctx, &gs.as_complex(), "ground_state.ckpt")?;
    }
    ctx.note(format!(
        "omega = {:.12e}, energy = {:.12e}, residual = {:.3e} after {} iterations",
        gs.omega(),
        gs.energy(),
        gs.residual(),
        gs.iterations()
    ));
    Ok(ctx.dir)
}

fn save_checkpoint(ctx: &Context, field: &ComplexField, name: &str) -> Result<(), AppError> {
    checkpoint::save(
        &Checkpoint {
            run_id: ctx.run_id.clone(),
            field: field.clone(),
        },
        &ctx.path(name),
    )
    .map_err(runtime)
}

/// Writes periodic checkpoints and remembers the last observed field.
struct Snapshots<'a> {
    ctx: &'a Context,
    enabled: bool,
    last: Option<ComplexField>,
    written: usize,
}

impl Observer for Snapshots<'_> {
    fn observe(&mut self, psi: &ComplexField) -> soliton_core::Result<()> {
        if self.enabled {
            self.last = Some(psi.clone());
        }
        Ok(())
    }

    fn checkpoint(&mut self, psi: &ComplexField) -> soliton_core::Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let name = format!("checkpoint_{:06}.ckpt", self.written);
        save_checkpoint(self.ctx, psi, &name).map_err(|e| soliton_core::Error::Observer(e.to_string()))?;
        self.written += 1;
        Ok(())
    }
}

fn evolve(ctx: Context) -> Result<PathBuf, AppError> {
    ctx.prepare()?;
    let spec = ctx.config.run_spec().map_err(runtime)?;
    let gs = ctx.ground_state()?;
    ctx.note(format!("evolving eps = {} to t = {}", spec.eps, spec.time.t_final));
    let mut snaps = Snapshots {
        ctx: &ctx,
        enabled: ctx.config.wants("checkpoint"),
        last: None,
        written: 0,
    };
    let record = run_pipeline(&gs, &spec, &mut [&mut snaps]).map_err(runtime)?;
    if let Some(last) = snaps.last.take() {
        save_checkpoint(&ctx, &last, "final.ckpt")?;
    }
    let c = &record.comparison;
    ctx.note(format!(
        "position error {:.3e}, momentum error {:.3e}, max|K| {:.3e}, max|H| {:.3e}, F coefficient {:.3e}",
        c.position_error, c.momentum_error, c.max_k, c.max_h, c.f_coefficient
    ));
    let report = SweepReport::from_runs(vec![RunOutcome {
        eps: record.eps,
        result: Ok(record),
    }]);
    emit_report(&ctx, &report, |_| "timeseries.csv".into())?;
    Ok(ctx.dir)
}

fn emit_report(ctx: &Context, report: &SweepReport, csv_name: impl Fn(f64) -> String) -> Result<(), AppError> {
    if ctx.config.wants("csv") {
        for run in report.completed() {
            write_timeseries(&rows_from_record(run), run.grid_points.len(), &ctx.path(&csv_name(run.eps)))
                .map_err(runtime)?;
        }
    }
    if ctx.config.wants("json") {
        write_json(&ctx.path("report.json"), report)?;
    }
    if ctx.config.wants("svg") {
        let out = emit_plot_data(report, &ctx.path("plots")).map_err(runtime)?;
        if let Some(n) = out.notice {
            ctx.note(n);
        }
    }
    Ok(())
}

fn sweep(ctx: Context) -> Result<PathBuf, AppError> {
    let plan = ctx
        .config
        .sweep_plan()
        .ok_or_else(|| AppError::Validation("[sweep]: section required by the sweep command".into()))?;
    ctx.prepare()?;
    ctx.note("solving ground state");
    let gs = solve_sweep_ground_state(&plan).map_err(runtime)?;
    ctx.note(format!("running {} values of eps on {} threads", plan.eps.len(), plan.threads));
    let report = run_sweep_with(&plan, &gs).map_err(runtime)?;
    for run in report.completed() {
        let c = &run.comparison;
        ctx.note(format!(
            "eps {}: position error {:.3e}, max|K| {:.3e}, max|H| {:.3e}, F coefficient {:.3e}",
            run.eps, c.position_error, c.max_k, c.max_h, c.f_coefficient
        ));
    }
    for (name, t) in [
        ("position error", &report.position_error),
        ("max|K|", &report.max_k),
        ("max|H|", &report.max_h),
        ("F coefficient", &report.f_coefficient),
    ] {
        let verdict = match t.strictly_decreasing {
            Some(true) => "strictly decreasing",
            Some(false) => "not monotone",
            None => "too few runs",
        };
        let fit = match &t.fit {
            Ok(f) => format!("slope {:.3} (R² {:.4})", f.slope, f.quality),
            Err(e) => e.clone(),
        };
        ctx.note(format!("{name}: {verdict}; {fit}"));
    }
    emit_report(&ctx, &report, |e| format!("timeseries_eps{e}.csv"))?;
    let failures: Vec<String> = report.failures().map(|(e, m)| format!("eps {e}: {m}")).collect();
    if failures.is_empty() {
        Ok(ctx.dir)
    } else {
        Err(AppError::Runtime(format!("runs failed:\n  {}", failures.join("\n  "))))
    }
}

#[derive(Serialize)]
struct StoredComparison {
    comparison: soliton_core::classical::ComparisonReport,
    replay: Option<soliton_core::classical::ReplayReport>,
}

fn compare_stored(ctx: Context) -> Result<PathBuf, AppError> {
    let path = ctx.path("timeseries.csv");
    if !path.exists() {
        return Err(runtime(format!("{} not found; run `evolve` with this config first", path.display())));
    }
    let (_, rows) = read_timeseries(&path).map_err(runtime)?;
    let series: Vec<EffectivePoint> = rows
        .iter()
        .map(|r| EffectivePoint {
            t: r.t,
            q: r.q.clone(),
            p: r.p.clone(),
            mass: r.mass,
            k: r.k.clone(),
            h: r.h.clone(),
            f: r.f.clone(),
        })
        .collect();
    if series.iter().any(|s| !s.mass.is_finite()) {
        return Err(runtime("time series contains samples without a soliton part"));
    }
    let spec = ctx.config.run_spec().map_err(runtime)?;
    let horizon = series.last().map_or(0.0, |s| s.t - series[0].t);
    let classical = integrate_classical(
        &spec.initial.qbar,
        &spec.initial.pbar,
        &spec.potential,
        spec.mass,
        horizon,
        spec.time.dt,
    )
    .map_err(runtime)?
    .every(spec.time.sample_stride);
    let kernel = build_kernel(spec.eta, &spec.grid).map_err(runtime)?;
    let comparison = compare(
        &series,
        &classical,
        RunScales {
            eta: spec.eta,
            eps: spec.eps,
            support_radius: kernel.support_radius(),
        },
    )
    .map_err(runtime)?;
    let replay = if series.len() >= 3 {
        Some(replay_effective(&series, &spec.potential).map_err(runtime)?)
    } else {
        None
    };
    ctx.note(format!(
        "position error {:.3e}, momentum error {:.3e}",
        comparison.position_error, comparison.momentum_error
    ));
    if let Some(r) = &replay {
        ctx.note(format!(
            "replay residuals: velocity {:.3e}, force {:.3e}",
            r.max_velocity_residual, r.max_force_residual
        ));
    }
    write_json(&ctx.path("comparison.json"), &StoredComparison { comparison, replay })?;
    Ok(ctx.dir)
}

fn plots(ctx: Context) -> Result<PathBuf, AppError> {
    let path = ctx.path("report.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| runtime(format!("{}: {e}; run `evolve` or `sweep` with this config first", path.display())))?;
    let report: SweepReport = serde_json::from_str(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let out = emit_plot_data(&report, &ctx.path("plots")).map_err(runtime)?;
    match out.notice {
        Some(n) => ctx.note(n),
        None => ctx.note(format!("wrote {} files", out.files.len())),
    }
    Ok(ctx.dir)
}
