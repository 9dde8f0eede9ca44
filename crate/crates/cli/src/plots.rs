//! Plot data files and SVG charts for a sweep report.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use soliton_core::sweep::{RunRecord, SweepReport};

use crate::series::render;

#[derive(Debug, Default, PartialEq)]
pub struct PlotOutcome {
    pub files: Vec<PathBuf>,
    /// Set when nothing was written.
    pub notice: Option<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct PlotError {
    pub path: String,
    pub message: String,
}

fn plot_err(path: &Path, e: impl ToString) -> PlotError {
    PlotError {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// One overlay per completed run, plus a log-log trend chart when at least two
/// runs completed.
pub fn emit_plot_data(report: &SweepReport, dir: &Path) -> Result<PlotOutcome, PlotError> {
    let done: Vec<&RunRecord> = report.completed().collect();
    if done.is_empty() {
        return Ok(PlotOutcome {
            files: vec![],
            notice: Some("report has no completed runs; no plot files written".into()),
        });
    }
    std::fs::create_dir_all(dir).map_err(|e| plot_err(dir, e))?;
    let mut files = Vec::new();
    for run in &done {
        let stem = format!("overlay_eps{}", run.eps);
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, overlay_csv(run)).map_err(|e| plot_err(&csv, e))?;
        files.push(csv);
        let svg = dir.join(format!("{stem}.svg"));
        overlay_chart(run, &svg)?;
        files.push(svg);
    }
    if done.len() >= 2 {
        let csv = dir.join("trend.csv");
        std::fs::write(&csv, trend_csv(report)).map_err(|e| plot_err(&csv, e))?;
        files.push(csv);
        let svg = dir.join("trend.svg");
        trend_chart(report, &svg)?;
        files.push(svg);
    }
    Ok(PlotOutcome { files, notice: None })
}

fn overlay_csv(run: &RunRecord) -> String {
    let dim = run.grid_points.len();
    let mut head = vec!["t".to_string()];
    head.extend((1..=dim).map(|i| format!("q_eps_{i}")));
    head.extend((1..=dim).map(|i| format!("q_classical_{i}")));
    let mut out = head.join(",") + "\n";
    for (i, s) in run.samples.iter().enumerate() {
        let mut row = vec![render(s.t)];
        match &s.state {
            Some(st) => row.extend(st.q.iter().map(|v| render(*v))),
            None => row.extend((0..dim).map(|_| render(f64::NAN))),
        }
        match run.classical.q.get(i) {
            Some(q) => row.extend(q.iter().map(|v| render(*v))),
            None => row.extend((0..dim).map(|_| render(f64::NAN))),
        }
        out += &(row.join(",") + "\n");
    }
    out
}

fn trend_csv(report: &SweepReport) -> String {
    let mut out = String::from("eps,position_error,max_K,max_H,F_coefficient\n");
    for run in report.completed() {
        let c = &run.comparison;
        let row = [run.eps, c.position_error, c.max_k, c.max_h, c.f_coefficient].map(render);
        out += &(row.join(",") + "\n");
    }
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn overlay_chart(run: &RunRecord, path: &Path) -> Result<(), PlotError> {
    let soliton: Vec<(f64, f64)> = run
        .samples
        .iter()
        .filter_map(|s| s.state.as_ref().map(|st| (s.t, st.q[0])))
        .collect();
    let classical: Vec<(f64, f64)> = run.classical.times.iter().zip(&run.classical.q).map(|(t, q)| (*t, q[0])).collect();
    let (t0, t1) = bounds(soliton.iter().chain(&classical).map(|p| p.0));
    let (y0, y1) = bounds(soliton.iter().chain(&classical).map(|p| p.1));
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    let e = |x| plot_err(path, x);
    root.fill(&WHITE).map_err(e)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("barycenter vs classical path, eps = {}", run.eps), ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(t0..t1, y0..y1)
        .map_err(e)?;
    chart.configure_mesh().x_desc("t").y_desc("q").draw().map_err(e)?;
    chart
        .draw_series(LineSeries::new(classical, &BLUE))
        .map_err(e)?
        .label("classical")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    chart
        .draw_series(soliton.iter().map(|&p| Circle::new(p, 2, RED.filled())))
        .map_err(e)?
        .label("soliton")
        .legend(|(x, y)| Circle::new((x + 10, y), 3, RED.filled()));
    chart
        .configure_series_labels()
        .background_style(WHITE)
        .border_style(BLACK)
        .draw()
        .map_err(e)?;
    root.present().map_err(e)?;
    Ok(())
}

fn trend_chart(report: &SweepReport, path: &Path) -> Result<(), PlotError> {
    let series: Vec<(&str, RGBColor, Vec<(f64, f64)>)> = [
        ("position error", BLUE, &report.position_error),
        ("max |K|", RED, &report.max_k),
        ("max |H|", GREEN, &report.max_h),
        ("F coefficient", MAGENTA, &report.f_coefficient),
    ]
    .into_iter()
    .map(|(name, color, trend)| {
        let pts = trend
            .eps
            .iter()
            .zip(&trend.values)
            .filter(|(_, v)| **v > 0.0 && v.is_finite())
            .map(|(e, v)| (*e, *v))
            .collect();
        (name, color, pts)
    })
    .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.2.iter().copied()).collect();
    let (emin, emax) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (vmin, vmax) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (emin, emax) = if emin.is_finite() { (emin / 1.2, emax * 1.2) } else { (0.01, 1.0) };
    let (vmin, vmax) = if vmin.is_finite() { (vmin / 2.0, vmax * 2.0) } else { (1e-6, 1.0) };
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    let e = |x| plot_err(path, x);
    root.fill(&WHITE).map_err(e)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("halo terms and tracking error vs eps", ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d((emin..emax).log_scale(), (vmin..vmax).log_scale())
        .map_err(e)?;
    chart.configure_mesh().x_desc("eps").y_desc("value").draw().map_err(e)?;
    for (name, color, pts) in series {
        chart.draw_series(LineSeries::new(pts.clone(), color)).map_err(e)?;
        chart
            .draw_series(pts.into_iter().map(move |p| Circle::new(p, 3, color.filled())))
            .map_err(e)?
            .label(name)
            .legend(move |(x, y)| Circle::new((x + 10, y), 3, color.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE)
        .border_style(BLACK)
        .draw()
        .map_err(e)?;
    root.present().map_err(e)?;
    Ok(())
}
