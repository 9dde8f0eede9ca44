//! Point-particle limit `q̇ = p/m`, `ṗ = -∇V(q)` and comparison with the
//! measured soliton trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PotentialSpec;
use crate::observables::TrackSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    /// `|p|²/2m + V(q)` per sample.
    pub energy: Vec<f64>,
}

impl ClassicalTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Every `stride`-th point, starting with the first.
    pub fn every(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let pick = |v: &Vec<Vec<f64>>| v.iter().step_by(stride).cloned().collect();
        Self {
            times: self.times.iter().step_by(stride).cloned().collect(),
            q: pick(&self.q),
            p: pick(&self.p),
            energy: self.energy.iter().step_by(stride).cloned().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|E(t) - E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        self.energy
            .iter()
            .fold(0.0, |m, e| m.max((e - e0).abs() / scale))
    }
}

/// Classical fourth-order Runge–Kutta with fixed step `dt` up to `T`.
pub fn integrate_classical(
    q0: &[f64],
    p0: &[f64],
    potential: &PotentialSpec,
    mass: f64,
    t_final: f64,
    dt: f64,
) -> Result<ClassicalTrajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive (got {dt})")));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Parameter(format!("mass must be positive (got {mass})")));
    }
    if q0.len() != p0.len() {
        return Err(Error::Parameter("q0 and p0 differ in dimension".into()));
    }
    let dim = q0.len();
    let steps = (t_final / dt).round() as usize;
    let energy = |q: &[f64], p: &[f64]| {
        p.iter().map(|v| v * v).sum::<f64>() / (2.0 * mass) + potential.value(q)
    };
    let rhs = |q: &[f64], p: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let dq = p.iter().map(|v| v / mass).collect();
        let dp = potential.gradient(q).into_iter().map(|g| -g).collect();
        (dq, dp)
    };
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> {
        x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
    };
    let mut out = ClassicalTrajectory {
        times: vec![0.0],
        q: vec![q0.to_vec()],
        p: vec![p0.to_vec()],
        energy: vec![energy(q0, p0)],
    };
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    for n in 1..=steps {
        let (k1q, k1p) = rhs(&q, &p);
        let (k2q, k2p) = rhs(&axpy(&q, 0.5 * dt, &k1q), &axpy(&p, 0.5 * dt, &k1p));
        let (k3q, k3p) = rhs(&axpy(&q, 0.5 * dt, &k2q), &axpy(&p, 0.5 * dt, &k2p));
        let (k4q, k4p) = rhs(&axpy(&q, dt, &k3q), &axpy(&p, dt, &k3p));
        for a in 0..dim {
            q[a] += dt / 6.0 * (k1q[a] + 2.0 * k2q[a] + 2.0 * k3q[a] + k4q[a]);
            p[a] += dt / 6.0 * (k1p[a] + 2.0 * k2p[a] + 2.0 * k3p[a] + k4p[a]);
        }
        out.times.push(n as f64 * dt);
        out.q.push(q.clone());
        out.p.push(p.clone());
        out.energy.push(energy(&q, &p));
    }
    Ok(out)
}

/// Soliton quantities entering the effective equations at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivePoint {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub mass: f64,
    pub k: Vec<f64>,
    pub h: Vec<f64>,
    pub f: Vec<f64>,
}

impl EffectivePoint {
    /// Fails with a degenerate-decomposition error if the sample has no soliton.
    pub fn from_sample(s: &TrackSample) -> Result<Self> {
        match (&s.state, &s.halo) {
            (Some(state), Some(halo)) => Ok(Self {
                t: s.t,
                q: state.q.clone(),
                p: state.p.clone(),
                mass: state.mass,
                k: halo.k.clone(),
                h: halo.h(),
                f: halo.f.clone(),
            }),
            _ => Err(Error::Degenerate),
        }
    }
}

pub fn effective_series(samples: &[TrackSample]) -> Result<Vec<EffectivePoint>> {
    samples.iter().map(EffectivePoint::from_sample).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    /// Interior sample times.
    pub times: Vec<f64>,
    /// `q̇ - (p/m_ε + K)` per interior sample.
    pub velocity_residual: Vec<Vec<f64>>,
    /// `ṗ - (-∇V(q) + F + H)` per interior sample.
    pub force_residual: Vec<Vec<f64>>,
    pub max_velocity_residual: f64,
    pub max_force_residual: f64,
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    let h = times[1] - times[0];
    if !(h > 0.0) {
        return Err(Error::Alignment("sample times are not increasing".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Alignment(format!(
                "non-uniform sampling near t = {}",
                w[0]
            )));
        }
    }
    Ok(h)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Centered-difference check of `q̇ = p/m_ε + K` and `ṗ = -∇V(q) + F + H`.
pub fn replay_effective(series: &[EffectivePoint], potential: &PotentialSpec) -> Result<ReplayReport> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "replay needs at least 3 samples (got {})",
            series.len()
        )));
    }
    let times: Vec<f64> = series.iter().map(|s| s.t).collect();
    check_uniform(&times)?;
    let mut report = ReplayReport {
        times: Vec::new(),
        velocity_residual: Vec::new(),
        force_residual: Vec::new(),
        max_velocity_residual: 0.0,
        max_force_residual: 0.0,
    };
    for w in series.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let span = c.t - a.t;
        let grad = potential.gradient(&b.q);
        let rv: Vec<f64> = (0..b.q.len())
            .map(|i| (c.q[i] - a.q[i]) / span - (b.p[i] / b.mass + b.k[i]))
            .collect();
        let rf: Vec<f64> = (0..b.q.len())
            .map(|i| (c.p[i] - a.p[i]) / span - (-grad[i] + b.f[i] + b.h[i]))
            .collect();
        report.max_velocity_residual = report.max_velocity_residual.max(norm(&rv));
        report.max_force_residual = report.max_force_residual.max(norm(&rf));
        report.times.push(b.t);
        report.velocity_residual.push(rv);
        report.force_residual.push(rf);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `sup_t |q_ε(t) - 𝔮(t)|`.
    pub position_error: f64,
    /// `sup_t |p_ε(t) - 𝔭(t)|`.
    pub momentum_error: f64,
    pub max_k: f64,
    pub max_h: f64,
    pub max_f: f64,
    /// `∫_0^T F_ε dt` (trapezoidal), per axis.
    pub f_integral: Vec<f64>,
    /// Smallest `c` with `|∫_{τ₀}^{τ₁} F_ε| ≤ c (1 + |τ₁ - τ₀|)` over all sample pairs.
    pub f_coefficient: f64,
    pub eta: f64,
    pub eps: f64,
    pub support_radius: f64,
}

/// Run metadata carried into a [`ComparisonReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunScales {
    pub eta: f64,
    pub eps: f64,
    pub support_radius: f64,
}

pub fn compare(
    series: &[EffectivePoint],
    cls: &ClassicalTrajectory,
    scales: RunScales,
) -> Result<ComparisonReport> {
    if series.is_empty() {
        return Err(Error::InsufficientData("empty soliton series".into()));
    }
    if series.len() != cls.len() {
        return Err(Error::Alignment(format!(
            "{} soliton samples vs {} classical samples",
            series.len(),
            cls.len()
        )));
    }
    for (s, &t) in series.iter().zip(&cls.times) {
        if (s.t - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::Alignment(format!("sample at t = {} vs classical t = {t}", s.t)));
        }
    }
    let dim = series[0].q.len();
    let mut report = ComparisonReport {
        position_error: 0.0,
        momentum_error: 0.0,
        max_k: 0.0,
        max_h: 0.0,
        max_f: 0.0,
        f_integral: vec![0.0; dim],
        f_coefficient: 0.0,
        eta: scales.eta,
        eps: scales.eps,
        support_radius: scales.support_radius,
    };
    for (i, s) in series.iter().enumerate() {
        let dq: Vec<f64> = s.q.iter().zip(&cls.q[i]).map(|(a, b)| a - b).collect();
        let dp: Vec<f64> = s.p.iter().zip(&cls.p[i]).map(|(a, b)| a - b).collect();
        report.position_error = report.position_error.max(norm(&dq));
        report.momentum_error = report.momentum_error.max(norm(&dp));
        report.max_k = report.max_k.max(norm(&s.k));
        report.max_h = report.max_h.max(norm(&s.h));
        report.max_f = report.max_f.max(norm(&s.f));
    }
    // cumulative trapezoid of F
    let mut cumulative = vec![vec![0.0; dim]];
    for w in series.windows(2) {
        let dt = w[1].t - w[0].t;
        let last = cumulative.last().unwrap().clone();
        cumulative.push(
            (0..dim)
                .map(|a| last[a] + 0.5 * dt * (w[0].f[a] + w[1].f[a]))
                .collect(),
        );
    }
    report.f_integral = cumulative.last().unwrap().clone();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let d: Vec<f64> = (0..dim).map(|a| cumulative[j][a] - cumulative[i][a]).collect();
            let c = norm(&d) / (1.0 + (series[j].t - series[i].t).abs());
            report.f_coefficient = report.f_coefficient.max(c);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_motion_is_exact() {
        let c = integrate_classical(&[1.0], &[0.5], &PotentialSpec::Zero, 2.0, 10.0, 0.01).unwrap();
        for (t, q) in c.times.iter().zip(&c.q) {
            assert!((q[0] - (1.0 + 0.25 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_force() {
        let v = PotentialSpec::Linear { slope: 0.3 };
        let c = integrate_classical(&[0.0], &[1.0], &v, 1.0, 5.0, 0.01).unwrap();
        for (t, p) in c.times.iter().zip(&c.p) {
            assert!((p[0] - (1.0 - 0.3 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn oscillator_closed_form_and_energy() {
        let v = PotentialSpec::Harmonic { stiffness: 1.0 };
        let c = integrate_classical(&[0.7], &[-0.4], &v, 1.0, 4.0, 1e-3).unwrap();
        let last = c.len() - 1;
        let t = c.times[last];
        assert!((c.q[last][0] - (0.7 * t.cos() - 0.4 * t.sin())).abs() < 1e-10);
        let c = integrate_classical(&[2.0], &[0.0], &v, 1.0, 10.0, 0.01).unwrap();
        assert!(c.energy_drift() < 1e-10);
    }

    fn point(t: f64, q: f64, p: f64) -> EffectivePoint {
        EffectivePoint {
            t,
            q: vec![q],
            p: vec![p],
            mass: 1.0,
            k: vec![0.0],
            h: vec![0.0],
            f: vec![0.0],
        }
    }

    #[test]
    fn replay_detects_constant_violation() {
        // q̇ = p + 0.25 while K = 0
        let series: Vec<EffectivePoint> = (0..20)
            .map(|i| {
                let t = 0.1 * i as f64;
                point(t, 1.25 * t, 1.0)
            })
            .collect();
        let r = replay_effective(&series, &PotentialSpec::Zero).unwrap();
        assert!((r.max_velocity_residual - 0.25).abs() < 1e-12);
        assert!(r.max_force_residual < 1e-12);
    }

    #[test]
    fn replay_needs_three_samples() {
        let series = vec![point(0.0, 0.0, 0.0), point(0.1, 0.0, 0.0)];
        assert!(matches!(
            replay_effective(&series, &PotentialSpec::Zero),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn compare_identical_and_misaligned() {
        let v = PotentialSpec::Harmonic { stiffness: 1.0 };
        let c = integrate_classical(&[1.0], &[0.0], &v, 1.0, 1.0, 0.1).unwrap();
        let series: Vec<EffectivePoint> = c
            .times
            .iter()
            .enumerate()
            .map(|(i, &t)| point(t, c.q[i][0], c.p[i][0]))
            .collect();
        let scales = RunScales {
            eta: 0.2,
            eps: 0.2,
            support_radius: 1.0,
        };
        let r = compare(&series, &c, scales).unwrap();
        assert_eq!(r.position_error, 0.0);
        assert_eq!(r.momentum_error, 0.0);
        assert!(matches!(
            compare(&series[1..], &c, scales),
            Err(Error::Alignment(_))
        ));
    }
}
