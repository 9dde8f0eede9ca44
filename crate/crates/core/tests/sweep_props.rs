use proptest::prelude::*;

use soliton_core::evolution::EvolutionConfig;
use soliton_core::sweep::{fit_trend, run_sweep, run_sweep_with, solve_sweep_ground_state, RunOutcome, SweepPlan, SweepReport};
use soliton_core::PotentialSpec;

fn tiny_plan(potential: PotentialSpec, pbar: f64) -> SweepPlan {
    SweepPlan {
        eps: vec![0.5, 0.8, 0.6],
        potential,
        qbar: vec![1.0],
        pbar: vec![pbar],
        extent: 40.0,
        base_points: 512,
        time: EvolutionConfig {
            dt: 1e-3,
            t_final: 0.3,
            sample_stride: 10,
            checkpoint_stride: 0,
        },
        refine: 4,
        threads: 2,
        ..Default::default()
    }
}

proptest! {
    #[test]
    fn power_laws_fit_exactly(k in -3.0f64..3.0, c in 0.01f64..100.0, n in 3usize..7) {
        let eps: Vec<f64> = (0..n).map(|i| 0.8 / (1.0 + i as f64)).collect();
        let values: Vec<f64> = eps.iter().map(|e| c * e.powf(k)).collect();
        let fit = fit_trend(&values, &eps).unwrap();
        prop_assert!((fit.slope - k).abs() <= 1e-10);
        prop_assert!(k.abs() < 1e-12 || (fit.quality - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn non_positive_values_are_not_fitted(bad in -1.0f64..=0.0) {
        prop_assert!(fit_trend(&[1.0, bad, 0.5], &[0.4, 0.2, 0.1]).is_err());
    }
}

#[test]
fn power_law_examples() {
    let eps = [0.4, 0.2, 0.1];
    assert_eq!(fit_trend(&eps, &eps).unwrap().slope, 1.0);
    let sq: Vec<f64> = eps.iter().map(|e| e * e).collect();
    assert!((fit_trend(&sq, &eps).unwrap().slope - 2.0).abs() < 1e-14);
    assert_eq!(fit_trend(&[0.3; 3], &eps).unwrap().slope, 0.0);
}

#[test]
fn reports_are_deterministic_and_order_invariant() {
    let plan = tiny_plan(PotentialSpec::Harmonic { stiffness: 1.0 }, 0.0);
    let a = run_sweep(&plan).unwrap();
    let b = run_sweep(&SweepPlan {
        eps: vec![0.8, 0.6, 0.5],
        threads: 1,
        ..plan.clone()
    })
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.runs.iter().map(|r| r.eps).collect::<Vec<_>>(), vec![0.8, 0.6, 0.5]);
    assert_eq!(a.failures().count(), 0);

    let mut shuffled: Vec<RunOutcome> = a.runs.clone();
    shuffled.rotate_left(1);
    assert_eq!(SweepReport::from_runs(shuffled), a);
}

#[test]
fn cached_ground_state_matches_fresh_solve() {
    let plan = tiny_plan(PotentialSpec::Zero, 0.5);
    let gs = solve_sweep_ground_state(&plan).unwrap();
    let again = solve_sweep_ground_state(&plan).unwrap();
    assert_eq!(gs, again);
    assert_eq!(run_sweep_with(&plan, &gs).unwrap(), run_sweep(&plan).unwrap());
}

#[test]
fn free_sweep_tracks_at_grid_level() {
    let plan = tiny_plan(PotentialSpec::Zero, 0.5);
    let report = run_sweep(&plan).unwrap();
    for run in report.completed() {
        let dx = plan.extent / run.grid_points[0] as f64;
        assert!(run.comparison.position_error <= dx, "eps {} err {}", run.eps, run.comparison.position_error);
    }
}

#[test]
fn failing_runs_are_recorded() {
    let plan = SweepPlan {
        energy_bound: 1e-3,
        ..tiny_plan(PotentialSpec::Harmonic { stiffness: 1.0 }, 0.0)
    };
    let report = run_sweep(&plan).unwrap();
    assert_eq!(report.failures().count(), 3);
    assert_eq!(report.completed().count(), 0);
    assert_eq!(report.position_error.strictly_decreasing, None);
    assert!(report.position_error.fit.is_err());
}

#[test]
fn invalid_plans_are_rejected() {
    assert!(run_sweep(&SweepPlan {
        eps: vec![],
        ..Default::default()
    })
    .is_err());
    assert!(run_sweep(&SweepPlan {
        eps: vec![1.5],
        ..Default::default()
    })
    .is_err());
}
