use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use soliton_core::evolution::{
    assemble_initial_data, evolve, exact_free_soliton, step, EvolutionConfig, InitialData,
    Perturbation, Stepper,
};
use soliton_core::ground_state::{rescale_ground_state, solve_with, GroundState, SolverOptions};
use soliton_core::model::total_momentum;
use soliton_core::observables::energy_report;
use soliton_core::{ComplexField, Model, NonlinearitySpec, PhysicalParams, PotentialSpec, SpatialGrid};

fn model(extent: f64, n: usize, eps: f64, v: PotentialSpec) -> Model {
    Model::new(
        SpatialGrid::cubic(1, extent, n).unwrap(),
        NonlinearitySpec::new(1, 3.0, eps).unwrap(),
        v,
        PhysicalParams::new(1.0, eps).unwrap(),
    )
    .unwrap()
}

/// Ground state on a box twice the run box so rescaling to ε = 0.5 needs no roll-off.
fn wide_ground_state() -> &'static GroundState {
    static GS: OnceLock<GroundState> = OnceLock::new();
    GS.get_or_init(|| {
        solve_with(
            &NonlinearitySpec::new(1, 3.0, 1.0).unwrap(),
            &PhysicalParams::new(1.0, 1.0).unwrap(),
            &SpatialGrid::cubic(1, 160.0, 8192).unwrap(),
            SolverOptions {
                tol: 1e-11,
                ..Default::default()
            },
        )
        .unwrap()
    })
}

fn packet(grid: &SpatialGrid, width: f64, k: f64, amp: f64) -> ComplexField {
    let mut f = ComplexField::from_fn(grid.clone(), |x| {
        Complex64::from_polar(amp * (-x[0] * x[0] / (2.0 * width * width)).exp(), k * x[0])
    });
    let c = f.charge();
    f.scale(1.0 / c.sqrt());
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn charge_is_conserved(width in 0.5f64..2.0, k in -2.0f64..2.0, eps in 0.3f64..1.0, stiff in 0.0f64..1.0) {
        let m = model(40.0, 1024, eps, PotentialSpec::Harmonic { stiffness: stiff });
        let mut psi = packet(&m.grid, width, k, 1.0);
        let st = Stepper::new(&m, 1e-3).unwrap();
        for _ in 0..300 {
            st.advance(&mut psi).unwrap();
        }
        prop_assert!((psi.charge() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn free_momentum_is_conserved(width in 0.6f64..2.0, k in -1.5f64..1.5, eps in 0.4f64..1.0) {
        let m = model(40.0, 1024, eps, PotentialSpec::Zero);
        let mut psi = packet(&m.grid, width, k, 1.0);
        let p0 = total_momentum(&psi)[0];
        let st = Stepper::new(&m, 1e-3).unwrap();
        for _ in 0..300 {
            st.advance(&mut psi).unwrap();
        }
        prop_assert!((total_momentum(&psi)[0] - p0).abs() <= 1e-10);
    }

    #[test]
    fn stepping_back_returns_the_initial_field(width in 0.6f64..2.0, k in -1.0f64..1.0) {
        let m = model(40.0, 512, 0.6, PotentialSpec::Harmonic { stiffness: 0.5 });
        let psi0 = packet(&m.grid, width, k, 1.0);
        let fwd = Stepper::new(&m, 1e-3).unwrap();
        let back = Stepper::new(&m, -1e-3).unwrap();
        let mut psi = psi0.clone();
        for _ in 0..200 {
            fwd.advance(&mut psi).unwrap();
        }
        for _ in 0..200 {
            back.advance(&mut psi).unwrap();
        }
        prop_assert!(psi.l2_distance(&psi0) <= 1e-8);
    }
}

#[test]
fn zero_step_is_identity() {
    let m = model(40.0, 256, 0.7, PotentialSpec::Linear { slope: 0.3 });
    let psi = packet(&m.grid, 1.0, 0.5, 1.0);
    assert_eq!(step(&psi, 0.0, &m).unwrap().samples(), psi.samples());
}

#[test]
fn free_soliton_error_is_second_order() {
    let gs = wide_ground_state();
    let m = model(80.0, 4096, 0.5, PotentialSpec::Zero);
    let rs = rescale_ground_state(gs, 0.5, &m.grid).unwrap();
    let data = InitialData {
        qbar: vec![-5.0],
        pbar: vec![1.0],
        perturbation: Perturbation::Zero,
        energy_bound: 10.0,
    };
    let psi0 = assemble_initial_data(&rs, &data, &m).unwrap().field;
    let t = 2.0;
    let exact = exact_free_soliton(t, &rs, &[-5.0], &[1.0], 1.0).unwrap();
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let st = Stepper::new(&m, dt).unwrap();
            let mut psi = psi0.clone();
            for _ in 0..(t / dt).round() as usize {
                st.advance(&mut psi).unwrap();
            }
            psi.l2_distance(&exact)
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() <= 0.8, "errors {errs:?}");
    }
}

#[test]
fn exact_soliton_at_zero_is_the_assembled_datum() {
    let gs = wide_ground_state();
    let m = model(80.0, 4096, 0.5, PotentialSpec::Zero);
    let rs = rescale_ground_state(gs, 0.5, &m.grid).unwrap();
    let data = InitialData {
        qbar: vec![3.0],
        pbar: vec![0.7],
        perturbation: Perturbation::Zero,
        energy_bound: 10.0,
    };
    let a = assemble_initial_data(&rs, &data, &m).unwrap();
    let e = exact_free_soliton(0.0, &rs, &[3.0], &[0.7], 1.0).unwrap();
    assert!(a.field.l2_distance(&e) <= 1e-12);
    assert!((a.field.charge() - 1.0).abs() <= 1e-12);
    let standing = exact_free_soliton(1.3, &rs, &[3.0], &[0.0], 1.0).unwrap();
    let phase = Complex64::from_polar(1.0, -rs.omega() * 1.3);
    let at0 = exact_free_soliton(0.0, &rs, &[3.0], &[0.0], 1.0).unwrap();
    for (a, b) in standing.samples().iter().zip(at0.samples()) {
        assert!((a - b * phase).norm() <= 1e-12);
    }
}

#[test]
fn assembled_energy_splits_into_internal_and_dynamical() {
    let gs = wide_ground_state();
    let eps = 0.5;
    let c0 = gs.energy();
    let free = model(80.0, 4096, eps, PotentialSpec::Zero);
    let rs = rescale_ground_state(gs, eps, &free.grid).unwrap();
    let moving = InitialData {
        qbar: vec![0.0],
        pbar: vec![1.2],
        perturbation: Perturbation::Zero,
        energy_bound: 10.0,
    };
    let psi = assemble_initial_data(&rs, &moving, &free).unwrap().field;
    let e = energy_report(&psi, &free);
    assert!((e.total - (c0 / (eps * eps) + 0.5 * 1.2 * 1.2)).abs() <= 1e-6, "{}", e.total);
    assert!((e.dynamical - 0.72).abs() <= 1e-6);

    let harmonic = model(80.0, 4096, eps, PotentialSpec::Harmonic { stiffness: 1.0 });
    let standing = InitialData {
        qbar: vec![2.0],
        pbar: vec![0.0],
        perturbation: Perturbation::Zero,
        energy_bound: 10.0,
    };
    let psi = assemble_initial_data(&rs, &standing, &harmonic).unwrap().field;
    let e = energy_report(&psi, &harmonic);
    let v = harmonic.potential.sample(&harmonic.grid);
    let pot: f64 = psi.density().iter().zip(&v).map(|(d, v)| d * v).sum::<f64>() * harmonic.grid.spacing(0);
    assert!((e.total - (c0 / (eps * eps) + pot)).abs() <= 1e-6);
}

#[test]
fn observers_see_every_stride() {
    struct Count(Vec<f64>);
    impl soliton_core::evolution::Observer for Count {
        fn observe(&mut self, psi: &ComplexField) -> soliton_core::Result<()> {
            self.0.push(psi.time());
            Ok(())
        }
    }
    let m = model(40.0, 256, 0.8, PotentialSpec::Zero);
    let psi = packet(&m.grid, 1.0, 0.0, 1.0);
    let cfg = EvolutionConfig {
        dt: 1e-2,
        t_final: 1.0,
        sample_stride: 25,
        checkpoint_stride: 0,
    };
    let mut c = Count(vec![]);
    let out = evolve(psi, &m, &cfg, &mut [&mut c]).unwrap();
    assert_eq!(out.steps, 100);
    assert_eq!(c.0.len(), 5);
    assert!((c.0[4] - 1.0).abs() < 1e-12);
}
