use num_complex::Complex64;
use proptest::prelude::*;

use soliton_core::ground_state::internal_energy;
use soliton_core::model::{boost, momentum_density, rescale_field, total_momentum};
use soliton_core::{ComplexField, NonlinearitySpec, SpatialGrid};

fn gaussian(grid: &SpatialGrid, width: f64, shift: f64, phase: f64) -> ComplexField {
    ComplexField::from_fn(grid.clone(), |x| {
        let r2: f64 = x.iter().map(|v| (v - shift) * (v - shift)).sum();
        Complex64::from_polar((-r2 / (2.0 * width * width)).exp(), phase)
    })
}

proptest! {
    #[test]
    fn rescaled_nonlinearity_is_the_direct_identity(
        s in 0.0f64..6.0,
        nu in 2.05f64..5.95,
        k in 0usize..3,
    ) {
        let eps = [1.0, 0.5, 0.25][k];
        let spec = NonlinearitySpec::new(1, nu, eps).unwrap();
        let direct = eps.powf(-3.0) * spec.eval_w(eps.sqrt() * s).unwrap();
        let got = spec.eval_w_eps(s).unwrap();
        prop_assert!((got - direct).abs() <= 4.0 * f64::EPSILON * direct.abs().max(1e-300));
    }

    #[test]
    fn second_derivative_matches_differences(s in 0.05f64..4.0, nu in 2.1f64..5.9) {
        let spec = NonlinearitySpec::new(1, nu, 1.0).unwrap();
        let h = 1e-6;
        let fd = (spec.eval_w_prime(s + h).unwrap() - spec.eval_w_prime(s - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - spec.eval_w_second(s).unwrap()).abs() <= 1e-6);
    }

    #[test]
    fn constant_phase_carries_no_momentum(phase in -3.2f64..3.2, width in 0.5f64..3.0) {
        let grid = SpatialGrid::cubic(1, 40.0, 256).unwrap();
        let psi = gaussian(&grid, width, 0.0, phase);
        let j = momentum_density(&psi);
        prop_assert!(j[0].iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn plane_wave_momentum(p in -2.0f64..2.0, width in 0.8f64..2.0) {
        let grid = SpatialGrid::cubic(1, 40.0, 512).unwrap();
        let mut psi = gaussian(&grid, width, 0.0, 0.0);
        let c = psi.charge();
        psi.scale(1.0 / c.sqrt());
        // only grid wavenumbers make exp(ipx) periodic
        let k = (p * 40.0 / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI / 40.0;
        let u2 = psi.density();
        boost(&mut psi, &[k]);
        let j = momentum_density(&psi);
        for (a, b) in j[0].iter().zip(&u2) {
            prop_assert!((a - k * b).abs() <= 1e-10);
        }
        prop_assert!((total_momentum(&psi)[0] - k).abs() <= 1e-10);
    }

    #[test]
    fn rescaling_keeps_charge_and_scales_energy(width in 1.0f64..3.0, k in 0usize..2) {
        let eps = [0.5, 0.25][k];
        let grid = SpatialGrid::cubic(1, 60.0, 4096).unwrap();
        let v = gaussian(&grid, width, 0.0, 0.0);
        let u = rescale_field(&v, eps, &grid).unwrap();
        prop_assert!((u.charge() - v.charge()).abs() <= 1e-12 * v.charge());
        let spec = NonlinearitySpec::new(1, 3.0, 1.0).unwrap();
        let j1 = internal_energy(&grid, &re(&v), &spec, 1.0);
        let je = internal_energy(&grid, &re(&u), &spec.at_scale(eps).unwrap(), 1.0);
        prop_assert!((eps * eps * je - j1).abs() <= 1e-9 * j1.abs(), "{} vs {}", eps * eps * je, j1);
    }
}

fn re(f: &ComplexField) -> Vec<f64> {
    f.samples().iter().map(|v| v.re).collect()
}

#[test]
fn unit_scale_rescaling_is_identity() {
    let grid = SpatialGrid::cubic(1, 40.0, 256).unwrap();
    let v = gaussian(&grid, 1.3, 0.4, 0.2);
    assert_eq!(rescale_field(&v, 1.0, &grid).unwrap(), v);
}

#[test]
fn rescaled_value_at_half() {
    let spec = NonlinearitySpec::new(1, 3.0, 0.5).unwrap();
    let expect = 8.0 * (-(0.5f64.powf(1.5)) / 3.0);
    assert!((spec.eval_w_eps(1.0).unwrap() - expect).abs() < 1e-14);
    assert!((expect + 0.9428).abs() < 1e-4);
    assert_eq!(NonlinearitySpec::new(1, 3.0, 0.25).unwrap().eval_w_eps(0.0).unwrap(), 0.0);
}
