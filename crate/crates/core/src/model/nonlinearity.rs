use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power-law nonlinearity `W(s) = -a s^nu / nu` and its ε-rescaled form
/// `W_ε(s) = ε^{-(N+2)} W(ε^{N/2} s)`.
///
/// The exponent must lie in the mass-subcritical window `2 < nu < 2 + 4/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    dim: usize,
    exponent: f64,
    amplitude: f64,
    eps: f64,
}

/// Moduli below this use the `W''(0) = 0` limit in [`NonlinearitySpec::phase_rate`].
pub const SMALL_MODULUS: f64 = 1e-15;

impl NonlinearitySpec {
    pub fn new(dim: usize, exponent: f64, eps: f64) -> Result<Self> {
        Self::with_amplitude(dim, exponent, 1.0, eps)
    }

    pub fn with_amplitude(dim: usize, exponent: f64, amplitude: f64, eps: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!("dimension {dim} not in 1..=3")));
        }
        let critical = subcritical_bound(dim);
        if !(exponent > 2.0 && exponent < critical) {
            return Err(Error::Parameter(format!(
                "exponent nu = {exponent} must satisfy 2 < nu < 2 + 4/N = {critical}"
            )));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::Parameter(format!(
                "amplitude must be positive (got {amplitude})"
            )));
        }
        check_eps(eps)?;
        Ok(Self {
            dim,
            exponent,
            amplitude,
            eps,
        })
    }

    /// Same nonlinearity at another scale ε.
    pub fn at_scale(&self, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self { eps, ..*self })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eval_w(&self, s: f64) -> Result<f64> {
        check_modulus(s)?;
        Ok(self.w(s))
    }

    pub fn eval_w_prime(&self, s: f64) -> Result<f64> {
        check_modulus(s)?;
        Ok(self.w_prime(s))
    }

    pub fn eval_w_second(&self, s: f64) -> Result<f64> {
        check_modulus(s)?;
        Ok(self.w_second(s))
    }

    pub fn eval_w_eps(&self, s: f64) -> Result<f64> {
        check_modulus(s)?;
        Ok(self.w_eps(s))
    }

    pub fn eval_w_eps_prime(&self, s: f64) -> Result<f64> {
        check_modulus(s)?;
        Ok(self.w_eps_prime(s))
    }

    pub(crate) fn w(&self, s: f64) -> f64 {
        -self.amplitude * s.powf(self.exponent) / self.exponent
    }

    pub(crate) fn w_prime(&self, s: f64) -> f64 {
        -self.amplitude * s.powf(self.exponent - 1.0)
    }

    pub(crate) fn w_second(&self, s: f64) -> f64 {
        -self.amplitude * (self.exponent - 1.0) * s.powf(self.exponent - 2.0)
    }

    fn half_dim(&self) -> f64 {
        0.5 * self.dim as f64
    }

    pub(crate) fn w_eps(&self, s: f64) -> f64 {
        let n = self.dim as f64;
        self.eps.powf(-(n + 2.0)) * self.w(self.eps.powf(self.half_dim()) * s)
    }

    pub(crate) fn w_eps_prime(&self, s: f64) -> f64 {
        self.eps.powf(-(self.half_dim() + 2.0)) * self.w_prime(self.eps.powf(self.half_dim()) * s)
    }

    /// `½ W_ε'(s) / s`, the local frequency of the nonlinear phase rotation.
    pub fn phase_rate(&self, s: f64) -> f64 {
        if s < SMALL_MODULUS {
            0.0
        } else {
            0.5 * self.w_eps_prime(s) / s
        }
    }

    /// `½ W_ε'(s) s - W_ε(s)`, the nonlinear pressure.
    pub(crate) fn pressure(&self, s: f64) -> f64 {
        0.5 * self.w_eps_prime(s) * s - self.w_eps(s)
    }
}

/// `2 + 4/N`.
pub fn subcritical_bound(dim: usize) -> f64 {
    2.0 + 4.0 / dim as f64
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("epsilon must be positive (got {eps})")))
    }
}

fn check_modulus(s: f64) -> Result<()> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("W is defined on s >= 0 (got {s})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic(eps: f64) -> NonlinearitySpec {
        NonlinearitySpec::new(1, 3.0, eps).unwrap()
    }

    #[test]
    fn vanishes_to_second_order_at_zero() {
        let w = cubic(1.0);
        assert_eq!(w.eval_w(0.0).unwrap(), 0.0);
        assert_eq!(w.eval_w_prime(0.0).unwrap(), 0.0);
        assert_eq!(w.eval_w_second(0.0).unwrap(), 0.0);
        assert_eq!(cubic(0.25).eval_w_eps(0.0).unwrap(), 0.0);
    }

    #[test]
    fn cubic_family_values() {
        let w = cubic(1.0);
        assert!((w.eval_w(1.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!((w.eval_w_prime(2.0).unwrap() + 4.0).abs() < 1e-15);
        // some s0 with W(s0) < 0
        assert!(w.eval_w(0.5).unwrap() < 0.0);
    }

    #[test]
    fn rescaled_value_at_half() {
        // ε^{-3} W(ε^{1/2}) = 8 * (-(0.5^{1.5}) / 3)
        let v = cubic(0.5).eval_w_eps(1.0).unwrap();
        assert!((v - (-0.942_809_041_582_063_4)).abs() < 1e-12);
    }

    #[test]
    fn negative_modulus_is_a_domain_error() {
        assert!(matches!(cubic(1.0).eval_w(-1.0), Err(Error::Domain(_))));
        assert!(matches!(cubic(1.0).eval_w_eps_prime(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_supercritical_and_bad_eps() {
        assert!(NonlinearitySpec::new(1, 6.0, 1.0).is_err());
        assert!(NonlinearitySpec::new(1, 7.0, 1.0).is_err());
        assert!(NonlinearitySpec::new(2, 4.0, 1.0).is_err());
        assert!(NonlinearitySpec::new(1, 2.0, 1.0).is_err());
        assert!(NonlinearitySpec::new(1, 3.0, 0.0).is_err());
        assert!(cubic(1.0).at_scale(-1.0).is_err());
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let w = cubic(1.0);
        let h = 1e-7;
        for i in 0..=40 {
            let s = 0.1 * i as f64;
            let lo = (s - h).max(0.0);
            let fd = (w.w_prime(s + h) - w.w_prime(lo)) / (s + h - lo);
            assert!((fd - w.w_second(s)).abs() < 1e-6, "s = {s}");
        }
    }

    #[test]
    fn phase_rate_has_zero_limit() {
        let w = cubic(0.3);
        assert_eq!(w.phase_rate(0.0), 0.0);
        assert_eq!(w.phase_rate(1e-16), 0.0);
        assert!(w.phase_rate(1.0) < 0.0);
    }

    proptest! {
        #[test]
        fn rescaling_identity(s in 0.0f64..10.0, which in 0usize..3, dim in 1usize..=3) {
            let eps = [1.0, 0.5, 0.25][which];
            let nu = if dim == 3 { 3.0 } else { 2.5 };
            let spec = NonlinearitySpec::new(dim, nu, eps).unwrap();
            let n = dim as f64;
            let direct = eps.powf(-(n + 2.0)) * spec.eval_w(eps.powf(n / 2.0) * s).unwrap();
            let scaled = spec.eval_w_eps(s).unwrap();
            prop_assert!((direct - scaled).abs() <= 1e-14 * direct.abs().max(1.0));
            if which == 0 {
                prop_assert_eq!(scaled, spec.eval_w(s).unwrap());
                prop_assert_eq!(spec.eval_w_eps_prime(s).unwrap(), spec.eval_w_prime(s).unwrap());
            }
        }
    }
}
