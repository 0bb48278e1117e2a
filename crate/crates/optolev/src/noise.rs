//! Momentum-diffusion rates of the two mechanical modes.
//!
//! Four channels heat each sphere's center-of-mass motion: collisions with
//! residual gas (D_a), scattering of trap light (D_t), scattering of cavity
//! photons (D_c), and — hypothetically — the CSL collapse noise (λ_sph).
//! All four are angular rates in s⁻¹ and add linearly in the mechanical
//! noise correlator; the drift matrix never sees ω_j, so these rates are the
//! only place the trapping frequency enters the steady state.

use std::f64::consts::PI;

use crate::constants::{AMU, C, HBAR, KB};
use crate::params::{DerivedQuantities, SystemConfig};
use crate::{Error, Result};

/// Mechanical mode selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::One, Mode::Two];

    pub fn index(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
        }
    }

    pub fn omega(self, dq: &DerivedQuantities) -> f64 {
        match self {
            Mode::One => dq.omega1,
            Mode::Two => dq.omega2,
        }
    }

    fn intensity(self, dq: &DerivedQuantities) -> f64 {
        dq.trap_intensity[(self.index() - 1) as usize]
    }
}

/// Diffusion budget of one mechanical mode, s⁻¹.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseBudget {
    pub mode_index: u8,
    /// Gas collisions.
    pub d_a: f64,
    /// Trap-light scattering.
    pub d_t: f64,
    /// Cavity-photon scattering.
    pub d_c: f64,
    /// CSL collapse noise (0 when disabled).
    pub lambda_sph: f64,
    pub total_with_csl: f64,
    pub total_without_csl: f64,
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "diffusion rates need omega > 0, got {omega}"
        )))
    }
}

/// Gas diffusion D_a = 2γ k_B T / (ħ ω_j), the high-temperature limit.
pub fn gas_diffusion(config: &SystemConfig, dq: &DerivedQuantities, mode: Mode) -> Result<f64> {
    let omega = mode.omega(dq);
    check_omega(omega)?;
    Ok(2.0 * dq.gamma * KB * config.gas_temperature / (HBAR * omega))
}

/// Trap-light scattering D_t = 8 ε_c² k_c⁶ R³ ℐ_j / (9 ρ₀ ω_j ω_Lt).
///
/// With ℐ_j inverted from ω_j this reduces to
/// (2/9) ε_c k_c⁶ R³ c W_t² ω_j / ω_Lt, linear in the trapping frequency.
pub fn trap_diffusion(config: &SystemConfig, dq: &DerivedQuantities, mode: Mode) -> Result<f64> {
    let omega = mode.omega(dq);
    check_omega(omega)?;
    let r3 = config.sphere_radius.powi(3);
    Ok(
        8.0 * dq.eps_c * dq.eps_c * dq.k_c.powi(6) * r3 * mode.intensity(dq)
            / (9.0 * config.sphere_density * omega * dq.omega_lt),
    )
}

/// Cavity-photon scattering D_c = 2 ε_c² k_c⁶ R³ ħ n_ph c / (9 ρ₀ ω_j V_c).
///
/// At fixed couplings G_j the photon number scales as n_ph ∝ ω/R³, so D_c is
/// independent of both R and ω.
pub fn cavity_diffusion(config: &SystemConfig, dq: &DerivedQuantities, mode: Mode) -> Result<f64> {
    let omega = mode.omega(dq);
    check_omega(omega)?;
    let r3 = config.sphere_radius.powi(3);
    Ok(
        2.0 * dq.eps_c * dq.eps_c * dq.k_c.powi(6) * r3 * HBAR * dq.n_ph * C
            / (9.0 * config.sphere_density * omega * dq.mode_volume),
    )
}

/// The dimensionless CSL kernel e^(−x) − 1 + (x/2)(e^(−x) + 1) with
/// x = R²/r_c².
///
/// Direct evaluation cancels catastrophically toward small x (the value is
/// O(x³) assembled from O(1) terms; even at x ~ 0.02 ten digits are gone),
/// so below x = 0.5 the series Σ_{k≥3} (−1)^(k−1) (k−2) x^k / (2 k!)
/// = x³/12 − x⁴/24 + x⁵/80 − ... is summed to convergence instead.
pub fn csl_bracket(x: f64) -> f64 {
    if x < 0.5 {
        let mut sum = 0.0f64;
        let mut sign = 1.0f64;
        let mut xpow = x * x * x;
        let mut factorial = 6.0f64; // 3!
        for k in 3..=60u32 {
            let term = sign * (k as f64 - 2.0) * xpow / (2.0 * factorial);
            sum += term;
            if term.abs() < f64::EPSILON * sum.abs() {
                break;
            }
            sign = -sign;
            xpow *= x;
            factorial *= (k + 1) as f64;
        }
        sum
    } else {
        let e = (-x).exp();
        e - 1.0 + 0.5 * x * (e + 1.0)
    }
}

/// Collapse-noise diffusion rate of a sphere,
/// λ_sph = (ħ/ω) (8π λ ρ₀ / m₀²) [kernel] r_c⁴ / R³ with m₀ the atomic mass
/// unit. Returns 0 when the channel is disabled or λ = 0.
pub fn csl_diffusion(config: &SystemConfig, omega: f64) -> Result<f64> {
    if config.sphere_radius <= 0.0 {
        return Err(Error::Config("csl diffusion needs R > 0".into()));
    }
    check_omega(omega)?;
    if !config.csl_enabled || config.csl_rate == 0.0 {
        return Ok(0.0);
    }
    let r = config.sphere_radius;
    let rc = config.csl_length;
    let x = (r / rc) * (r / rc);
    Ok(
        (HBAR / omega) * (8.0 * PI * config.csl_rate * config.sphere_density / (AMU * AMU))
            * csl_bracket(x)
            * rc.powi(4)
            / r.powi(3),
    )
}

/// All four rates and both totals for one mode.
pub fn budget(dq: &DerivedQuantities, config: &SystemConfig, mode: Mode) -> Result<NoiseBudget> {
    let d_a = gas_diffusion(config, dq, mode)?;
    let d_t = trap_diffusion(config, dq, mode)?;
    let d_c = cavity_diffusion(config, dq, mode)?;
    let lambda_sph = csl_diffusion(config, mode.omega(dq))?;
    let total_without_csl = d_a + d_t + d_c;
    Ok(NoiseBudget {
        mode_index: mode.index(),
        d_a,
        d_t,
        d_c,
        lambda_sph,
        total_with_csl: total_without_csl + lambda_sph,
        total_without_csl,
    })
}

/// Budgets for both modes at one (config, ω₁) point.
pub fn budgets(dq: &DerivedQuantities, config: &SystemConfig) -> Result<[NoiseBudget; 2]> {
    Ok([
        budget(dq, config, Mode::One)?,
        budget(dq, config, Mode::Two)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn baseline() -> SystemConfig {
        SystemConfig::default()
    }

    fn baseline_budget(omega1: f64, mode: Mode) -> NoiseBudget {
        let cfg = baseline();
        let dq = derive(&cfg, omega1).unwrap();
        budget(&dq, &cfg, mode).unwrap()
    }

    #[test]
    fn headline_rates_mode_one() {
        // frozen from a high-precision evaluation of the rate formulas
        let b = baseline_budget(1e4, Mode::One);
        assert_relative_eq!(b.d_a, 1.15410752217471, max_relative = 1e-12);
        assert_relative_eq!(b.d_t, 17.7632524544646, max_relative = 1e-12);
        assert_relative_eq!(b.d_c, 1.75967647416441, max_relative = 1e-12);
        assert_relative_eq!(b.lambda_sph, 93.5616958403337, max_relative = 1e-12);
    }

    #[test]
    fn headline_rates_mode_two() {
        let b = baseline_budget(1e4, Mode::Two);
        assert_relative_eq!(b.d_a, 0.577053761087355, max_relative = 1e-12);
        assert_relative_eq!(b.d_t, 35.5265049089292, max_relative = 1e-12);
        assert_relative_eq!(b.d_c, 0.879838237082203, max_relative = 1e-12);
        assert_relative_eq!(b.lambda_sph, 46.7808479201669, max_relative = 1e-12);
    }

    #[test]
    fn gas_diffusion_zero_without_damping() {
        let mut cfg = baseline();
        cfg.gas_pressure = 0.0;
        let dq = derive(&cfg, 1e4).unwrap();
        assert_eq!(gas_diffusion(&cfg, &dq, Mode::One).unwrap(), 0.0);
    }

    #[test]
    fn gas_diffusion_halves_at_double_omega() {
        let a = baseline_budget(1e4, Mode::One).d_a;
        let b = baseline_budget(2e4, Mode::One).d_a;
        assert_relative_eq!(b / a, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn trap_diffusion_linear_in_omega() {
        let a = baseline_budget(1e4, Mode::One).d_t;
        let b = baseline_budget(2e4, Mode::One).d_t;
        assert_relative_eq!(b / a, 2.0, max_relative = 1e-12);
        // slope ≈ 1.78e-3 * omega
        assert_relative_eq!(a / 1e4, 1.77632524544646e-3, max_relative = 1e-12);
    }

    #[test]
    fn trap_diffusion_cubic_in_radius() {
        let cfg = baseline();
        let mut big = cfg.clone();
        big.sphere_radius *= 2.0;
        let a = budget(&derive(&cfg, 1e4).unwrap(), &cfg, Mode::One).unwrap().d_t;
        let b = budget(&derive(&big, 1e4).unwrap(), &big, Mode::One).unwrap().d_t;
        assert_relative_eq!(b / a, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn trap_diffusion_reduced_form_agrees() {
        // D_t written via I_j(omega) must equal (2/9) eps_c k_c^6 R^3 c W_t^2 omega/omega_Lt
        let cfg = baseline();
        let dq = derive(&cfg, 1e4).unwrap();
        let full = trap_diffusion(&cfg, &dq, Mode::One).unwrap();
        let reduced = 2.0 / 9.0 * dq.eps_c * dq.k_c.powi(6) * cfg.sphere_radius.powi(3)
            * crate::constants::C
            * dq.waist_trap
            * dq.waist_trap
            * dq.omega1
            / dq.omega_lt;
        assert_relative_eq!(full, reduced, max_relative = 1e-12);
    }

    #[test]
    fn cavity_diffusion_zero_without_drive() {
        let mut cfg = baseline();
        cfg.g2_over_kappa_eff = 0.0;
        let dq = derive(&cfg, 1e4).unwrap();
        assert_eq!(dq.n_ph, 0.0);
        assert_eq!(cavity_diffusion(&cfg, &dq, Mode::One).unwrap(), 0.0);
    }

    #[test]
    fn cavity_diffusion_invariant_under_radius_at_fixed_g() {
        let cfg = baseline();
        let mut big = cfg.clone();
        big.sphere_radius *= 2.0;
        let a = budget(&derive(&cfg, 1e4).unwrap(), &cfg, Mode::One).unwrap().d_c;
        let b = budget(&derive(&big, 1e4).unwrap(), &big, Mode::One).unwrap().d_c;
        assert_relative_eq!(b, a, max_relative = 1e-12);
    }

    #[test]
    fn cavity_diffusion_invariant_under_omega_at_fixed_g() {
        let a = baseline_budget(1e4, Mode::One).d_c;
        let b = baseline_budget(3.7e4, Mode::One).d_c;
        assert_relative_eq!(b, a, max_relative = 1e-12);
    }

    #[test]
    fn csl_rate_zero_cases() {
        let mut cfg = baseline();
        cfg.csl_rate = 0.0;
        assert_eq!(csl_diffusion(&cfg, 1e4).unwrap(), 0.0);
        let mut cfg = baseline();
        cfg.csl_enabled = false;
        assert_eq!(csl_diffusion(&cfg, 1e4).unwrap(), 0.0);
    }

    #[test]
    fn csl_halves_at_double_omega() {
        let cfg = baseline();
        let a = csl_diffusion(&cfg, 1e4).unwrap();
        let b = csl_diffusion(&cfg, 2e4).unwrap();
        assert_relative_eq!(b / a, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn bracket_series_agrees_with_closed_form() {
        // the closed form carries ~ 24 eps / x^2 relative accuracy; the
        // series is accurate to machine precision, so their gap must stay
        // inside the closed form's own error band (>= 6 digits throughout)
        let mut x = 2e-3;
        while x < 0.5 {
            let closed = {
                let e = (-x as f64).exp();
                e - 1.0 + 0.5 * x * (e + 1.0)
            };
            let series = csl_bracket(x);
            let rel = ((closed - series) / series).abs();
            let allowed = 10.0 * (24.0 * f64::EPSILON / (x * x)).max(1e-14);
            assert!(rel < allowed.min(1e-6), "x = {x}: rel = {rel:e}");
            x *= 1.6;
        }
    }

    #[test]
    fn bracket_is_continuous_at_the_switch() {
        let below = csl_bracket(0.5 * (1.0 - 1e-9));
        let above = csl_bracket(0.5 * (1.0 + 1e-9));
        assert_relative_eq!(below, above, max_relative = 1e-8);
    }

    #[test]
    fn bracket_is_finite_and_positive_at_tiny_x() {
        // x = (R/r_c)^2 = 1e-10: pure series territory
        let v = csl_bracket(1e-10);
        assert!(v > 0.0 && v.is_finite());
        assert_relative_eq!(v, 1e-30 / 12.0, max_relative = 1e-10);
    }

    #[test]
    fn headline_csl_rate() {
        // R = 0.15 r_c, lambda = 1e-8, rho = 3500, omega = 1e4
        let cfg = baseline();
        assert_relative_eq!(
            csl_diffusion(&cfg, 1e4).unwrap(),
            93.5616958403337,
            max_relative = 1e-12
        );
    }

    #[test]
    fn budget_all_sources_off_is_zero() {
        let mut cfg = baseline();
        cfg.gas_pressure = 0.0;
        cfg.g2_over_kappa_eff = 0.0;
        cfg.csl_rate = 0.0;
        // the trap channel cannot be switched off physically; shrink it away
        // by taking omega -> 0+ instead is invalid, so check the three
        // switchable channels and the budget arithmetic
        let dq = derive(&cfg, 1e4).unwrap();
        let b = budget(&dq, &cfg, Mode::One).unwrap();
        assert_eq!(b.d_a, 0.0);
        assert_eq!(b.d_c, 0.0);
        assert_eq!(b.lambda_sph, 0.0);
        assert_eq!(b.total_with_csl, b.total_without_csl);
        assert_eq!(b.total_without_csl, b.d_t);
    }

    #[test]
    fn budget_totals_differ_by_exactly_lambda_sph() {
        let b = baseline_budget(1e4, Mode::One);
        assert_eq!(b.total_with_csl - b.total_without_csl, b.lambda_sph);
        assert_eq!(b.total_without_csl, b.d_a + b.d_t + b.d_c);
    }

    proptest! {
        #[test]
        fn bracket_positive_for_positive_x(x in 1e-12f64..50.0) {
            prop_assert!(csl_bracket(x) > 0.0);
        }

        #[test]
        fn budget_rates_nonnegative(omega in 1e2f64..1e6, r_nm in 5.0f64..230.0) {
            let mut cfg = baseline();
            cfg.sphere_radius = r_nm * 1e-9;
            let dq = derive(&cfg, omega).unwrap();
            let b = budget(&dq, &cfg, Mode::One).unwrap();
            prop_assert!(b.d_a >= 0.0 && b.d_t >= 0.0 && b.d_c >= 0.0 && b.lambda_sph >= 0.0);
            prop_assert!(b.total_with_csl >= b.total_without_csl);
        }
    }
}
