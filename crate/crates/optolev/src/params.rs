//! Physical input parameters, unit-aware config ingestion, and the derived
//! single-point quantities of the trapped-pair model.
//!
//! Everything is stored in SI with angular rates in s⁻¹. Inputs labelled
//! Hz/kHz are interpreted as s⁻¹ (the quoted finesse reproduces the quoted
//! "20 kHz" decay only under that convention, and ħω energies need angular
//! frequencies). Config files are TOML with nested sections (`sphere`,
//! `cavity`, `trap`, `feedback`, `drive`, `gas`, `csl`); every field is
//! optional and defaults to the headline parameter set. Values may be plain
//! numbers (SI) or strings with a unit suffix (`"20 kHz"`, `"15 nm"`,
//! `"10 mK"`, `"1e-12 Torr"`).

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{AMU, C, HBAR, KB, TORR};
use crate::{Error, Result};

/// Complete set of physical inputs. All SI, rates angular (s⁻¹).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Sphere radius R, m.
    pub sphere_radius: f64,
    /// Mass density ρ₀, kg/m³.
    pub sphere_density: f64,
    /// Relative electric permittivity ε (dimensionless, > 1).
    pub permittivity: f64,
    /// Cavity length L, m.
    pub cavity_length: f64,
    /// Cavity amplitude decay rate κ, s⁻¹ (resolved from finesse when given).
    pub cavity_decay: f64,
    /// Finesse the decay rate was derived from, if it was.
    pub finesse: Option<f64>,
    /// Mirror radius of curvature R_c, m.
    pub mirror_curvature: f64,
    /// Cavity wavelength λ_c, m.
    pub cavity_wavelength: f64,
    /// Effective detuning Δ, s⁻¹ (0 is the entanglement optimum).
    pub detuning: f64,
    /// Trap laser wavelength λ_t, m. Defaults to λ_c.
    pub trap_wavelength: f64,
    /// Numerical aperture of the trap optics, (0, 1].
    pub numerical_aperture: f64,
    /// Trap frequency ratio ω₂/ω₁.
    pub omega2_over_omega1: f64,
    /// Feedback beamsplitter reflectivity r_B ∈ [0, 1].
    pub feedback_reflectivity: f64,
    /// Feedback loop phase θ, rad.
    pub feedback_phase: f64,
    /// Drive strength as G₂/κ_eff.
    pub g2_over_kappa_eff: f64,
    /// Coupling ratio G₁/G₂ (|·| < 1 for stability).
    pub g1_over_g2: f64,
    /// Gas temperature T, K.
    pub gas_temperature: f64,
    /// Gas pressure P_a, Pa.
    pub gas_pressure: f64,
    /// Gas molecule mass m_a, kg.
    pub gas_molecule_mass: f64,
    /// CSL collapse rate λ, s⁻¹.
    pub csl_rate: f64,
    /// CSL correlation length r_c, m.
    pub csl_length: f64,
    /// Whether the collapse channel contributes to the "with CSL" totals.
    pub csl_enabled: bool,
}

impl Default for SystemConfig {
    /// The headline parameter set: diamond spheres with R = 0.15 r_c in a
    /// 4 cm cavity, κ = 2e4 s⁻¹ with r_B = 0.99 feedback, G₂ = 1.2 κ_eff,
    /// G₁ = 0.72 G₂, ω₂ = 2ω₁, T = 10 mK, P_a = 1e-12 Torr, λ = 1e-8 s⁻¹.
    fn default() -> Self {
        SystemConfig {
            sphere_radius: 15e-9,
            sphere_density: 3500.0,
            permittivity: 5.76,
            cavity_length: 0.04,
            cavity_decay: 2.0e4,
            finesse: None,
            mirror_curvature: 0.04 / 1.5,
            cavity_wavelength: 1064e-9,
            detuning: 0.0,
            trap_wavelength: 1064e-9,
            numerical_aperture: 0.8,
            omega2_over_omega1: 2.0,
            feedback_reflectivity: 0.99,
            feedback_phase: 0.0,
            g2_over_kappa_eff: 1.2,
            g1_over_g2: 0.72,
            gas_temperature: 0.01,
            gas_pressure: 1e-12 * TORR,
            gas_molecule_mass: 28.97 * AMU,
            csl_rate: 1e-8,
            csl_length: 100e-9,
            csl_enabled: true,
        }
    }
}

/// Non-fatal conditions noted during validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Warning(pub String);

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "warning: {}", self.0)
    }
}

impl SystemConfig {
    /// Check every configuration invariant. Hard violations error; soft ones
    /// (the |G₁/G₂| < 1 stability precondition, which dynamics re-checks
    /// formally) come back as warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        fn req(ok: bool, what: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(what.to_string()))
            }
        }
        req(self.sphere_radius > 0.0, "sphere radius must be > 0")?;
        req(self.sphere_density > 0.0, "sphere density must be > 0")?;
        req(self.permittivity > 1.0, "permittivity must be > 1")?;
        req(self.cavity_length > 0.0, "cavity length must be > 0")?;
        req(self.cavity_decay > 0.0, "cavity decay must be > 0")?;
        req(self.cavity_wavelength > 0.0, "cavity wavelength must be > 0")?;
        req(self.trap_wavelength > 0.0, "trap wavelength must be > 0")?;
        req(self.gas_temperature > 0.0, "gas temperature must be > 0")?;
        req(self.gas_pressure >= 0.0, "gas pressure must be >= 0")?;
        req(self.gas_molecule_mass > 0.0, "gas molecule mass must be > 0")?;
        req(
            self.numerical_aperture > 0.0 && self.numerical_aperture <= 1.0,
            "numerical aperture must be in (0, 1]",
        )?;
        req(
            (0.0..=1.0).contains(&self.feedback_reflectivity),
            "feedback reflectivity must be in [0, 1]",
        )?;
        req(self.csl_length > 0.0, "csl correlation length must be > 0")?;
        req(self.csl_rate >= 0.0, "csl rate must be >= 0")?;
        req(self.omega2_over_omega1 > 0.0, "omega2/omega1 must be > 0")?;
        req(
            2.0 * self.mirror_curvature / self.cavity_length - 1.0 > 0.0,
            "2 Rc/L - 1 must be > 0, otherwise the cavity waist is undefined",
        )?;
        req(
            self.kappa_eff() > 0.0,
            "effective cavity decay must be > 0 (r_B cos θ = 1 closes the cavity)",
        )?;

        let mut warnings = Vec::new();
        let ratio = self.g1_over_g2.abs();
        if !(0.0 < ratio && ratio < 1.0) {
            warnings.push(Warning(format!(
                "|G1/G2| = {ratio} is outside (0, 1); the drift matrix will not be stable"
            )));
        }
        if (self.omega2_over_omega1 - 1.0).abs() < 1e-6 {
            warnings.push(Warning(
                "omega2/omega1 = 1 makes |omega1 - omega2| vanish, violating the scheme's \
                 frequency-separation condition"
                    .to_string(),
            ));
        }
        Ok(warnings)
    }

    /// κ_eff = κ (1 − |r_B| cos θ).
    pub fn kappa_eff(&self) -> f64 {
        self.cavity_decay * (1.0 - self.feedback_reflectivity.abs() * self.feedback_phase.cos())
    }
}

/// Quantities computed once per (config, ω₁) point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedQuantities {
    pub kappa_eff: f64,
    /// Sphere mass, kg.
    pub mass: f64,
    /// Cavity mode waist W₀, m.
    pub waist_cavity: f64,
    /// Trap beam waist W_t ≈ λ_t/(π NA), m.
    pub waist_trap: f64,
    /// Cavity mode volume V_c = π L W₀²/4, m³.
    pub mode_volume: f64,
    /// Sphere volume, m³.
    pub sphere_volume: f64,
    /// ε_c = 3(ε−1)/(ε+2).
    pub eps_c: f64,
    /// Cavity wavenumber k_c = 2π/λ_c, m⁻¹.
    pub k_c: f64,
    /// Cavity resonance ω_c = 2πc/λ_c, s⁻¹.
    pub omega_c: f64,
    /// Trap laser frequency ω_Lt = 2πc/λ_t, s⁻¹.
    pub omega_lt: f64,
    /// Gas damping rate γ, s⁻¹.
    pub gamma: f64,
    /// Mean gas molecule speed, m/s.
    pub mean_gas_speed: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Trap intensities ℐ_j recovered from ω_j, W/m².
    pub trap_intensity: [f64; 2],
    /// Bare optomechanical couplings g_j, s⁻¹.
    pub g1: f64,
    pub g2: f64,
    /// Drive-enhanced couplings G_j = g_j α_j, s⁻¹.
    pub g_eff1: f64,
    pub g_eff2: f64,
    /// Intracavity field amplitudes α_j = G_j/g_j.
    pub alpha1: f64,
    pub alpha2: f64,
    /// Mean cavity photon number α₁² + α₂².
    pub n_ph: f64,
    /// Detuning carried through to the drift matrix, s⁻¹.
    pub delta: f64,
}

/// Mechanical damping rate γ = (16/π) P_a / (v̄ R ρ₀) from collisions with
/// residual gas, with v̄ = sqrt(3 k_B T / m_a). Zero exactly when P_a = 0.
pub fn damping_rate(config: &SystemConfig) -> f64 {
    let vbar = mean_gas_speed(config);
    (16.0 / PI) * config.gas_pressure / (vbar * config.sphere_radius * config.sphere_density)
}

fn mean_gas_speed(config: &SystemConfig) -> f64 {
    (3.0 * KB * config.gas_temperature / config.gas_molecule_mass).sqrt()
}

/// Compute every derived quantity at trapping frequency `omega1`.
///
/// The trap intensity is inverted from the frequency,
/// ℐ_j = ω_j² ρ₀ c W_t² / (4 ε_c), and the field amplitudes come from the
/// coupling ratios as α_j = G_j/g_j; drive powers never appear explicitly.
pub fn derive(config: &SystemConfig, omega1: f64) -> Result<DerivedQuantities> {
    config.validate()?;
    if !(omega1 > 0.0) {
        return Err(Error::Config(format!(
            "trapping frequency omega1 must be > 0, got {omega1}"
        )));
    }

    let kappa_eff = config.kappa_eff();
    let eps = config.permittivity;
    let eps_c = 3.0 * (eps - 1.0) / (eps + 2.0);
    let k_c = 2.0 * PI / config.cavity_wavelength;
    let omega_c = k_c * C;
    let omega_lt = 2.0 * PI * C / config.trap_wavelength;

    let r = config.sphere_radius;
    let sphere_volume = 4.0 / 3.0 * PI * r.powi(3);
    let mass = sphere_volume * config.sphere_density;

    let waist_trap = config.trap_wavelength / (PI * config.numerical_aperture);
    let waist_cavity = (config.cavity_wavelength
        * config.cavity_length
        * (2.0 * config.mirror_curvature / config.cavity_length - 1.0).sqrt()
        / (2.0 * PI))
        .sqrt();
    let mode_volume = PI * config.cavity_length * waist_cavity * waist_cavity / 4.0;

    let gamma = damping_rate(config);
    let mean_speed = mean_gas_speed(config);

    let omega2 = config.omega2_over_omega1 * omega1;
    let omegas = [omega1, omega2];
    let mut g = [0.0f64; 2];
    let mut intensity = [0.0f64; 2];
    for (j, &om) in omegas.iter().enumerate() {
        g[j] = omega_c * (HBAR / (mass * om)).sqrt() * k_c * (eps - 1.0) / (eps + 2.0) * 3.0
            * sphere_volume
            / (4.0 * mode_volume);
        intensity[j] = om * om * config.sphere_density * C * waist_trap * waist_trap / (4.0 * eps_c);
    }

    let g_eff2 = config.g2_over_kappa_eff * kappa_eff;
    let g_eff1 = config.g1_over_g2 * g_eff2;
    let alpha1 = g_eff1 / g[0];
    let alpha2 = g_eff2 / g[1];

    Ok(DerivedQuantities {
        kappa_eff,
        mass,
        waist_cavity,
        waist_trap,
        mode_volume,
        sphere_volume,
        eps_c,
        k_c,
        omega_c,
        omega_lt,
        gamma,
        mean_gas_speed: mean_speed,
        omega1,
        omega2,
        trap_intensity: intensity,
        g1: g[0],
        g2: g[1],
        g_eff1,
        g_eff2,
        alpha1,
        alpha2,
        n_ph: alpha1 * alpha1 + alpha2 * alpha2,
        delta: config.detuning,
    })
}

// ---------------------------------------------------------------------------
// Config file ingestion
// ---------------------------------------------------------------------------

/// A config value: plain number (SI) or string with a unit suffix.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Suffixed(String),
}

/// Unit families accepted on input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitKind {
    /// Hz/kHz, read as angular s⁻¹.
    Rate,
    /// nm/um/cm/m.
    Length,
    /// mK/K.
    Temperature,
    /// Torr/Pa.
    Pressure,
    /// Bare numbers only.
    Plain,
}

impl UnitKind {
    fn table(self) -> &'static [(&'static str, f64)] {
        match self {
            // longest suffixes first
            UnitKind::Rate => &[("kHz", 1e3), ("Hz", 1.0)],
            UnitKind::Length => &[("nm", 1e-9), ("um", 1e-6), ("cm", 1e-2), ("m", 1.0)],
            UnitKind::Temperature => &[("mK", 1e-3), ("K", 1.0)],
            UnitKind::Pressure => &[("Torr", TORR), ("Pa", 1.0)],
            UnitKind::Plain => &[],
        }
    }
}

impl Quantity {
    /// Resolve to SI. `field` only labels errors.
    pub fn resolve(&self, kind: UnitKind, field: &str) -> Result<f64> {
        match self {
            Quantity::Number(x) => Ok(*x),
            Quantity::Suffixed(s) => {
                let trimmed = s.trim();
                for &(suffix, scale) in kind.table() {
                    if let Some(num) = trimmed.strip_suffix(suffix) {
                        let num = num.trim();
                        return num.parse::<f64>().map(|x| x * scale).map_err(|e| {
                            Error::UnitParse {
                                field: field.to_string(),
                                value: s.clone(),
                                reason: e.to_string(),
                            }
                        });
                    }
                }
                // a bare number in a string is fine too
                trimmed.parse::<f64>().map_err(|_| Error::UnitParse {
                    field: field.to_string(),
                    value: s.clone(),
                    reason: format!(
                        "expected a number or one of the suffixes {:?}",
                        kind.table().iter().map(|t| t.0).collect::<Vec<_>>()
                    ),
                })
            }
        }
    }
}

/// Partial configuration: what a file or a set of flag overrides specifies.
/// Later sources win field-by-field in [`RawConfig::merge`].
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub sphere: SphereSection,
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub trap: TrapSection,
    #[serde(default)]
    pub feedback: FeedbackSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub gas: GasSection,
    #[serde(default)]
    pub csl: CslSection,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSection {
    pub radius: Option<Quantity>,
    pub density: Option<f64>,
    pub permittivity: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub length: Option<Quantity>,
    pub kappa: Option<Quantity>,
    pub finesse: Option<f64>,
    pub mirror_curvature: Option<Quantity>,
    pub wavelength: Option<Quantity>,
    pub detuning: Option<Quantity>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub wavelength: Option<Quantity>,
    pub numerical_aperture: Option<f64>,
    pub omega2_over_omega1: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub reflectivity: Option<f64>,
    pub phase: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub g2_over_kappa_eff: Option<f64>,
    pub g1_over_g2: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub temperature: Option<Quantity>,
    pub pressure: Option<Quantity>,
    pub molecule_mass: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CslSection {
    pub rate: Option<Quantity>,
    pub length: Option<Quantity>,
    pub enabled: Option<bool>,
}

macro_rules! take_if_set {
    ($dst:expr, $src:expr) => {
        if $src.is_some() {
            $dst = $src.clone();
        }
    };
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| Error::ConfigFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Overlay `other` on `self`: fields set in `other` win.
    pub fn merge(&mut self, other: &RawConfig) {
        take_if_set!(self.sphere.radius, other.sphere.radius);
        take_if_set!(self.sphere.density, other.sphere.density);
        take_if_set!(self.sphere.permittivity, other.sphere.permittivity);
        take_if_set!(self.cavity.length, other.cavity.length);
        take_if_set!(self.cavity.kappa, other.cavity.kappa);
        take_if_set!(self.cavity.finesse, other.cavity.finesse);
        take_if_set!(self.cavity.mirror_curvature, other.cavity.mirror_curvature);
        take_if_set!(self.cavity.wavelength, other.cavity.wavelength);
        take_if_set!(self.cavity.detuning, other.cavity.detuning);
        take_if_set!(self.trap.wavelength, other.trap.wavelength);
        take_if_set!(self.trap.numerical_aperture, other.trap.numerical_aperture);
        take_if_set!(self.trap.omega2_over_omega1, other.trap.omega2_over_omega1);
        take_if_set!(self.feedback.reflectivity, other.feedback.reflectivity);
        take_if_set!(self.feedback.phase, other.feedback.phase);
        take_if_set!(self.drive.g2_over_kappa_eff, other.drive.g2_over_kappa_eff);
        take_if_set!(self.drive.g1_over_g2, other.drive.g1_over_g2);
        take_if_set!(self.gas.temperature, other.gas.temperature);
        take_if_set!(self.gas.pressure, other.gas.pressure);
        take_if_set!(self.gas.molecule_mass, other.gas.molecule_mass);
        take_if_set!(self.csl.rate, other.csl.rate);
        take_if_set!(self.csl.length, other.csl.length);
        take_if_set!(self.csl.enabled, other.csl.enabled);
    }

    /// Fill unset fields with the defaults and produce a validated config.
    ///
    /// κ may be given directly or via finesse (κ = πc/(2 ℱ L)); giving both
    /// is a conflict.
    pub fn resolve(&self) -> Result<SystemConfig> {
        let d = SystemConfig::default();
        let cavity_length = match &self.cavity.length {
            Some(q) => q.resolve(UnitKind::Length, "cavity.length")?,
            None => d.cavity_length,
        };
        let (cavity_decay, finesse) = match (&self.cavity.kappa, self.cavity.finesse) {
            (Some(_), Some(_)) => {
                return Err(Error::Conflict(
                    "cavity.kappa and cavity.finesse both given; they fix the same quantity"
                        .into(),
                ))
            }
            (Some(q), None) => (q.resolve(UnitKind::Rate, "cavity.kappa")?, None),
            (None, Some(f)) => {
                if f <= 0.0 {
                    return Err(Error::Config("finesse must be > 0".into()));
                }
                (PI * C / (2.0 * f * cavity_length), Some(f))
            }
            (None, None) => (d.cavity_decay, None),
        };

        let cavity_wavelength = match &self.cavity.wavelength {
            Some(q) => q.resolve(UnitKind::Length, "cavity.wavelength")?,
            None => d.cavity_wavelength,
        };
        // the trap wavelength defaults to the cavity wavelength
        let trap_wavelength = match &self.trap.wavelength {
            Some(q) => q.resolve(UnitKind::Length, "trap.wavelength")?,
            None => cavity_wavelength,
        };

        let config = SystemConfig {
            sphere_radius: match &self.sphere.radius {
                Some(q) => q.resolve(UnitKind::Length, "sphere.radius")?,
                None => d.sphere_radius,
            },
            sphere_density: self.sphere.density.unwrap_or(d.sphere_density),
            permittivity: self.sphere.permittivity.unwrap_or(d.permittivity),
            cavity_length,
            cavity_decay,
            finesse,
            mirror_curvature: match &self.cavity.mirror_curvature {
                Some(q) => q.resolve(UnitKind::Length, "cavity.mirror_curvature")?,
                None => cavity_length / 1.5,
            },
            cavity_wavelength,
            detuning: match &self.cavity.detuning {
                Some(q) => q.resolve(UnitKind::Rate, "cavity.detuning")?,
                None => d.detuning,
            },
            trap_wavelength,
            numerical_aperture: self
                .trap
                .numerical_aperture
                .unwrap_or(d.numerical_aperture),
            omega2_over_omega1: self
                .trap
                .omega2_over_omega1
                .unwrap_or(d.omega2_over_omega1),
            feedback_reflectivity: self
                .feedback
                .reflectivity
                .unwrap_or(d.feedback_reflectivity),
            feedback_phase: self.feedback.phase.unwrap_or(d.feedback_phase),
            g2_over_kappa_eff: self
                .drive
                .g2_over_kappa_eff
                .unwrap_or(d.g2_over_kappa_eff),
            g1_over_g2: self.drive.g1_over_g2.unwrap_or(d.g1_over_g2),
            gas_temperature: match &self.gas.temperature {
                Some(q) => q.resolve(UnitKind::Temperature, "gas.temperature")?,
                None => d.gas_temperature,
            },
            gas_pressure: match &self.gas.pressure {
                Some(q) => q.resolve(UnitKind::Pressure, "gas.pressure")?,
                None => d.gas_pressure,
            },
            gas_molecule_mass: self.gas.molecule_mass.unwrap_or(d.gas_molecule_mass),
            csl_rate: match &self.csl.rate {
                Some(q) => q.resolve(UnitKind::Rate, "csl.rate")?,
                None => d.csl_rate,
            },
            csl_length: match &self.csl.length {
                Some(q) => q.resolve(UnitKind::Length, "csl.length")?,
                None => d.csl_length,
            },
            csl_enabled: self.csl.enabled.unwrap_or(d.csl_enabled),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn baseline() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn kappa_eff_headline_point() {
        let cfg = baseline();
        assert_relative_eq!(cfg.kappa_eff(), 200.0, max_relative = 1e-12);
    }

    #[test]
    fn kappa_eff_without_feedback_is_kappa() {
        let mut cfg = baseline();
        cfg.feedback_reflectivity = 0.0;
        cfg.feedback_phase = 1.234;
        assert_eq!(cfg.kappa_eff(), cfg.cavity_decay);
    }

    #[test]
    fn kappa_eff_at_theta_pi() {
        let mut cfg = baseline();
        cfg.feedback_phase = PI;
        assert_relative_eq!(
            cfg.kappa_eff(),
            cfg.cavity_decay * (1.0 + cfg.feedback_reflectivity),
            max_relative = 1e-12
        );
    }

    #[test]
    fn kappa_from_finesse_matches_quoted_20_khz() {
        let raw: RawConfig = toml::from_str("[cavity]\nfinesse = 5.9e5\n").unwrap();
        let cfg = raw.resolve().unwrap();
        assert_relative_eq!(cfg.cavity_decay, 1.995393609437e4, max_relative = 1e-10);
        assert!((cfg.cavity_decay - 2.0e4).abs() / 2.0e4 < 5e-3);
    }

    #[test]
    fn derived_geometry_headline_point() {
        // frozen from a high-precision evaluation of the waist/volume formulas
        let dq = derive(&baseline(), 1e4).unwrap();
        assert_relative_eq!(dq.waist_trap, 4.23352148624442e-7, max_relative = 1e-12);
        assert_relative_eq!(dq.waist_cavity, 6.25360666457785e-5, max_relative = 1e-12);
        assert_relative_eq!(dq.mode_volume, 1.22860137283552e-10, max_relative = 1e-12);
        assert_relative_eq!(dq.mass, 4.94800842940392e-20, max_relative = 1e-12);
        assert_relative_eq!(dq.eps_c, 1.84020618556701, max_relative = 1e-12);
    }

    #[test]
    fn derived_couplings_headline_point() {
        let dq = derive(&baseline(), 1e4).unwrap();
        assert_relative_eq!(dq.g1, 0.25549236932092, max_relative = 1e-12);
        assert_relative_eq!(dq.g2, 0.18066038688824, max_relative = 1e-12);
        assert_relative_eq!(dq.g_eff2, 240.0, max_relative = 1e-12);
        assert_relative_eq!(dq.g_eff1, 172.8, max_relative = 1e-12);
        assert_relative_eq!(dq.n_ph, 2.22224187265291e6, max_relative = 1e-12);
        assert_relative_eq!(dq.omega2, 2e4, max_relative = 1e-15);
    }

    #[test]
    fn damping_rate_headline_point() {
        let cfg = baseline();
        assert_relative_eq!(damping_rate(&cfg), 4.40767083695114e-6, max_relative = 1e-12);
    }

    #[test]
    fn damping_vanishes_in_perfect_vacuum() {
        let mut cfg = baseline();
        cfg.gas_pressure = 0.0;
        assert_eq!(damping_rate(&cfg), 0.0);
    }

    #[test]
    fn damping_halves_when_radius_doubles() {
        let cfg = baseline();
        let mut big = cfg.clone();
        big.sphere_radius *= 2.0;
        assert_relative_eq!(
            damping_rate(&big),
            damping_rate(&cfg) / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bare_coupling_scales_as_r_to_three_halves() {
        let cfg = baseline();
        let g_r = derive(&cfg, 1e4).unwrap().g1;
        let mut big = cfg.clone();
        big.sphere_radius *= 2.0;
        let g_2r = derive(&big, 1e4).unwrap().g1;
        assert_relative_eq!(g_2r / g_r, 2f64.powf(1.5), max_relative = 1e-12);
    }

    #[test]
    fn bare_coupling_scales_as_inverse_sqrt_omega() {
        let cfg = baseline();
        let g_w = derive(&cfg, 1e4).unwrap().g1;
        let g_4w = derive(&cfg, 4e4).unwrap().g1;
        assert_relative_eq!(g_4w / g_w, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn derive_is_deterministic_bitwise() {
        let cfg = baseline();
        let a = derive(&cfg, 1.234e4).unwrap();
        let b = derive(&cfg, 1.234e4).unwrap();
        assert_eq!(a.g1.to_bits(), b.g1.to_bits());
        assert_eq!(a.n_ph.to_bits(), b.n_ph.to_bits());
        assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
        assert_eq!(a.mode_volume.to_bits(), b.mode_volume.to_bits());
    }

    #[test]
    fn derive_rejects_nonpositive_omega() {
        assert!(derive(&baseline(), 0.0).is_err());
        assert!(derive(&baseline(), -5.0).is_err());
    }

    #[test]
    fn validate_rejects_undefined_waist() {
        let mut cfg = baseline();
        cfg.mirror_curvature = cfg.cavity_length / 2.0; // 2Rc/L - 1 = 0
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validate_warns_on_unstable_coupling_ratio() {
        let mut cfg = baseline();
        cfg.g1_over_g2 = 1.5;
        let warnings = cfg.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].0.contains("G1/G2"));
    }

    #[test]
    fn unit_suffixes_resolve() {
        let q = |s: &str| Quantity::Suffixed(s.to_string());
        assert_eq!(q("20 kHz").resolve(UnitKind::Rate, "x").unwrap(), 2e4);
        assert_eq!(q("15 nm").resolve(UnitKind::Length, "x").unwrap(), 15e-9);
        assert_eq!(q("4 cm").resolve(UnitKind::Length, "x").unwrap(), 0.04);
        assert_eq!(q("10 mK").resolve(UnitKind::Temperature, "x").unwrap(), 0.01);
        assert_relative_eq!(
            q("1e-12 Torr").resolve(UnitKind::Pressure, "x").unwrap(),
            1.33322e-10,
            max_relative = 1e-12
        );
        assert_eq!(q("1064nm").resolve(UnitKind::Length, "x").unwrap(), 1064e-9);
        assert!(q("15 parsec").resolve(UnitKind::Length, "x").is_err());
    }

    #[test]
    fn config_file_round_trip_fig3c_style() {
        let raw: RawConfig = toml::from_str(
            r#"
            [sphere]
            radius = "22 nm"
            [feedback]
            reflectivity = 0.999
            [drive]
            g2_over_kappa_eff = 2.0
            g1_over_g2 = 0.79
            [csl]
            rate = "1e-11 Hz"
            "#,
        )
        .unwrap();
        let cfg = raw.resolve().unwrap();
        assert_eq!(cfg.sphere_radius, 22e-9);
        assert_eq!(cfg.feedback_reflectivity, 0.999);
        assert_eq!(cfg.g2_over_kappa_eff, 2.0);
        assert_eq!(cfg.csl_rate, 1e-11);
        // untouched fields keep the headline defaults
        assert_eq!(cfg.cavity_decay, 2e4);
        assert_eq!(cfg.gas_temperature, 0.01);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = toml::from_str::<RawConfig>("[sphere]\nradius_nm = 15\n").unwrap_err();
        assert!(err.to_string().contains("radius_nm"));
    }

    #[test]
    fn kappa_and_finesse_conflict() {
        let raw: RawConfig =
            toml::from_str("[cavity]\nkappa = \"20 kHz\"\nfinesse = 5.9e5\n").unwrap();
        assert!(matches!(raw.resolve(), Err(Error::Conflict(_))));
    }

    #[test]
    fn merge_later_source_wins_fieldwise() {
        let mut base: RawConfig = toml::from_str("[sphere]\nradius = \"15 nm\"\n").unwrap();
        let over: RawConfig =
            toml::from_str("[sphere]\ndensity = 2000.0\n[csl]\nenabled = false\n").unwrap();
        base.merge(&over);
        let cfg = base.resolve().unwrap();
        assert_eq!(cfg.sphere_radius, 15e-9);
        assert_eq!(cfg.sphere_density, 2000.0);
        assert!(!cfg.csl_enabled);
    }

    proptest! {
        #[test]
        fn kappa_eff_decreases_monotonically_in_rb(rb1 in 0.0f64..0.999, drb in 1e-6f64..0.5) {
            let rb2 = (rb1 + drb).min(0.9999);
            let mut a = baseline();
            a.feedback_phase = 0.0;
            let mut b = a.clone();
            a.feedback_reflectivity = rb1;
            b.feedback_reflectivity = rb2;
            prop_assert!(b.kappa_eff() < a.kappa_eff());
        }

        #[test]
        fn derive_never_panics_on_valid_inputs(
            r in 5e-9f64..200e-9,
            omega in 1e2f64..1e6,
            ratio in 1.1f64..4.0,
        ) {
            let mut cfg = baseline();
            cfg.sphere_radius = r;
            cfg.omega2_over_omega1 = ratio;
            let dq = derive(&cfg, omega).unwrap();
            prop_assert!(dq.g1 > 0.0 && dq.n_ph >= 0.0 && dq.gamma >= 0.0);
        }
    }
}
