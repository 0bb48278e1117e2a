//! Parameter sweeps, figure presets, scaling-law fits, and the
//! collapse-noise discriminator.
//!
//! A sweep evaluates the full pipeline (derive → budgets → model → Lyapunov
//! → log-negativity) over an ordered grid of one parameter, producing paired
//! with/without-collapse entanglement values per point. Grid points are
//! independent and run in parallel; aggregation is in grid order, so results
//! are bit-identical regardless of scheduling.
//!
//! The published plots never state their ω₁ axis ranges. Each figure preset
//! therefore carries a grid chosen inside the window where the model
//! actually produces entanglement (outside it both curves are identically
//! zero and no shape claim survives); non-preset sweeps default to
//! 40 log-spaced points on [10 κ_eff, 500 κ_eff].

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dynamics::{build_model, is_stable, solve_lyapunov};
use crate::entanglement::{log_negativity, mechanical_block};
use crate::noise::{budgets, csl_diffusion, NoiseBudget};
use crate::params::{derive, DerivedQuantities, SystemConfig, Warning};
use crate::{constants, Error, Result};

/// Which parameter the grid runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    /// Trapping frequency ω₁, s⁻¹ (ω₂ follows via the configured ratio).
    Omega1,
    /// Sphere radius R, m.
    Radius,
    /// CSL collapse rate λ, s⁻¹.
    CslRate,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Omega1 => "omega1",
            SweepParameter::Radius => "R",
            SweepParameter::CslRate => "lambda",
        }
    }
}

/// Which collapse variants to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CslVariant {
    On,
    Off,
    Both,
}

impl CslVariant {
    fn wants_on(self) -> bool {
        matches!(self, CslVariant::On | CslVariant::Both)
    }
    fn wants_off(self) -> bool {
        matches!(self, CslVariant::Off | CslVariant::Both)
    }
}

/// A sweep request: base config, swept parameter, ordered grid, variants.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub config: SystemConfig,
    pub parameter: SweepParameter,
    /// Strictly increasing, nonempty.
    pub grid: Vec<f64>,
    pub variants: CslVariant,
    /// ω₁ used when the swept parameter is not ω₁ itself.
    pub base_omega1: f64,
    /// Figure preset this spec came from, if any.
    pub preset: Option<PresetId>,
}

/// Log-spaced grid, inclusive endpoints.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 1 && min > 0.0 && max > min);
    if points == 1 {
        return vec![min];
    }
    let ratio = max / min;
    (0..points)
        .map(|i| min * ratio.powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// Linearly spaced grid, inclusive endpoints.
pub fn linear_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 1 && max > min);
    if points == 1 {
        return vec![min];
    }
    let step = (max - min) / (points - 1) as f64;
    (0..points).map(|i| min + step * i as f64).collect()
}

/// The non-preset default: 40 log points over [10 κ_eff, 500 κ_eff].
pub fn default_omega_grid(config: &SystemConfig) -> Vec<f64> {
    let ke = config.kappa_eff();
    log_grid(10.0 * ke, 500.0 * ke, 40)
}

impl SweepSpec {
    /// Structural checks plus the scheme-validity gates, which warn rather
    /// than fail: the conditions κ_eff ≪ ω and G ≪ ω are inequalities of
    /// scale, not hard bounds.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let mut warnings = self.config.validate()?;
        if self.grid.is_empty() {
            return Err(Error::Sweep("empty grid".into()));
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Sweep("grid must be strictly increasing".into()));
        }
        if self.grid[0] <= 0.0 {
            return Err(Error::Sweep("grid values must be positive".into()));
        }
        let ke = self.config.kappa_eff();
        let g2 = self.config.g2_over_kappa_eff * ke;
        let omegas: Vec<f64> = match self.parameter {
            SweepParameter::Omega1 => self.grid.clone(),
            _ => vec![self.base_omega1],
        };
        let soft = omegas
            .iter()
            .filter(|&&w| w < 10.0 * ke || g2 > w / 5.0)
            .count();
        if soft > 0 {
            warnings.push(Warning(format!(
                "{soft} grid point(s) sit outside the adiabatic gates (omega1 >= 10 kappa_eff \
                 and G2 <= omega1/5); results there are outside the scheme's validity"
            )));
        }
        Ok(warnings)
    }
}

/// One evaluated grid point.
#[derive(Clone, Debug)]
pub struct SweepRow {
    /// Value of the swept parameter.
    pub param_value: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub derived: DerivedQuantities,
    pub budgets: [NoiseBudget; 2],
    pub stable: bool,
    /// E_N with the collapse term; `None` when not requested or not solvable.
    pub en_with_csl: Option<f64>,
    /// E_N without the collapse term.
    pub en_without_csl: Option<f64>,
    /// Worst Lyapunov residual over the solved variants.
    pub max_residual: Option<f64>,
    /// Worst bona-fide margin min eig(V + iΩ/2) over the solved variants.
    pub min_bona_fide_margin: Option<f64>,
}

/// Sweep output: rows in grid order plus reproducibility metadata.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub variants: CslVariant,
    pub preset: Option<PresetId>,
    pub rows: Vec<SweepRow>,
    pub config_hash: String,
    pub constants_version: &'static str,
}

/// SHA-256 of the resolved configuration (canonical field order, full-
/// precision hex floats), used to stamp every output file.
pub fn config_hash(config: &SystemConfig) -> String {
    let mut hasher = Sha256::new();
    let mut feed = |name: &str, x: f64| {
        hasher.update(name.as_bytes());
        hasher.update(b"=");
        hasher.update(format!("{:?}", x.to_bits()).as_bytes());
        hasher.update(b"\n");
    };
    feed("sphere_radius", config.sphere_radius);
    feed("sphere_density", config.sphere_density);
    feed("permittivity", config.permittivity);
    feed("cavity_length", config.cavity_length);
    feed("cavity_decay", config.cavity_decay);
    feed("mirror_curvature", config.mirror_curvature);
    feed("cavity_wavelength", config.cavity_wavelength);
    feed("detuning", config.detuning);
    feed("trap_wavelength", config.trap_wavelength);
    feed("numerical_aperture", config.numerical_aperture);
    feed("omega2_over_omega1", config.omega2_over_omega1);
    feed("feedback_reflectivity", config.feedback_reflectivity);
    feed("feedback_phase", config.feedback_phase);
    feed("g2_over_kappa_eff", config.g2_over_kappa_eff);
    feed("g1_over_g2", config.g1_over_g2);
    feed("gas_temperature", config.gas_temperature);
    feed("gas_pressure", config.gas_pressure);
    feed("gas_molecule_mass", config.gas_molecule_mass);
    feed("csl_rate", config.csl_rate);
    feed("csl_length", config.csl_length);
    let mut hasher = hasher; // feed closure borrowed it
    hasher.update(format!("csl_enabled={}\n", config.csl_enabled).as_bytes());
    hasher.update(constants::CONSTANTS_VERSION.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn eval_point(spec: &SweepSpec, x: f64) -> Result<SweepRow> {
    let mut config = spec.config.clone();
    let omega1 = match spec.parameter {
        SweepParameter::Omega1 => x,
        SweepParameter::Radius => {
            config.sphere_radius = x;
            spec.base_omega1
        }
        SweepParameter::CslRate => {
            config.csl_rate = x;
            spec.base_omega1
        }
    };
    let dq = derive(&config, omega1)?;
    let b = budgets(&dq, &config)?;
    let model_on = build_model(&dq, &b, true);
    let report = is_stable(&model_on)?; // drift is variant-independent
    let mut row = SweepRow {
        param_value: x,
        omega1: dq.omega1,
        omega2: dq.omega2,
        derived: dq,
        budgets: b,
        stable: report.is_stable,
        en_with_csl: None,
        en_without_csl: None,
        max_residual: None,
        min_bona_fide_margin: None,
    };
    if !report.is_stable {
        return Ok(row);
    }
    let track = |row: &mut SweepRow, v: &crate::dynamics::CovarianceMatrix| {
        row.max_residual = Some(row.max_residual.map_or(v.residual, |r| r.max(v.residual)));
        row.min_bona_fide_margin = Some(
            row.min_bona_fide_margin
                .map_or(v.bona_fide_margin, |m| m.min(v.bona_fide_margin)),
        );
    };
    if spec.variants.wants_on() {
        match solve_lyapunov(&model_on) {
            Ok(v) => {
                row.en_with_csl = Some(log_negativity(&mechanical_block(&v))?);
                track(&mut row, &v);
            }
            Err(Error::Unstable { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if spec.variants.wants_off() {
        let model_off = build_model(&dq, &b, false);
        match solve_lyapunov(&model_off) {
            Ok(v) => {
                row.en_without_csl = Some(log_negativity(&mechanical_block(&v))?);
                track(&mut row, &v);
            }
            Err(Error::Unstable { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(row)
}

/// Run the sweep. Grid points evaluate in parallel with no shared state;
/// rows come back in grid order. Unstable points are recorded, not fatal;
/// a sweep where *every* point is unstable is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows: Vec<SweepRow> = spec
        .grid
        .par_iter()
        .map(|&x| eval_point(spec, x))
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().all(|r| !r.stable) {
        return Err(Error::AllUnstable(rows.len()));
    }
    Ok(SweepResult {
        parameter: spec.parameter,
        variants: spec.variants,
        preset: spec.preset,
        rows,
        config_hash: config_hash(&spec.config),
        constants_version: constants::CONSTANTS_VERSION,
    })
}

/// Per-point relative entanglement difference (E_N^off − E_N^on)/E_N^off.
/// `None` flags undefined points (E_N^off = 0 or unsolved).
pub fn relative_difference(result: &SweepResult) -> Result<Vec<Option<f64>>> {
    if !result.variants.wants_on() {
        return Err(Error::MissingVariant("with-CSL"));
    }
    if !result.variants.wants_off() {
        return Err(Error::MissingVariant("without-CSL"));
    }
    Ok(result
        .rows
        .iter()
        .map(|r| match (r.en_without_csl, r.en_with_csl) {
            (Some(off), Some(on)) if off > 0.0 => Some((off - on) / off),
            _ => None,
        })
        .collect())
}

/// Per-point relative difference of the *total diffusion rates* of mode 1,
/// λ_sph / (D_t + D_c + D_a) — the quantity whose low-frequency value the
/// source analysis quotes as "about 19%" for the weakest collapse rate.
pub fn diffusion_relative_difference(result: &SweepResult) -> Vec<f64> {
    result
        .rows
        .iter()
        .map(|r| r.budgets[0].lambda_sph / r.budgets[0].total_without_csl)
        .collect()
}

// ---------------------------------------------------------------------------
// Scaling-law checks
// ---------------------------------------------------------------------------

/// Diffusion channel selector for scaling fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingQuantity {
    TrapLight,
    CavityPhoton,
    Gas,
    Csl,
}

impl ScalingQuantity {
    pub fn name(self) -> &'static str {
        match self {
            ScalingQuantity::TrapLight => "D_t",
            ScalingQuantity::CavityPhoton => "D_c",
            ScalingQuantity::Gas => "D_a",
            ScalingQuantity::Csl => "lambda_sph",
        }
    }
}

/// Independent variable of a scaling fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingParameter {
    Radius,
    Omega,
}

impl ScalingParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScalingParameter::Radius => "R",
            ScalingParameter::Omega => "omega",
        }
    }
}

fn eval_quantity(q: ScalingQuantity, config: &SystemConfig, omega1: f64) -> Result<f64> {
    let dq = derive(config, omega1)?;
    let b = crate::noise::budget(&dq, config, crate::noise::Mode::One)?;
    Ok(match q {
        ScalingQuantity::TrapLight => b.d_t,
        ScalingQuantity::CavityPhoton => b.d_c,
        ScalingQuantity::Gas => b.d_a,
        ScalingQuantity::Csl => b.lambda_sph,
    })
}

/// Least-squares slope of ln(quantity) against ln(parameter) over `grid`
/// (default: one decade around the working point, 17 log points). Couplings
/// are fixed by the config ratios, so the D_c rows of the scaling table are
/// probed at fixed G automatically. Errors on non-positive values.
pub fn scaling_check(
    quantity: ScalingQuantity,
    parameter: ScalingParameter,
    config: &SystemConfig,
    grid: Option<Vec<f64>>,
) -> Result<f64> {
    let grid = grid.unwrap_or_else(|| match parameter {
        ScalingParameter::Omega => log_grid(1e4 / 10f64.sqrt(), 1e4 * 10f64.sqrt(), 17),
        ScalingParameter::Radius => log_grid(7.5e-9, 75e-9, 17),
    });
    if grid.len() < 3 {
        return Err(Error::Sweep("scaling fit needs at least 3 points".into()));
    }
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    for &p in &grid {
        let value = match parameter {
            ScalingParameter::Omega => eval_quantity(quantity, config, p)?,
            ScalingParameter::Radius => {
                let mut c = config.clone();
                c.sphere_radius = p;
                eval_quantity(quantity, &c, 1e4)?
            }
        };
        if !(value > 0.0) {
            return Err(Error::Sweep(format!(
                "{} is not positive at {} = {p:e}; log-log fit undefined",
                quantity.name(),
                parameter.name()
            )));
        }
        xs.push(p.ln());
        ys.push(value.ln());
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    Ok(sxy / sxx)
}

/// Radius maximizing λ_sph at fixed ω, λ, r_c, by golden-section search over
/// [0.1 r_c, 5 r_c]. Lands at ≈ 2.3784 r_c.
pub fn lambda_sph_peak_radius(config: &SystemConfig) -> Result<f64> {
    let rc = config.csl_length;
    let f = |r: f64| -> Result<f64> {
        let mut c = config.clone();
        c.sphere_radius = r;
        c.csl_enabled = true;
        if c.csl_rate == 0.0 {
            c.csl_rate = 1e-10; // peak position does not depend on λ
        }
        csl_diffusion(&c, 1e4)
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.1 * rc, 5.0 * rc);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..120 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

// ---------------------------------------------------------------------------
// Discriminator
// ---------------------------------------------------------------------------

/// Outcome of comparing the with/without-collapse curves at low ω₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The two curves slope in opposite directions.
    DistinguishableBySign,
    /// Same slope sign, but the entanglement gap clears the threshold.
    DistinguishableByGap,
    Indistinguishable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::DistinguishableBySign => "distinguishable-by-sign",
            Verdict::DistinguishableByGap => "distinguishable-by-gap",
            Verdict::Indistinguishable => "indistinguishable",
        };
        write!(f, "{s}")
    }
}

/// Everything the discriminator measured in the low-ω window.
#[derive(Clone, Debug)]
pub struct DiscriminatorReport {
    pub verdict: Verdict,
    /// Least-squares dE_N/dω₁ of the with-CSL curve over the window.
    pub slope_with_csl: f64,
    /// Same for the without-CSL curve.
    pub slope_without_csl: f64,
    /// Mean (E_N^off − E_N^on)/E_N^off over the window.
    pub mean_relative_gap: f64,
    /// The same gap at the leftmost grid point.
    pub leftmost_relative_gap: f64,
    /// Mean relative difference of the total diffusion rates (mode 1).
    pub mean_diffusion_gap: f64,
    /// Diffusion-rate gap at the leftmost grid point.
    pub leftmost_diffusion_gap: f64,
    /// Number of grid points in the window.
    pub window_points: usize,
}

fn lsq_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    sxy / sxx
}

/// Compare curve slopes and gaps over the lowest `window_fraction` of the
/// grid (default 0.2) and return the verdict: opposite slope signs →
/// by-sign; same sign with mean gap ≥ `gap_threshold` (default 0.10) →
/// by-gap; otherwise indistinguishable.
pub fn slope_sign_discriminator(
    result: &SweepResult,
    window_fraction: f64,
    gap_threshold: f64,
) -> Result<DiscriminatorReport> {
    let rel = relative_difference(result)?;
    let n = result.rows.len();
    let window = ((n as f64 * window_fraction).ceil() as usize).max(3).min(n);
    if window < 3 {
        return Err(Error::Sweep(format!(
            "window of {window} points is too small for a slope estimate"
        )));
    }
    let mut on_pts = Vec::with_capacity(window);
    let mut off_pts = Vec::with_capacity(window);
    for row in &result.rows[..window] {
        if let (Some(on), Some(off)) = (row.en_with_csl, row.en_without_csl) {
            on_pts.push((row.omega1, on));
            off_pts.push((row.omega1, off));
        }
    }
    if on_pts.len() < 3 {
        return Err(Error::Sweep(
            "fewer than 3 solved points in the low-frequency window".into(),
        ));
    }
    let slope_on = lsq_slope(&on_pts);
    let slope_off = lsq_slope(&off_pts);

    let gaps: Vec<f64> = rel[..window].iter().flatten().copied().collect();
    if gaps.is_empty() {
        return Err(Error::Sweep(
            "no point in the window has nonzero reference entanglement".into(),
        ));
    }
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let leftmost_gap = rel
        .iter()
        .flatten()
        .next()
        .copied()
        .unwrap_or(f64::NAN);

    let diff_gap = diffusion_relative_difference(result);
    let mean_diffusion_gap = diff_gap[..window].iter().sum::<f64>() / window as f64;

    let verdict = if slope_on * slope_off < 0.0 {
        Verdict::DistinguishableBySign
    } else if mean_gap >= gap_threshold {
        Verdict::DistinguishableByGap
    } else {
        Verdict::Indistinguishable
    };
    Ok(DiscriminatorReport {
        verdict,
        slope_with_csl: slope_on,
        slope_without_csl: slope_off,
        mean_relative_gap: mean_gap,
        leftmost_relative_gap: leftmost_gap,
        mean_diffusion_gap,
        leftmost_diffusion_gap: diff_gap[0],
        window_points: window,
    })
}

// ---------------------------------------------------------------------------
// Figure presets
// ---------------------------------------------------------------------------

/// Published parameter sets. The letter pairs (a, d), (b, e), (c, f) share
/// parameters: the first letter labels the diffusion panel, the second the
/// entanglement panel of the same configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetId {
    Fig2,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
    Fig3e,
    Fig3f,
}

impl PresetId {
    pub const ALL: [PresetId; 7] = [
        PresetId::Fig2,
        PresetId::Fig3a,
        PresetId::Fig3b,
        PresetId::Fig3c,
        PresetId::Fig3d,
        PresetId::Fig3e,
        PresetId::Fig3f,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Fig2 => "fig2",
            PresetId::Fig3a => "fig3a",
            PresetId::Fig3b => "fig3b",
            PresetId::Fig3c => "fig3c",
            PresetId::Fig3d => "fig3d",
            PresetId::Fig3e => "fig3e",
            PresetId::Fig3f => "fig3f",
        }
    }
}

impl std::str::FromStr for PresetId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

impl std::fmt::Display for PresetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Configuration of a figure preset.
pub fn preset_config(id: PresetId) -> SystemConfig {
    let mut c = SystemConfig::default();
    match id {
        PresetId::Fig2 => {}
        PresetId::Fig3a | PresetId::Fig3d => {
            c.csl_rate = 1e-9;
            c.sphere_radius = 15e-9;
            c.feedback_reflectivity = 0.996;
            c.g2_over_kappa_eff = 1.2;
            c.g1_over_g2 = 0.77;
        }
        PresetId::Fig3b | PresetId::Fig3e => {
            c.csl_rate = 1e-10;
            c.sphere_radius = 18e-9;
            c.feedback_reflectivity = 0.999;
            c.g2_over_kappa_eff = 2.2;
            c.g1_over_g2 = 0.79;
        }
        PresetId::Fig3c | PresetId::Fig3f => {
            c.csl_rate = 1e-11;
            c.sphere_radius = 22e-9;
            c.feedback_reflectivity = 0.999;
            c.g2_over_kappa_eff = 2.0;
            c.g1_over_g2 = 0.79;
        }
    }
    c
}

/// Full sweep spec of a preset, including its ω₁ grid (40 log points inside
/// the entanglement support of that parameter set).
pub fn preset_spec(id: PresetId) -> SweepSpec {
    let (lo, hi) = match id {
        PresetId::Fig2 => (7.5e3, 2.8e4),
        PresetId::Fig3a | PresetId::Fig3d => (2.0e3, 1.2e4),
        PresetId::Fig3b | PresetId::Fig3e => (1.5e3, 2.6e3),
        PresetId::Fig3c | PresetId::Fig3f => (1.0e3, 1.45e3),
    };
    SweepSpec {
        config: preset_config(id),
        parameter: SweepParameter::Omega1,
        grid: log_grid(lo, hi, 40),
        variants: CslVariant::Both,
        base_omega1: 1e4,
        preset: Some(id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny_fig2_spec(points: usize) -> SweepSpec {
        let mut s = preset_spec(PresetId::Fig2);
        s.grid = log_grid(8e3, 2e4, points);
        s
    }

    #[test]
    fn degenerate_single_point_sweep() {
        let mut spec = tiny_fig2_spec(1);
        spec.variants = CslVariant::Off;
        let res = run_sweep(&spec).unwrap();
        assert_eq!(res.rows.len(), 1);
        let en = res.rows[0].en_without_csl.unwrap();
        assert!(en >= 0.0);
        assert!(res.rows[0].en_with_csl.is_none());
        assert!(res.rows[0].stable);
    }

    #[test]
    fn empty_and_unsorted_grids_are_rejected() {
        let mut spec = tiny_fig2_spec(3);
        spec.grid.clear();
        assert!(matches!(run_sweep(&spec), Err(Error::Sweep(_))));
        let mut spec = tiny_fig2_spec(3);
        spec.grid = vec![2.0e4, 1.0e4, 3.0e4];
        assert!(matches!(run_sweep(&spec), Err(Error::Sweep(_))));
    }

    #[test]
    fn all_unstable_sweep_fails_loudly() {
        let mut spec = tiny_fig2_spec(3);
        spec.config.g1_over_g2 = 1.3;
        assert!(matches!(run_sweep(&spec), Err(Error::AllUnstable(3))));
    }

    #[test]
    fn zero_collapse_rate_makes_curves_coincide() {
        let mut spec = tiny_fig2_spec(5);
        spec.config.csl_rate = 0.0;
        let res = run_sweep(&spec).unwrap();
        for row in &res.rows {
            assert_eq!(row.en_with_csl, row.en_without_csl);
        }
        let rel = relative_difference(&res).unwrap();
        for r in rel.into_iter().flatten() {
            assert_eq!(r, 0.0);
        }
        let rep = slope_sign_discriminator(&res, 0.6, 0.10).unwrap();
        assert_eq!(rep.verdict, Verdict::Indistinguishable);
    }

    #[test]
    fn relative_difference_requires_both_variants() {
        let mut spec = tiny_fig2_spec(3);
        spec.variants = CslVariant::On;
        let res = run_sweep(&spec).unwrap();
        assert!(matches!(
            relative_difference(&res),
            Err(Error::MissingVariant(_))
        ));
    }

    #[test]
    fn csl_only_adds_noise_so_gaps_are_nonnegative() {
        let res = run_sweep(&tiny_fig2_spec(6)).unwrap();
        for r in relative_difference(&res).unwrap().into_iter().flatten() {
            assert!(r >= 0.0);
        }
    }

    #[test]
    fn scaling_exponents_for_trap_and_gas() {
        let cfg = SystemConfig::default();
        let e = scaling_check(ScalingQuantity::TrapLight, ScalingParameter::Omega, &cfg, None)
            .unwrap();
        assert!((e - 1.0).abs() < 1e-6, "D_t vs omega: {e}");
        let e =
            scaling_check(ScalingQuantity::Gas, ScalingParameter::Radius, &cfg, None).unwrap();
        assert!((e + 1.0).abs() < 1e-6, "D_a vs R: {e}");
    }

    #[test]
    fn csl_vs_radius_is_increasing_but_not_a_power_law() {
        let cfg = SystemConfig::default();
        let rc = cfg.csl_length;
        let grid = log_grid(0.1 * rc, 2.3 * rc, 25);
        // strictly increasing over (0, 2.3 rc]
        let mut prev = 0.0;
        for &r in &grid {
            let mut c = cfg.clone();
            c.sphere_radius = r;
            let v = csl_diffusion(&c, 1e4).unwrap();
            assert!(v > prev, "lambda_sph not increasing at R = {r:e}");
            prev = v;
        }
        let e = scaling_check(
            ScalingQuantity::Csl,
            ScalingParameter::Radius,
            &cfg,
            Some(grid),
        )
        .unwrap();
        assert!(e > 0.0);
        // a genuine power law would fit with the same local slope everywhere;
        // compare two sub-decade fits instead
        let lo = scaling_check(
            ScalingQuantity::Csl,
            ScalingParameter::Radius,
            &cfg,
            Some(log_grid(0.1 * rc, 0.3 * rc, 9)),
        )
        .unwrap();
        let hi = scaling_check(
            ScalingQuantity::Csl,
            ScalingParameter::Radius,
            &cfg,
            Some(log_grid(1.0 * rc, 2.3 * rc, 9)),
        )
        .unwrap();
        assert!((lo - hi).abs() > 0.3, "lo {lo} hi {hi}");
    }

    #[test]
    fn lambda_sph_peak_sits_at_2_38_rc() {
        let cfg = SystemConfig::default();
        let peak = lambda_sph_peak_radius(&cfg).unwrap();
        assert_relative_eq!(peak / cfg.csl_length, 2.378355808, max_relative = 1e-6);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = config_hash(&SystemConfig::default());
        let b = config_hash(&SystemConfig::default());
        assert_eq!(a, b);
        let mut c = SystemConfig::default();
        c.csl_rate = 2e-8;
        assert_ne!(a, config_hash(&c));
    }

    #[test]
    fn radius_sweep_runs() {
        let mut spec = tiny_fig2_spec(4);
        spec.parameter = SweepParameter::Radius;
        spec.grid = log_grid(10e-9, 30e-9, 4);
        spec.base_omega1 = 1e4;
        let res = run_sweep(&spec).unwrap();
        assert_eq!(res.rows.len(), 4);
        for row in &res.rows {
            assert_eq!(row.omega1, 1e4);
            assert!(row.stable);
        }
    }

    #[test]
    fn soft_gates_warn_but_do_not_fail() {
        let mut spec = tiny_fig2_spec(3);
        spec.grid = vec![500.0, 900.0, 1500.0]; // below 10 kappa_eff = 2000
        let warnings = spec.validate().unwrap();
        assert!(warnings.iter().any(|w| w.0.contains("adiabatic gates")));
        assert!(run_sweep(&spec).is_ok());
    }
}
