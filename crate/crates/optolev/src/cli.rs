//! Command-line interface: config resolution, subcommand dispatch, and
//! deterministic CSV/table emission.
//!
//! Resolution order is defaults < config file < flags, applied exactly once.
//! Every generated file starts with a comment line embedding the SHA-256 of
//! the resolved configuration and the constants revision, and floats print
//! in scientific notation with 12 significant digits, so reruns are
//! byte-identical. There is no RNG anywhere in the pipeline; `--seedless`
//! is accepted as a no-op assertion of that.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 no stable point,
//! 4 numerical-integrity failure, 1 I/O.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::constants::CONSTANTS_VERSION;
use crate::dynamics::{build_model, is_stable, solve_lyapunov, LinearModel};
use crate::entanglement::{log_negativity, mechanical_block, symplectic_eigen_min};
use crate::noise::{budgets, NoiseBudget};
use crate::params::{Quantity, RawConfig, SystemConfig, UnitKind, Warning};
use crate::sweep::{
    self, config_hash, default_omega_grid, preset_spec, run_sweep, scaling_check,
    slope_sign_discriminator, CslVariant, PresetId, ScalingParameter, ScalingQuantity,
    SweepParameter, SweepResult, SweepSpec,
};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "optolev",
    version,
    about = "Steady-state entanglement of two levitated nanospheres under collapse noise"
)]
pub struct Cli {
    /// TOML config file; flags override file values, file values override defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for generated files
    #[arg(long, global = true, env = "OPTOLEV_OUT_DIR", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Assert deterministic execution (always the case: the pipeline has no RNG)
    #[arg(long, global = true)]
    pub seedless: bool,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Per-field overrides. Quantities accept unit suffixes:
/// Hz/kHz (read as s⁻¹), nm/um/cm/m, mK/K, Torr/Pa.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Sphere radius, m or suffixed ("15 nm")
    #[arg(long, global = true, value_name = "LEN")]
    pub radius: Option<String>,
    /// Sphere density, kg/m³
    #[arg(long, global = true)]
    pub density: Option<f64>,
    /// Relative permittivity
    #[arg(long, global = true)]
    pub permittivity: Option<f64>,
    /// Cavity length, m or suffixed
    #[arg(long, global = true, value_name = "LEN")]
    pub cavity_length: Option<String>,
    /// Cavity decay rate, s⁻¹ or suffixed ("20 kHz")
    #[arg(long, global = true, value_name = "RATE")]
    pub kappa: Option<String>,
    /// Cavity finesse (alternative to --kappa)
    #[arg(long, global = true)]
    pub finesse: Option<f64>,
    /// Mirror radius of curvature, m or suffixed
    #[arg(long, global = true, value_name = "LEN")]
    pub mirror_curvature: Option<String>,
    /// Cavity wavelength, m or suffixed
    #[arg(long, global = true, value_name = "LEN")]
    pub cavity_wavelength: Option<String>,
    /// Detuning Δ, s⁻¹ or suffixed
    #[arg(long, global = true, value_name = "RATE")]
    pub detuning: Option<String>,
    /// Trap wavelength, m or suffixed
    #[arg(long, global = true, value_name = "LEN")]
    pub trap_wavelength: Option<String>,
    /// Trap numerical aperture
    #[arg(long, global = true)]
    pub numerical_aperture: Option<f64>,
    /// Trap frequency ratio ω₂/ω₁
    #[arg(long, global = true)]
    pub omega2_over_omega1: Option<f64>,
    /// Feedback beamsplitter reflectivity r_B
    #[arg(long, global = true)]
    pub reflectivity: Option<f64>,
    /// Feedback phase θ, rad
    #[arg(long, global = true)]
    pub feedback_phase: Option<f64>,
    /// Drive strength G₂/κ_eff
    #[arg(long, global = true)]
    pub g2_over_kappa_eff: Option<f64>,
    /// Coupling ratio G₁/G₂
    #[arg(long, global = true)]
    pub g1_over_g2: Option<f64>,
    /// Gas temperature, K or suffixed ("10 mK")
    #[arg(long, global = true, value_name = "TEMP")]
    pub temperature: Option<String>,
    /// Gas pressure, Pa or suffixed ("1e-12 Torr")
    #[arg(long, global = true, value_name = "PRESS")]
    pub pressure: Option<String>,
    /// Gas molecule mass, kg
    #[arg(long, global = true)]
    pub molecule_mass: Option<f64>,
    /// CSL collapse rate λ, s⁻¹ or suffixed ("1e-8 Hz")
    #[arg(long = "lambda", global = true, value_name = "RATE")]
    pub csl_rate: Option<String>,
    /// CSL correlation length r_c, m or suffixed
    #[arg(long, global = true, value_name = "LEN")]
    pub csl_length: Option<String>,
    /// Include the collapse channel in "with CSL" totals
    #[arg(long, global = true)]
    pub csl_enabled: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CslArg {
    On,
    Off,
    Both,
}

impl From<CslArg> for CslVariant {
    fn from(v: CslArg) -> CslVariant {
        match v {
            CslArg::On => CslVariant::On,
            CslArg::Off => CslVariant::Off,
            CslArg::Both => CslVariant::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParamArg {
    Omega1,
    R,
    Lambda,
}

impl From<ParamArg> for SweepParameter {
    fn from(p: ParamArg) -> SweepParameter {
        match p {
            ParamArg::Omega1 => SweepParameter::Omega1,
            ParamArg::R => SweepParameter::Radius,
            ParamArg::Lambda => SweepParameter::CslRate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    #[value(name = "D_t")]
    Dt,
    #[value(name = "D_c")]
    Dc,
    #[value(name = "D_a")]
    Da,
    #[value(name = "lambda_sph")]
    LambdaSph,
}

impl From<QuantityArg> for ScalingQuantity {
    fn from(q: QuantityArg) -> ScalingQuantity {
        match q {
            QuantityArg::Dt => ScalingQuantity::TrapLight,
            QuantityArg::Dc => ScalingQuantity::CavityPhoton,
            QuantityArg::Da => ScalingQuantity::Gas,
            QuantityArg::LambdaSph => ScalingQuantity::Csl,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParameterArg {
    R,
    Omega,
}

impl From<ParameterArg> for ScalingParameter {
    fn from(p: ParameterArg) -> ScalingParameter {
        match p {
            ParameterArg::R => ScalingParameter::Radius,
            ParameterArg::Omega => ScalingParameter::Omega,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the four momentum-diffusion rates per mechanical mode
    Rates {
        /// Trapping frequency ω₁, s⁻¹ or suffixed
        #[arg(long, default_value = "1e4", value_name = "RATE")]
        omega1: String,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Dump the drift matrix, diffusion matrix, eigenvalues, and stability verdict
    Model {
        #[arg(long, default_value = "1e4", value_name = "RATE")]
        omega1: String,
        /// Which mechanical diffusion totals to use
        #[arg(long, value_enum, default_value = "on")]
        csl: CslArg,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Steady-state ν̃₋ and E_N at one operating point
    Entanglement {
        #[arg(long, default_value = "1e4", value_name = "RATE")]
        omega1: String,
        #[arg(long, value_enum, default_value = "both")]
        csl: CslArg,
    },
    /// Sweep ω₁, R, or λ and write the paired entanglement curves as CSV
    Sweep {
        #[arg(long, value_enum, default_value = "omega1")]
        param: ParamArg,
        /// Grid start (SI units of the parameter); defaults to 10 κ_eff for ω₁
        #[arg(long)]
        min: Option<f64>,
        /// Grid end; defaults to 500 κ_eff for ω₁
        #[arg(long)]
        max: Option<f64>,
        #[arg(long, default_value = "40")]
        points: usize,
        /// Log-spaced grid instead of linear (the default grid is always log)
        #[arg(long)]
        log: bool,
        #[arg(long, value_enum, default_value = "both")]
        csl: CslArg,
        /// ω₁ used when sweeping R or λ, s⁻¹
        #[arg(long, default_value_t = 1e4)]
        omega1: f64,
        /// Emit (x, y, series) triples instead of the full table
        #[arg(long)]
        plot_data: bool,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the published figure datasets (fig2, fig3a..fig3f)
    Reproduce {
        /// Preset name or "all"
        #[arg(long, default_value = "all")]
        preset: String,
    },
    /// Fit diffusion-rate scaling exponents in log-log coordinates
    ScalingCheck {
        #[arg(long, value_enum)]
        quantity: Option<QuantityArg>,
        #[arg(long, value_enum)]
        parameter: Option<ParameterArg>,
        /// Fit the whole table of (quantity, parameter) pairs
        #[arg(long)]
        all: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Rates { .. } => "rates",
            Command::Model { .. } => "model",
            Command::Entanglement { .. } => "entanglement",
            Command::Sweep { .. } => "sweep",
            Command::Reproduce { .. } => "reproduce",
            Command::ScalingCheck { .. } => "scaling-check",
        }
    }
}

/// Fully resolved invocation: what ran, on which configuration, where the
/// outputs went.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: SystemConfig,
    pub config_hash: String,
    pub constants_version: String,
    pub output_paths: Vec<String>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("manifest parse: {e}")))
    }
}

fn overrides_to_raw(o: &Overrides) -> RawConfig {
    let q = |s: &Option<String>| s.as_ref().map(|v| Quantity::Suffixed(v.clone()));
    let mut raw = RawConfig::default();
    raw.sphere.radius = q(&o.radius);
    raw.sphere.density = o.density;
    raw.sphere.permittivity = o.permittivity;
    raw.cavity.length = q(&o.cavity_length);
    raw.cavity.kappa = q(&o.kappa);
    raw.cavity.finesse = o.finesse;
    raw.cavity.mirror_curvature = q(&o.mirror_curvature);
    raw.cavity.wavelength = q(&o.cavity_wavelength);
    raw.cavity.detuning = q(&o.detuning);
    raw.trap.wavelength = q(&o.trap_wavelength);
    raw.trap.numerical_aperture = o.numerical_aperture;
    raw.trap.omega2_over_omega1 = o.omega2_over_omega1;
    raw.feedback.reflectivity = o.reflectivity;
    raw.feedback.phase = o.feedback_phase;
    raw.drive.g2_over_kappa_eff = o.g2_over_kappa_eff;
    raw.drive.g1_over_g2 = o.g1_over_g2;
    raw.gas.temperature = q(&o.temperature);
    raw.gas.pressure = q(&o.pressure);
    raw.gas.molecule_mass = o.molecule_mass;
    raw.csl.rate = q(&o.csl_rate);
    raw.csl.length = q(&o.csl_length);
    raw.csl.enabled = o.csl_enabled;
    raw
}

/// Resolve defaults < file < flags into a manifest. Validation warnings come
/// back alongside; physical validation itself lives in [`crate::params`].
pub fn parse_and_resolve(cli: &Cli) -> Result<(RunManifest, Vec<Warning>)> {
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        raw.merge(&RawConfig::from_file(path)?);
    }
    raw.merge(&overrides_to_raw(&cli.overrides));
    let config = raw.resolve()?;
    let warnings = config.validate()?;
    let manifest = RunManifest {
        subcommand: cli.command.name().to_string(),
        config_hash: config_hash(&config),
        config,
        constants_version: CONSTANTS_VERSION.to_string(),
        output_paths: Vec::new(),
    };
    Ok((manifest, warnings))
}

// ---------------------------------------------------------------------------
// Deterministic emission
// ---------------------------------------------------------------------------

/// Scientific notation, 12 significant digits; chosen so golden files are
/// byte-stable across platforms while exceeding every test tolerance.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn hash_comment(hash: &str, extra: &str) -> String {
    if extra.is_empty() {
        format!("# config_hash={hash} constants={CONSTANTS_VERSION}\n")
    } else {
        format!("# config_hash={hash} constants={CONSTANTS_VERSION} {extra}\n")
    }
}

/// Sweep table as CSV. For R/λ sweeps the swept value is prepended as its
/// own column; ω₁ sweeps carry it in `omega1` already.
pub fn sweep_csv(result: &SweepResult) -> String {
    let extra = match result.preset {
        Some(p) => format!("preset={p}"),
        None => format!("param={}", result.parameter.name()),
    };
    let mut out = hash_comment(&result.config_hash, &extra);
    let param_col = !matches!(result.parameter, SweepParameter::Omega1);
    if param_col {
        out.push_str(result.parameter.name());
        out.push(',');
    }
    out.push_str(
        "omega1,omega2,D_t1,D_c1,D_a1,lambda_sph1,D_t2,D_c2,D_a2,lambda_sph2,stable,E_N_off,E_N_on,rel_diff\n",
    );
    for row in &result.rows {
        let mut line = String::new();
        if param_col {
            let _ = write!(line, "{},", sci(row.param_value));
        }
        let b = &row.budgets;
        let en_off = row.en_without_csl.unwrap_or(f64::NAN);
        let en_on = row.en_with_csl.unwrap_or(f64::NAN);
        let rel = match (row.en_without_csl, row.en_with_csl) {
            (Some(off), Some(on)) if off > 0.0 => (off - on) / off,
            _ => f64::NAN,
        };
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            sci(row.omega1),
            sci(row.omega2),
            sci(b[0].d_t),
            sci(b[0].d_c),
            sci(b[0].d_a),
            sci(b[0].lambda_sph),
            sci(b[1].d_t),
            sci(b[1].d_c),
            sci(b[1].d_a),
            sci(b[1].lambda_sph),
            row.stable,
            sci(en_off),
            sci(en_on),
            sci(rel),
        );
        out.push_str(&line);
    }
    out
}

/// (x, y, series) triples for external plotting.
pub fn plot_data_csv(result: &SweepResult) -> String {
    let mut out = hash_comment(&result.config_hash, "");
    out.push_str("x,y,series\n");
    for (label, pick) in [
        ("E_N_off", &(|r: &sweep::SweepRow| r.en_without_csl) as &dyn Fn(&sweep::SweepRow) -> Option<f64>),
        ("E_N_on", &|r: &sweep::SweepRow| r.en_with_csl),
    ] {
        for row in &result.rows {
            if let Some(y) = pick(row) {
                let _ = write!(out, "{},{},{label}\n", sci(row.param_value), sci(y));
            }
        }
    }
    out
}

/// Per-mode noise budget CSV.
pub fn rates_csv(b: &[NoiseBudget; 2], omega: [f64; 2], hash: &str) -> String {
    let mut out = hash_comment(hash, "");
    out.push_str("mode,omega,D_t,D_c,D_a,lambda_sph,total_no_csl,total_csl\n");
    for (i, budget) in b.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}\n",
            budget.mode_index,
            sci(omega[i]),
            sci(budget.d_t),
            sci(budget.d_c),
            sci(budget.d_a),
            sci(budget.lambda_sph),
            sci(budget.total_without_csl),
            sci(budget.total_with_csl),
        );
    }
    out
}

fn rates_table(b: &[NoiseBudget; 2], omega: [f64; 2]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}",
        "mode", "omega", "D_t", "D_c", "D_a", "lambda_sph", "total_no_csl", "total_csl"
    );
    for (i, budget) in b.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            budget.mode_index,
            omega[i],
            budget.d_t,
            budget.d_c,
            budget.d_a,
            budget.lambda_sph,
            budget.total_without_csl,
            budget.total_with_csl,
        );
    }
    out
}

/// Long-format CSV of the model: drift entries, diffusion diagonal,
/// eigenvalues, verdict.
pub fn model_csv(model: &LinearModel, hash: &str) -> Result<String> {
    let report = is_stable(model)?;
    let mut out = hash_comment(hash, "");
    out.push_str("record,i,j,value_re,value_im\n");
    for i in 0..6 {
        for j in 0..6 {
            let _ = write!(out, "A,{i},{j},{},0\n", sci(model.drift[i][j]));
        }
    }
    for (i, d) in model.diffusion_diag.iter().enumerate() {
        let _ = write!(out, "D,{i},{i},{},0\n", sci(*d));
    }
    for (i, z) in report.eigenvalues.iter().enumerate() {
        let _ = write!(out, "eig,{i},0,{},{}\n", sci(z.re), sci(z.im));
    }
    let _ = write!(out, "stable,0,0,{},0\n", if report.is_stable { 1 } else { 0 });
    let _ = write!(out, "abscissa,0,0,{},0\n", sci(report.spectral_abscissa));
    Ok(out)
}

fn model_table(model: &LinearModel) -> Result<String> {
    let report = is_stable(model)?;
    let mut out = String::from("drift matrix A (s^-1), quadratures (x1,p1,x2,p2,X,Y):\n");
    for row in &model.drift {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>12.4e}")).collect();
        let _ = writeln!(out, "  [{}]", cells.join(" "));
    }
    let diag: Vec<String> = model
        .diffusion_diag
        .iter()
        .map(|x| format!("{x:.6e}"))
        .collect();
    let _ = writeln!(out, "diffusion diag D (s^-1): [{}]", diag.join(", "));
    out.push_str("eigenvalues of A (s^-1):\n");
    for z in &report.eigenvalues {
        let _ = writeln!(out, "  {:+.9e} {:+.9e} i", z.re, z.im);
    }
    let _ = writeln!(
        out,
        "stable: {} (spectral abscissa {:+.6e} s^-1)",
        report.is_stable, report.spectral_abscissa
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

fn write_or_print(path: Option<&Path>, out_dir: Option<&Path>, content: &str) -> Result<Vec<String>> {
    match path {
        Some(p) => {
            let full = match out_dir {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p.to_path_buf(),
            };
            if let Some(parent) = full.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&full, content)?;
            Ok(vec![full.display().to_string()])
        }
        None => {
            print!("{content}");
            Ok(Vec::new())
        }
    }
}

/// Run a parsed invocation; returns the manifest of what happened.
pub fn execute(cli: &Cli) -> Result<RunManifest> {
    let (mut manifest, warnings) = parse_and_resolve(cli)?;
    for w in &warnings {
        eprintln!("{w}");
    }
    let config = manifest.config.clone();
    let hash = manifest.config_hash.clone();

    match &cli.command {
        Command::Rates { omega1, format } => {
            let omega1 =
                Quantity::Suffixed(omega1.clone()).resolve(UnitKind::Rate, "omega1")?;
            let dq = crate::params::derive(&config, omega1)?;
            let b = budgets(&dq, &config)?;
            let omegas = [dq.omega1, dq.omega2];
            match format {
                Format::Csv => print!("{}", rates_csv(&b, omegas, &hash)),
                Format::Table => print!("{}", rates_table(&b, omegas)),
            }
        }
        Command::Model { omega1, csl, format } => {
            let omega1 =
                Quantity::Suffixed(omega1.clone()).resolve(UnitKind::Rate, "omega1")?;
            let dq = crate::params::derive(&config, omega1)?;
            let b = budgets(&dq, &config)?;
            let model = build_model(&dq, &b, matches!(csl, CslArg::On | CslArg::Both));
            match format {
                Format::Csv => print!("{}", model_csv(&model, &hash)?),
                Format::Table => print!("{}", model_table(&model)?),
            }
        }
        Command::Entanglement { omega1, csl } => {
            let omega1 =
                Quantity::Suffixed(omega1.clone()).resolve(UnitKind::Rate, "omega1")?;
            let dq = crate::params::derive(&config, omega1)?;
            let b = budgets(&dq, &config)?;
            println!("omega1 = {:.6e} s^-1, omega2 = {:.6e} s^-1", dq.omega1, dq.omega2);
            print!("{}", rates_table(&b, [dq.omega1, dq.omega2]));
            let variant: CslVariant = (*csl).into();
            let run = |on: bool| -> Result<()> {
                let model = build_model(&dq, &b, on);
                let v = solve_lyapunov(&model)?;
                if v.is_ill_conditioned() {
                    eprintln!(
                        "warning: Lyapunov condition estimate {:.2e} exceeds 1e12",
                        v.cond_estimate
                    );
                }
                let state = mechanical_block(&v);
                let nu = symplectic_eigen_min(&state)?;
                let en = log_negativity(&state)?;
                println!(
                    "csl {}: nu_min = {:.9e}, E_N = {:.9e} (lyapunov residual {:.2e})",
                    if on { "on " } else { "off" },
                    nu,
                    en,
                    v.residual
                );
                Ok(())
            };
            if matches!(variant, CslVariant::Off | CslVariant::Both) {
                run(false)?;
            }
            if matches!(variant, CslVariant::On | CslVariant::Both) {
                run(true)?;
            }
        }
        Command::Sweep {
            param,
            min,
            max,
            points,
            log,
            csl,
            omega1,
            plot_data,
            out,
        } => {
            let parameter: SweepParameter = (*param).into();
            let grid = match (min, max) {
                (Some(lo), Some(hi)) => {
                    if *log {
                        sweep::log_grid(*lo, *hi, *points)
                    } else {
                        sweep::linear_grid(*lo, *hi, *points)
                    }
                }
                (None, None) if parameter == SweepParameter::Omega1 => {
                    default_omega_grid(&config)
                }
                _ => {
                    return Err(Error::Sweep(
                        "--min and --max are required together (and always for R/lambda sweeps)"
                            .into(),
                    ))
                }
            };
            let spec = SweepSpec {
                config: config.clone(),
                parameter,
                grid,
                variants: (*csl).into(),
                base_omega1: *omega1,
                preset: None,
            };
            for w in spec.validate()? {
                eprintln!("{w}");
            }
            let result = run_sweep(&spec)?;
            let content = if *plot_data {
                plot_data_csv(&result)
            } else {
                sweep_csv(&result)
            };
            let written = write_or_print(out.as_deref(), cli.out_dir.as_deref(), &content)?;
            manifest.output_paths.extend(written);
        }
        Command::Reproduce { preset } => {
            let ids: Vec<PresetId> = if preset == "all" {
                PresetId::ALL.to_vec()
            } else {
                vec![preset.parse()?]
            };
            for id in ids {
                let spec = preset_spec(id);
                let result = run_sweep(&spec)?;
                let content = sweep_csv(&result);
                let file = PathBuf::from(format!("{id}.csv"));
                let written =
                    write_or_print(Some(&file), cli.out_dir.as_deref(), &content)?;
                let report = slope_sign_discriminator(&result, 0.2, 0.10)?;
                println!(
                    "{id}: verdict={} slope_on={:+.3e} slope_off={:+.3e} \
                     mean_EN_gap={:.4} leftmost_EN_gap={:.4} mean_diffusion_gap={:.4} -> {}",
                    report.verdict,
                    report.slope_with_csl,
                    report.slope_without_csl,
                    report.mean_relative_gap,
                    report.leftmost_relative_gap,
                    report.mean_diffusion_gap,
                    written.first().map(String::as_str).unwrap_or("-")
                );
                manifest.output_paths.extend(written);
            }
        }
        Command::ScalingCheck {
            quantity,
            parameter,
            all,
        } => {
            let pairs: Vec<(ScalingQuantity, ScalingParameter)> = if *all {
                let qs = [
                    ScalingQuantity::TrapLight,
                    ScalingQuantity::CavityPhoton,
                    ScalingQuantity::Gas,
                    ScalingQuantity::Csl,
                ];
                let ps = [ScalingParameter::Radius, ScalingParameter::Omega];
                qs.iter()
                    .flat_map(|&q| ps.iter().map(move |&p| (q, p)))
                    .collect()
            } else {
                match (quantity, parameter) {
                    (Some(q), Some(p)) => vec![((*q).into(), (*p).into())],
                    _ => {
                        return Err(Error::Config(
                            "scaling-check needs --quantity and --parameter (or --all)".into(),
                        ))
                    }
                }
            };
            for (q, p) in pairs {
                let exponent = scaling_check(q, p, &config, None)?;
                println!("{} vs {}: fitted exponent {:+.9}", q.name(), p.name(), exponent);
            }
        }
    }
    Ok(manifest)
}

/// Entry point for the binary: parse, execute, map errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Stable exit-code mapping (documented in the module docs).
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::ConfigFile { .. }
        | Error::UnitParse { .. }
        | Error::Conflict(_)
        | Error::Sweep(_)
        | Error::MissingVariant(_) => 2,
        Error::Unstable { .. } | Error::AllUnstable(_) => 3,
        Error::Numerics(_) => 4,
        Error::Io(_) => 1,
    }
}
