//! Steady-state entanglement of two optically levitated nanospheres.
//!
//! Two nanospheres sit in separate optical traps inside a Fabry-Pérot cavity
//! whose output is fed back through a controllable beamsplitter, reducing the
//! effective cavity decay. The cavity is driven on the blue sideband of one
//! mechanical mode and the red sideband of the other, cooling a two-mode
//! Bogoliubov mode and steering the pair toward a two-mode squeezed steady
//! state. Four momentum-diffusion channels compete with that: residual gas
//! collisions, trap-light scattering, cavity-photon scattering, and the
//! hypothesized continuous-spontaneous-localization (CSL) collapse noise.
//!
//! The crate assembles the linearized drift/diffusion model, solves the
//! steady-state Lyapunov equation for the 6×6 covariance matrix, and computes
//! the logarithmic negativity of the two mechanical modes, with and without
//! the collapse term. Sweeps over the trapping frequency produce the paired
//! entanglement curves whose shapes and gaps discriminate the collapse effect.
//!
//! The steady state is numerically stiff: the dark mechanical mode is damped
//! only at the gas rate γ/2 ~ 1e-6 s⁻¹ while the cavity decays at ~1e2 s⁻¹,
//! so covariance entries span ~15 orders of magnitude. Everything downstream
//! of the Lyapunov solve therefore runs in double-double (~31 significant
//! digit) arithmetic; see [`dd`].
//!
//! Entry points:
//! - [`params::SystemConfig`] holds the physical inputs; [`params::derive`]
//!   produces the derived single-point quantities.
//! - [`noise::budget`] evaluates the four diffusion rates per mode.
//! - [`dynamics::build_model`] / [`dynamics::solve_lyapunov`] give the
//!   steady-state covariance.
//! - [`entanglement::log_negativity`] quantifies the mechanical entanglement.
//! - [`sweep::run_sweep`] and [`sweep::presets`] reproduce the paired curves.
//!
//! Runnable examples live under `examples/`; a thin `optolev` binary exposes
//! the same operations as subcommands (`rates`, `model`, `entanglement`,
//! `sweep`, `reproduce`, `scaling-check`).

pub mod cli;
pub mod constants;
pub mod dd;
pub mod dynamics;
pub mod entanglement;
pub mod noise;
pub mod params;
pub mod sweep;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
