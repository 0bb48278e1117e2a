//! Physical constants, pinned so that golden datasets are reproducible.
//!
//! CODATA 2018 values. All frequencies and rates in this crate are angular
//! rates in s⁻¹; inputs labelled Hz/kHz are read as s⁻¹ on ingest.

/// Constants revision embedded in output headers.
pub const CONSTANTS_VERSION: &str = "codata-2018";

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;

/// Atomic mass unit, kg. Also the reference mass m₀ of the CSL collapse rate.
pub const AMU: f64 = 1.660_539_066e-27;

/// One Torr in pascal.
pub const TORR: f64 = 133.322;
