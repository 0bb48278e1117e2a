use thiserror::Error;

/// Errors surfaced by the library.
///
/// The CLI maps these onto distinct exit codes: config/validation problems
/// exit 2, an all-points-unstable sweep exits 3, and numerical-integrity
/// failures exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter violates its invariant.
    #[error("invalid config: {0}")]
    Config(String),

    /// Config file could not be read or parsed.
    #[error("config file {path}: {reason}")]
    ConfigFile { path: String, reason: String },

    /// A quantity with a unit suffix failed to parse.
    #[error("cannot parse {field} = {value:?}: {reason}")]
    UnitParse {
        field: String,
        value: String,
        reason: String,
    },

    /// Two inputs fix the same quantity inconsistently.
    #[error("conflicting inputs: {0}")]
    Conflict(String),

    /// The drift matrix has no strictly negative spectral abscissa, so no
    /// steady state exists.
    #[error("model is not stable (spectral abscissa {abscissa:.3e}); no steady state exists")]
    Unstable { abscissa: f64 },

    /// Every grid point of a sweep was unstable.
    #[error("all {0} sweep points are unstable")]
    AllUnstable(usize),

    /// A sweep was asked for data it did not compute.
    #[error("sweep result is missing the {0} variant")]
    MissingVariant(&'static str),

    /// Bad sweep specification (empty grid, non-increasing grid, ...).
    #[error("invalid sweep: {0}")]
    Sweep(String),

    /// An internal numerical check failed (eigen-solver non-convergence,
    /// residual above bound, dual-route disagreement, ...). Never silent.
    #[error("numerical integrity: {0}")]
    Numerics(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
