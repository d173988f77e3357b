//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by model construction, the characteristic-equation
/// solver, the steady-state solver, and the simulator.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Traffic intensity is at or above one; no steady state exists.
    #[error("unstable model: rho = {rho} >= 1")]
    Unstable { rho: f64 },

    /// A probability mass function failed validation.
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    /// A generating function was evaluated at (or too close to) a pole.
    #[error("pgf evaluated at a pole: |denominator| = {denom_mag:e} at z = {z}")]
    PoleAtArgument { z: num_complex::Complex64, denom_mag: f64 },

    /// The cleared characteristic polynomial would exceed the degree guard.
    #[error("cleared characteristic polynomial degree {degree} exceeds {max}")]
    DegreeOverflow { degree: usize, max: usize },

    /// The number of roots found strictly inside the unit circle does not
    /// match the maximum batch size.
    #[error(
        "expected {expected} roots inside the unit circle, found {found}; root moduli: {moduli:?}"
    )]
    RootCountMismatch {
        expected: usize,
        found: usize,
        moduli: Vec<f64>,
    },

    /// Two interior roots coincide to within the separation guard, so the
    /// geometric-mixture solution form does not apply.
    #[error("repeated interior root near {root} (separation {separation:e})")]
    RepeatedRoot { root: num_complex::Complex64, separation: f64 },

    /// The linear system for the mixture constants is numerically singular.
    #[error("singular constant system: {0}")]
    SingularSystem(String),

    /// The model does not match any of the recognized reduced forms.
    #[error("model is not a recognized special case: {0}")]
    NotSpecialCase(String),

    /// An analytic and an empirical distribution observe different epochs.
    #[error("epoch kind mismatch: analytic {analytic:?} vs empirical {empirical:?}")]
    EpochKindMismatch {
        analytic: crate::steady::EpochKind,
        empirical: crate::steady::EpochKind,
    },

    /// Continuous-time model parameter out of range.
    #[error("invalid continuous-time parameter: {0}")]
    InvalidCtParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
