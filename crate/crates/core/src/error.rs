use std::path::PathBuf;

/// Everything that can go wrong while building or checking the objects in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("atom at angle {angle} is within 1e-9 of the point 1")]
    AtomAtOne { angle: f64 },
    #[error("angle {angle} is outside (0, 2π)")]
    AngleOutOfRange { angle: f64 },
    #[error("duplicate atom angle {angle}")]
    DuplicateAngle { angle: f64 },
    #[error("atom weight {weight} is not a positive finite number")]
    NonPositiveWeight { weight: f64 },
    #[error("a measure needs at least one atom")]
    EmptyMeasure,
    #[error("a measure system needs at least one component")]
    EmptySystem,
    #[error("exponent q = {q} must exceed {min}")]
    InvalidExponent { q: f64, min: f64 },
    #[error("Clark construction failed its post-checks: {reason}")]
    IllConditionedClark { reason: String },
    #[error("inner function is not valid: {reason}")]
    InvalidInner { reason: String },
    #[error("point {z} lies outside the closed unit disc")]
    Domain { z: String },
    #[error("denominator vanishes at 1 (|denom(1)| = {modulus:e})")]
    DegenerateAtOne { modulus: f64 },
    #[error("product degree {degree} exceeds the cap {cap}")]
    DegreeCapExceeded { degree: usize, cap: usize },
    #[error("θ(0) is within 1e-12 of 1")]
    ThetaZeroIsOne,
    #[error("Clark unitary has eigenvalue {eigenvalue} within {tol:e} of 1")]
    SpectrumAtOne { eigenvalue: String, tol: f64 },
    #[error("vector is not in the model space: ‖Pv − v‖ = {deviation:e} (defect residual {residual:e})")]
    NotInModelSpace { deviation: f64, residual: f64 },
    #[error("orthonormal basis collapsed to rank {rank}")]
    BasisDeficient { rank: usize },
    #[error("adaptive quadrature stalled at depth {depth} on [{a}, {b}]")]
    QuadratureNotConverged { a: f64, b: f64, depth: usize },
    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
