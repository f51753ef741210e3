use thiserror::Error;

use crate::constitutive::Hypothesis;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("invalid constitutive parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("constitutive hypothesis \"{hypothesis}\" violated (witness {witness})")]
    Hypothesis {
        hypothesis: Hypothesis,
        witness: f64,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("load parameter gamma must be finite and non-negative, got {0}")]
    InvalidGamma(f64),
    #[error("invalid tolerance {name} = {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("step size underflow at t = {t}: dt = {dt:e} below dt_min (error estimate {error:e})")]
    StepUnderflow {
        t: f64,
        dt: f64,
        error: f64,
        /// State at which the integrator gave up.
        mu_nat: f64,
        mu: Vec<f64>,
    },
    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("equilibrium at alpha = {alpha} is not strictly admissible (|D| = {d_abs}, theta = {threshold})")]
    NotStrictlyAdmissible {
        alpha: f64,
        d_abs: f64,
        threshold: f64,
    },
    #[error("invalid alpha range [{min}, {max}] with {n_points} points")]
    InvalidRange { min: f64, max: f64, n_points: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("largest trivial-branch eigenvalue does not change sign on [{lo}, {hi}] (values {at_lo}, {at_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        at_lo: f64,
        at_hi: f64,
    },
    #[error("eigensolve failed for a {dim}x{dim} kernel matrix: {reason}")]
    Eigensolve { dim: usize, reason: String },
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("unknown config section [{0}]")]
    UnknownSection(String),
    #[error("unknown config key {section}.{key}")]
    UnknownKey { section: String, key: String },
    #[error("{key} = {value:?}: {reason}")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{key} = {value} violates {bound}")]
    Bound {
        key: String,
        value: String,
        bound: &'static str,
    },
    #[error("{0}")]
    Constitutive(#[from] ConstitutiveError),
}
