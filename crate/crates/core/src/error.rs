// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} exceeds the limit of {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("partial trace needs at least one subsystem to keep")]
    EmptyKeepSet,

    #[error("rate must be nonnegative, got {0}")]
    NegativeRate(f64),

    #[error("photon bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("BandwidthTooLarge: photon bandwidth {gamma_ph} must be strictly below the resonator rate {gamma}")]
    BandwidthTooLarge { gamma_ph: f64, gamma: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("control set is missing the `{0}` waveform")]
    MissingWaveform(&'static str),

    #[error("state `{0}` cannot be prepared on this layout")]
    IncompatibleState(String),

    #[error("ToleranceViolation at t = {t}: {what}")]
    ToleranceViolation { t: f64, what: String },

    #[error("LeakageViolation at t = {t}: top Fock level population {population:e} exceeds {limit:e}")]
    LeakageViolation { t: f64, population: f64, limit: f64 },

    #[error("no emission: P_R + P_L = {0:e}")]
    NoEmission(f64),

    #[error("series has zero norm")]
    ZeroNorm,

    #[error("series is empty")]
    EmptySeries,

    #[error("series is degenerate: {0}")]
    DegenerateSeries(String),

    #[error("time grid is not uniform")]
    NonUniformGrid,

    #[error("oracle precondition: {0}")]
    OracleUnsupported(String),
}
