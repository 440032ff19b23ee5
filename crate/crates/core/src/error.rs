// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operator is not Hermitian (max |A - A^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expectation value has imaginary residue {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("closure violated for observable {index} (`{label}`): residual {residual:e}")]
    ClosureViolated {
        index: usize,
        label: String,
        residual: f64,
    },

    #[error("canonical commutator rejected for observable {index} (`{label}`): interior residual {residual:e}")]
    CanonicalRejected {
        index: usize,
        label: String,
        residual: f64,
    },

    #[error("witness is not frozen: max |[W, H_S]| = {residual:e}")]
    NotFrozen { residual: f64 },

    #[error("structural constants are not real: imaginary part {imaginary:e}")]
    NonRealConstants { imaginary: f64 },

    #[error("Fock truncation breached: top-level population {population:e} exceeds {threshold:e}; try n_max >= {suggested_n_max}")]
    TruncationBreach {
        population: f64,
        threshold: f64,
        suggested_n_max: usize,
    },

    #[error("composite dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("numerical cross-check failed in {context}: deviation {deviation:e} > {tolerance:e}")]
    CrossCheck {
        context: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("mode lattice is empty")]
    EmptyLattice,

    #[error("grid does not match the mode lattice: {0}")]
    GridMismatch(String),

    #[error("averaging window {window} covers fewer than {required_periods} periods of the slowest mode (period {period})")]
    WindowTooShort {
        window: f64,
        period: f64,
        required_periods: f64,
    },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of numerical guards (truncation, cross-checks,
    /// residual thresholds) as opposed to malformed input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::ImaginaryResidue { .. }
                | Error::ClosureViolated { .. }
                | Error::CanonicalRejected { .. }
                | Error::NotFrozen { .. }
                | Error::NonRealConstants { .. }
                | Error::TruncationBreach { .. }
                | Error::DimensionCap { .. }
                | Error::CrossCheck { .. }
                | Error::WindowTooShort { .. }
        )
    }
}
