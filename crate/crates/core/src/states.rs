// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-qubit state specifications used by configs and the FFI.
//!
//! A state is a name (`phi+`, `phi-`, `psi+`, `psi-`, `00`, `01`, `10`,
//! `11`, `maximally-mixed`), an explicit 4×4 matrix of `[re, im]` pairs, or
//! a weighted mixture of either.

use std::f64::consts::FRAC_1_SQRT_2;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{DensityMatrix, Operator, SpaceLabel, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    /// Computational basis ket `|b₁b₂⟩`, index `0..4`.
    Basis(usize),
    MaximallyMixed,
}

impl NamedState {
    pub fn density_matrix(self) -> DensityMatrix {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let ket = match self {
            NamedState::PhiPlus => [s, ZERO, ZERO, s],
            NamedState::PhiMinus => [s, ZERO, ZERO, -s],
            NamedState::PsiPlus => [ZERO, s, s, ZERO],
            NamedState::PsiMinus => [ZERO, s, -s, ZERO],
            NamedState::Basis(b) => {
                let mut k = [ZERO; 4];
                k[b] = ONE;
                k
            }
            NamedState::MaximallyMixed => return DensityMatrix::maximally_mixed(4, SpaceLabel::System),
        };
        DensityMatrix::from_pure(&ket, SpaceLabel::System).expect("normalised ket")
    }
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().trim_start_matches('|').trim_end_matches('>').to_ascii_lowercase();
        Ok(match key.as_str() {
            "phi+" | "phi_plus" => NamedState::PhiPlus,
            "phi-" | "phi_minus" => NamedState::PhiMinus,
            "psi+" | "psi_plus" => NamedState::PsiPlus,
            "psi-" | "psi_minus" => NamedState::PsiMinus,
            "00" => NamedState::Basis(0),
            "01" => NamedState::Basis(1),
            "10" => NamedState::Basis(2),
            "11" => NamedState::Basis(3),
            "maximally-mixed" | "mixed" => NamedState::MaximallyMixed,
            _ => return Err(Error::UnknownState(s.to_string())),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureTerm {
    pub weight: f64,
    pub state: StateSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Matrix(Vec<Vec<[f64; 2]>>),
    Mixture { mixture: Vec<MixtureTerm> },
}

impl StateSpec {
    pub fn named(name: &str) -> Self {
        StateSpec::Named(name.to_string())
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        match self {
            StateSpec::Named(name) => Ok(name.parse::<NamedState>()?.density_matrix()),
            StateSpec::Matrix(rows) => {
                let dim = rows.len();
                if rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidDensityMatrix("matrix must be square".into()));
                }
                let entries: Vec<C64> = rows
                    .iter()
                    .flat_map(|r| r.iter().map(|&[re, im]| C64::new(re, im)))
                    .collect();
                DensityMatrix::new(Operator::from_row_major(dim, &entries)?, SpaceLabel::System)
            }
            StateSpec::Mixture { mixture } => {
                let parts = mixture
                    .iter()
                    .map(|t| Ok((t.weight, t.state.density_matrix()?)))
                    .collect::<Result<Vec<_>>>()?;
                DensityMatrix::mixture(&parts)
            }
        }
    }
}
