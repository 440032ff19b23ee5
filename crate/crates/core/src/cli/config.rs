// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration files (JSON, camelCase keys, unknown keys
//! rejected) and their conversion to module configs.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cavity::{CavityConfig, EnvInit};
use crate::error::{Error, Result};
use crate::gas::GasConfig;
use crate::radiation::{sample_dipole, DipoleSpec, RadiationConfig, VectorGrid};
use crate::states::StateSpec;
use crate::trajectory::uniform_times;
use crate::witness::{eigen_branches, witness_expectation, WitnessChoice};

use super::CliError;

/// Parses `text`, reporting the offending field path on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> std::result::Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })
}

fn check_steps(n_steps: usize) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::param("nSteps", "must be at least 1"));
    }
    Ok(())
}

fn check_end(name: &'static str, t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param(name, "must be positive"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WitnessRunConfig {
    #[serde(rename = "$schema", default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub state: StateSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GasRunConfig {
    #[serde(rename = "$schema", default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub m: f64,
    pub beta: f64,
    pub alpha: f64,
    pub rho_s: StateSpec,
    pub witness: WitnessChoice,
    pub t_end: f64,
    pub n_steps: usize,
    pub samples: usize,
}

impl GasRunConfig {
    pub fn to_config(&self) -> Result<GasConfig> {
        check_end("tEnd", self.t_end)?;
        check_steps(self.n_steps)?;
        let rho = self.rho_s.density_matrix()?;
        let config = GasConfig {
            n: self.n,
            m: self.m,
            beta: self.beta,
            alpha: self.alpha,
            branches: eigen_branches(&self.witness.operator(), &rho)?,
            times: uniform_times(self.t_end, self.n_steps),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CavityRunConfig {
    #[serde(rename = "$schema", default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub epsilons: [f64; 4],
    pub omega: f64,
    pub gamma: f64,
    pub n_max: usize,
    pub rho_s0: StateSpec,
    #[serde(default)]
    pub env_init: EnvInit,
    pub t_max: f64,
    pub n_steps: usize,
}

impl CavityRunConfig {
    pub fn to_config(&self) -> Result<CavityConfig> {
        check_end("tMax", self.t_max)?;
        check_steps(self.n_steps)?;
        let config = CavityConfig {
            epsilons: self.epsilons,
            omega: self.omega,
            gamma: self.gamma,
            n_max: self.n_max,
            rho_s0: self.rho_s0.density_matrix()?,
            env_init: self.env_init,
            times: uniform_times(self.t_max, self.n_steps),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RadiationRunConfig {
    #[serde(rename = "$schema", default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(rename = "L")]
    pub box_size: f64,
    pub k_max: f64,
    pub grid_n: usize,
    pub epsilon0: f64,
    pub dipole: DipoleSpec,
    pub rho_s: StateSpec,
    pub witness: WitnessChoice,
    #[serde(rename = "T")]
    pub window: f64,
    pub n_steps: usize,
}

impl RadiationRunConfig {
    /// Resolves the dipole (file paths relative to `base_dir`) and `W₀`.
    pub fn to_config(&self, base_dir: &Path) -> std::result::Result<RadiationConfig, CliError> {
        if self.grid_n < 2 {
            return Err(Error::param("gridN", "must be at least 2").into());
        }
        let dipole = match &self.dipole {
            DipoleSpec::File { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|source| CliError::Io { path: full.clone(), source })?;
                let grid: VectorGrid = parse(&text)?;
                grid.validate()?;
                if grid.grid_n != self.grid_n || (grid.box_size - self.box_size).abs() > 1e-12 * self.box_size {
                    return Err(Error::GridMismatch(format!(
                        "dipole file has gridN = {}, L = {}; config has gridN = {}, L = {}",
                        grid.grid_n, grid.box_size, self.grid_n, self.box_size
                    ))
                    .into());
                }
                grid
            }
            spec => sample_dipole(spec, self.grid_n, self.box_size)?,
        };
        let w0 = witness_expectation(&self.witness.operator(), &self.rho_s.density_matrix()?)?;
        Ok(RadiationConfig {
            box_size: self.box_size,
            k_max: self.k_max,
            grid_n: self.grid_n,
            epsilon0: self.epsilon0,
            dipole,
            w0,
            window: self.window,
            n_steps: self.n_steps,
        })
    }
}
