// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! `report.json`: computed-vs-predicted checks with their tolerances.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// How `value` is compared with `reference` and `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    /// `|value - reference| ≤ tolerance`.
    AbsDiff,
    /// `|value - reference| ≤ tolerance · |reference|`.
    RelDiff,
    /// `value ≤ tolerance`; `reference` is the ideal value.
    AtMost,
    /// `value ≥ tolerance`; `reference` is the ideal value.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub criterion: String,
    pub quantity: String,
    /// Non-finite values serialize as `null` and never pass.
    pub value: Option<f64>,
    pub reference: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn new(
        criterion: impl Into<String>,
        quantity: impl Into<String>,
        value: f64,
        reference: f64,
        tolerance: f64,
        relation: Relation,
    ) -> Self {
        let passed = value.is_finite()
            && match relation {
                Relation::AbsDiff => (value - reference).abs() <= tolerance,
                Relation::RelDiff => (value - reference).abs() <= tolerance * reference.abs(),
                Relation::AtMost => value <= tolerance,
                Relation::AtLeast => value >= tolerance,
            };
        Self {
            criterion: criterion.into(),
            quantity: quantity.into(),
            value: value.is_finite().then_some(value),
            reference,
            tolerance,
            relation,
            passed,
        }
    }

    pub fn abs_diff(c: &str, q: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(c, q, value, reference, tolerance, Relation::AbsDiff)
    }

    pub fn rel_diff(c: &str, q: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(c, q, value, reference, tolerance, Relation::RelDiff)
    }

    pub fn at_most(c: &str, q: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(c, q, value, reference, tolerance, Relation::AtMost)
    }

    pub fn at_least(c: &str, q: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(c, q, value, reference, tolerance, Relation::AtLeast)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub tool: String,
    pub tool_version: String,
    pub subcommand: String,
    /// Decimal, so that 64-bit seeds survive JSON readers using doubles.
    pub seed: String,
    /// SHA-256 of the configuration bytes.
    pub config_hash: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
}

pub const TOOL_NAME: &str = "wpsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Report {
    pub fn new(subcommand: &str, seed: u64, config_bytes: &[u8], checks: Vec<Check>, summary: serde_json::Value) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            subcommand: subcommand.into(),
            seed: seed.to_string(),
            config_hash: config_hash(config_bytes),
            passed: checks.iter().all(|c| c.passed),
            checks,
            summary,
        }
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }
}
