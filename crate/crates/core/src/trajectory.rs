// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Named time series on a shared grid, with CSV and JSON emission.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: Vec<Series>,
}

/// `n_steps + 1` equally spaced points on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n_steps: usize) -> Vec<f64> {
    let dt = t_end / n_steps.max(1) as f64;
    (0..=n_steps).map(|k| k as f64 * dt).collect()
}

impl Trajectory {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidTimeGrid("empty".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTimeGrid("non-finite time".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTimeGrid(format!(
                "times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self {
            times,
            series: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        self.push_series(Series {
            name: name.into(),
            values,
            std: None,
        })
    }

    pub fn push_with_std(&mut self, name: impl Into<String>, values: Vec<f64>, std: Vec<f64>) -> Result<()> {
        self.push_series(Series {
            name: name.into(),
            values,
            std: Some(std),
        })
    }

    fn push_series(&mut self, s: Series) -> Result<()> {
        let n = self.times.len();
        if s.values.len() != n || s.std.as_ref().is_some_and(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "trajectory series length",
                expected: n,
                found: s.values.len(),
            });
        }
        self.series.push(s);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    pub fn std_of(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|s| s.name == name)
            .and_then(|s| s.std.as_deref())
    }

    /// `max_t |self[name](t) - other[name](t)|`; `None` if either lacks the series.
    pub fn max_abs_diff(&self, other: &Trajectory, name: &str) -> Option<f64> {
        let a = self.get(name)?;
        let b = other.get(name)?;
        Some(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// Header `t,<name>[,<name>_std]...`, one row per time, LF endings.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["t".to_string()];
        for s in &self.series {
            header.push(s.name.clone());
            if s.std.is_some() {
                header.push(format!("{}_std", s.name));
            }
        }
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for s in &self.series {
                row.push(s.values[k].to_string());
                if let Some(std) = &s.std {
                    row.push(std[k].to_string());
                }
            }
            w.write_record(&row)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids_and_lengths() {
        assert!(Trajectory::new(vec![0.0, 0.0]).is_err());
        assert!(Trajectory::new(vec![]).is_err());
        let mut t = Trajectory::new(vec![0.0, 1.0]).unwrap();
        assert!(t.push("x", vec![1.0]).is_err());
        t.push("x", vec![1.0, 2.0]).unwrap();
        assert_eq!(t.get("x"), Some(&[1.0, 2.0][..]));
    }

    #[test]
    fn csv_layout() {
        let mut t = Trajectory::new(vec![0.0, 0.5]).unwrap();
        t.push_with_std("mean", vec![1.0, -2.5], vec![0.1, 0.2]).unwrap();
        assert_eq!(t.to_csv_string(), "t,mean,mean_std\n0,1,0.1\n0.5,-2.5,0.2\n");
    }
}
