//! Two-axis sweep results and their CSV / JSON emission.

use std::io::Write;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub name: String,
    /// Normalized values as written to the CSV.
    pub values: Vec<f64>,
    /// Matching SI values (rad/s, √(1/s), W, ...).
    pub raw: Vec<f64>,
    pub raw_unit: String,
}

impl SweepAxis {
    pub fn new(name: &str, values: Vec<f64>, raw: Vec<f64>, raw_unit: &str) -> Self {
        assert_eq!(values.len(), raw.len());
        Self {
            name: name.to_string(),
            values,
            raw,
            raw_unit: raw_unit.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", content = "cause", rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub gain_db: f64,
    pub idler_gain_db: f64,
    pub status: CellStatus,
    pub omega_p: f64,
    pub omega_s: f64,
    pub signal_snap_error: f64,
    pub peak_junction_current: f64,
}

impl SweepCell {
    pub fn failed(cause: String, omega_p: f64, omega_s: f64) -> Self {
        Self {
            gain_db: f64::NAN,
            idler_gain_db: f64::NAN,
            status: CellStatus::Failed(cause),
            omega_p,
            omega_s,
            signal_snap_error: 0.0,
            peak_junction_current: f64::NAN,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

/// Row-major grid: `cells[i * axis2.len() + j]` belongs to (axis1[i], axis2[j]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub cells: Vec<SweepCell>,
    pub metadata: serde_json::Value,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.axis2.len() + j]
    }

    pub fn row(&self, i: usize) -> &[SweepCell] {
        let n = self.axis2.len();
        &self.cells[i * n..(i + 1) * n]
    }

    pub fn failed_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }

    /// Maximum gain of row `i` and its axis-2 index, ignoring failed cells.
    pub fn row_peak(&self, i: usize) -> Option<(usize, f64)> {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_ok())
            .fold(None, |best: Option<(usize, f64)>, (j, c)| match best {
                Some((_, g)) if g >= c.gain_db => best,
                _ => Some((j, c.gain_db)),
            })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "axis1,axis2,gain_db,idler_gain_db,status")?;
        for (i, a) in self.axis1.values.iter().enumerate() {
            for (j, b) in self.axis2.values.iter().enumerate() {
                let c = self.cell(i, j);
                let status = match &c.status {
                    CellStatus::Ok => "ok".to_string(),
                    CellStatus::Failed(e) => format!("failed: {}", e.replace([',', '\n'], ";")),
                };
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt_f64(*a),
                    fmt_f64(*b),
                    fmt_f64(c.gain_db),
                    fmt_f64(c.idler_gain_db),
                    status
                )?;
            }
        }
        Ok(())
    }

    /// Metadata sidecar: axes with raw SI values, per-cell raw frequencies
    /// and snap errors, plus the caller-supplied metadata.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "axis1": self.axis1,
            "axis2": self.axis2,
            "cells": self.cells,
            "metadata": self.metadata,
        })
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
