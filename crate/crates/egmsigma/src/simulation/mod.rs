//! Tissue geometry, conductivity maps, stimulus scenarios, activation-time
//! fields and per-cell action-potential signals.
//!
//! Wavefront propagation is computed with a fast-marching eikonal solver on
//! the 4-connected cell grid; each cell then emits a parametric AP template
//! delayed by its activation time. This gives exact control over the
//! (delay, waveform) pairs the downstream spectral analysis consumes.

mod eikonal;
mod synth;
mod template;

pub use eikonal::{solve_lat, LatOutcome};
pub use synth::{synthesize_cell_signals, CellSignals};
pub use template::{generate_ap_template, ApParams, APTemplate};

use crate::error::{Error, Result};

/// A stimulus: a cell activated externally at a given onset time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stimulus {
    pub cell: usize,
    pub onset_ms: f64,
}

/// 2D cell grid with spacing, per-cell conductivity, per-cell morphology
/// assignment, and stimulus sites.
#[derive(Debug, Clone)]
pub struct TissueModel {
    pub rows: usize,
    pub cols: usize,
    /// Distance between neighboring cells, mm.
    pub spacing: f64,
    /// Row-major nonnegative conductivity per cell.
    pub conductivity: Vec<f64>,
    /// Row-major index into the template bank per cell.
    pub morphology_id: Vec<usize>,
    pub stimuli: Vec<Stimulus>,
}

impl TissueModel {
    /// Uniform tissue: conductivity 1 everywhere, morphology 0 everywhere.
    pub fn uniform(rows: usize, cols: usize, spacing: f64) -> Self {
        TissueModel {
            rows,
            cols,
            spacing,
            conductivity: vec![1.0; rows * cols],
            morphology_id: vec![0; rows * cols],
            stimuli: Vec::new(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn cell_index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Cell center in mm: x along columns, y along rows.
    #[inline]
    pub fn cell_xy(&self, cell: usize) -> (f64, f64) {
        let r = cell / self.cols;
        let c = cell % self.cols;
        (c as f64 * self.spacing, r as f64 * self.spacing)
    }

    /// Check every structural invariant against a template bank size.
    pub fn validate(&self, bank_len: usize) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("tissue", "grid must be non-empty"));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::invalid(
                "tissue",
                format!("spacing must be positive, got {}", self.spacing),
            ));
        }
        let n = self.n_cells();
        if self.conductivity.len() != n || self.morphology_id.len() != n {
            return Err(Error::invalid(
                "tissue",
                format!(
                    "field lengths (conductivity {}, morphology {}) must equal rows*cols = {}",
                    self.conductivity.len(),
                    self.morphology_id.len(),
                    n
                ),
            ));
        }
        if self.conductivity.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::invalid(
                "tissue",
                "conductivity values must be finite and >= 0",
            ));
        }
        if self.stimuli.is_empty() {
            return Err(Error::invalid("tissue", "at least one stimulus required"));
        }
        for s in &self.stimuli {
            if s.cell >= n {
                return Err(Error::invalid(
                    "tissue",
                    format!("stimulus cell {} out of range ({} cells)", s.cell, n),
                ));
            }
            if !s.onset_ms.is_finite() || s.onset_ms < 0.0 {
                return Err(Error::invalid(
                    "tissue",
                    format!("stimulus onset must be finite and >= 0, got {}", s.onset_ms),
                ));
            }
        }
        if let Some(&bad) = self.morphology_id.iter().find(|&&id| id >= bank_len) {
            return Err(Error::invalid(
                "tissue",
                format!("morphology id {} exceeds template bank of {}", bad, bank_len),
            ));
        }
        Ok(())
    }
}

/// Per-cell first-arrival activation times.
///
/// Unreachable cells (isolated by zero conductivity) carry `f64::INFINITY`.
#[derive(Debug, Clone)]
pub struct LATField {
    pub rows: usize,
    pub cols: usize,
    /// Activation delay per cell, ms; `INFINITY` where unreachable.
    pub tau: Vec<f64>,
    pub source_mask: Vec<bool>,
}

impl LATField {
    pub fn unreachable_count(&self) -> usize {
        self.tau.iter().filter(|t| !t.is_finite()).count()
    }

    pub fn max_finite(&self) -> Option<f64> {
        self.tau
            .iter()
            .copied()
            .filter(|t| t.is_finite())
            .fold(None, |acc, t| Some(acc.map_or(t, |a: f64| a.max(t))))
    }
}
