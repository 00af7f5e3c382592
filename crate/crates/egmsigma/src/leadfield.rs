//! Inverse-distance forward model from cell signals to electrode-array
//! electrograms.
//!
//! Every electrode is a point sensor at height `z0` above the tissue plane;
//! its instantaneous gain from a cell falls off as one over the straight-line
//! distance. Electrograms are weighted sums of all cell traces.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::simulation::{CellSignals, TissueModel};

/// Electrode-array geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeArray {
    /// Electrode (x, y) in mm, same frame as the tissue cells.
    pub positions: Vec<(f64, f64)>,
    /// Height above the tissue plane, mm; must stay positive.
    pub height: f64,
    /// Common electrode gain.
    pub gain: f64,
    /// (rows, cols) when the electrodes form a rectangular grid in
    /// row-major order.
    pub layout: Option<(usize, usize)>,
}

impl ElectrodeArray {
    /// Rectangular grid of `rows x cols` electrodes at `pitch` mm spacing,
    /// centered on `(cx, cy)`.
    pub fn grid(rows: usize, cols: usize, pitch: f64, cx: f64, cy: f64, z0: f64) -> Self {
        let mut positions = Vec::with_capacity(rows * cols);
        let x0 = cx - (cols as f64 - 1.0) * pitch / 2.0;
        let y0 = cy - (rows as f64 - 1.0) * pitch / 2.0;
        for r in 0..rows {
            for c in 0..cols {
                positions.push((x0 + c as f64 * pitch, y0 + r as f64 * pitch));
            }
        }
        ElectrodeArray {
            positions,
            height: z0,
            gain: 1.0,
            layout: Some((rows, cols)),
        }
    }

    /// 10x10 grid at 2 mm pitch, 1 mm above the tissue.
    pub fn preset_10x10(cx: f64, cy: f64) -> Self {
        ElectrodeArray::grid(10, 10, 2.0, cx, cy, 1.0)
    }

    /// Dense 32x32 grid at 0.5 mm pitch for map analyses.
    pub fn preset_32x32(cx: f64, cy: f64) -> Self {
        ElectrodeArray::grid(32, 32, 0.5, cx, cy, 1.0)
    }

    /// Clinical-shape 8x24 grid at 2 mm pitch.
    pub fn preset_clinical_8x24(cx: f64, cy: f64) -> Self {
        ElectrodeArray::grid(8, 24, 2.0, cx, cy, 1.0)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::invalid("electrode array", "no electrodes"));
        }
        if !(self.height > 0.0) {
            return Err(Error::invalid(
                "electrode array",
                format!("height z0 must be positive, got {}", self.height),
            ));
        }
        if !self.gain.is_finite() {
            return Err(Error::invalid("electrode array", "gain must be finite"));
        }
        for (i, a) in self.positions.iter().enumerate() {
            for (j, b) in self.positions.iter().enumerate().skip(i + 1) {
                if a == b {
                    return Err(Error::invalid(
                        "electrode array",
                        format!("electrodes {i} and {j} share position {a:?}"),
                    ));
                }
            }
        }
        if let Some((r, c)) = self.layout {
            if r * c != self.positions.len() {
                return Err(Error::invalid(
                    "electrode array",
                    format!("layout {r}x{c} does not cover {} electrodes", self.positions.len()),
                ));
            }
        }
        Ok(())
    }
}

/// Multichannel sampled electrogram recording.
#[derive(Debug, Clone)]
pub struct EgmRecording {
    /// `M x T`, one row per electrode.
    pub samples: Mat,
    /// Samples per second.
    pub rate: f64,
    pub array: ElectrodeArray,
    /// Optional beat markers, ms.
    pub annotations: Vec<f64>,
}

impl EgmRecording {
    pub fn channels(&self) -> usize {
        self.samples.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.cols()
    }

    pub fn duration_ms(&self) -> f64 {
        self.n_samples() as f64 * 1000.0 / self.rate
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.rows() == 0 || self.samples.cols() == 0 {
            return Err(Error::invalid("recording", "needs at least 1x1 samples"));
        }
        if !(self.rate > 0.0) {
            return Err(Error::invalid("recording", "rate must be positive"));
        }
        if !self.samples.all_finite() {
            return Err(Error::invalid("recording", "samples must all be finite"));
        }
        if self.array.len() != self.samples.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} electrodes for {} channels",
                self.array.len(),
                self.samples.rows()
            )));
        }
        Ok(())
    }
}

#[inline]
fn weight(gain: f64, ex: f64, ey: f64, z0: f64, cx: f64, cy: f64) -> f64 {
    let dx = cx - ex;
    let dy = cy - ey;
    gain / (dx * dx + dy * dy + z0 * z0).sqrt()
}

/// Explicit `M x N_c` lead-field matrix.
pub fn lead_weights(array: &ElectrodeArray, tissue: &TissueModel) -> Result<Mat> {
    array.validate()?;
    let n = tissue.n_cells();
    let mut w = Mat::zeros(array.len(), n);
    for (m, &(ex, ey)) in array.positions.iter().enumerate() {
        let row = w.row_mut(m);
        for (c, v) in row.iter_mut().enumerate() {
            let (cx, cy) = tissue.cell_xy(c);
            *v = weight(array.gain, ex, ey, array.height, cx, cy);
        }
    }
    Ok(w)
}

/// Electrograms as the product of a lead-field matrix and a cell-signal field.
pub fn synthesize_egm(
    weights: &Mat,
    cells: &CellSignals,
    array: &ElectrodeArray,
) -> Result<EgmRecording> {
    if weights.cols() != cells.samples.rows() {
        return Err(Error::DimensionMismatch(format!(
            "weights {}x{} vs cell signals {}x{}",
            weights.rows(),
            weights.cols(),
            cells.samples.rows(),
            cells.samples.cols()
        )));
    }
    if weights.rows() != array.len() {
        return Err(Error::DimensionMismatch(format!(
            "weights {}x{} vs array of {} electrodes",
            weights.rows(),
            weights.cols(),
            array.len()
        )));
    }
    let samples = weights.mul(&cells.samples)?;
    Ok(EgmRecording {
        samples,
        rate: cells.rate,
        array: array.clone(),
        annotations: Vec::new(),
    })
}

/// Fused forward model: computes the same electrograms as
/// `synthesize_egm(lead_weights(...), synthesize_cell_signals(...))` while
/// streaming over cell blocks, so the full lead-field and cell-signal
/// matrices never exist in memory at once. Used by the pipelines at
/// full simulation scale.
pub fn synthesize_egm_streamed(
    array: &ElectrodeArray,
    tissue: &TissueModel,
    lat: &crate::simulation::LATField,
    templates: &[crate::simulation::APTemplate],
    amplitudes: &[f64],
    duration_ms: f64,
) -> Result<EgmRecording> {
    array.validate()?;
    tissue.validate(templates.len())?;
    let n = tissue.n_cells();
    let m = array.len();
    if templates.is_empty() {
        return Err(Error::invalid("template bank", "no templates supplied"));
    }
    let rate = templates[0].rate;
    let n_samples = (duration_ms * rate / 1000.0).round() as usize;
    let mut samples = Mat::zeros(m, n_samples);

    const BLOCK: usize = 1024;
    let mut start = 0;
    while start < n {
        let stop = (start + BLOCK).min(n);
        let block = block_signals(tissue, lat, templates, amplitudes, duration_ms, start, stop)?;
        for (mi, &(ex, ey)) in array.positions.iter().enumerate() {
            let out_row = samples.row_mut(mi);
            for (bi, c) in (start..stop).enumerate() {
                let (cx, cy) = tissue.cell_xy(c);
                let w = weight(array.gain, ex, ey, array.height, cx, cy);
                let cell_row = block.row(bi);
                for (o, &s) in out_row.iter_mut().zip(cell_row.iter()) {
                    *o += w * s;
                }
            }
        }
        start = stop;
    }

    Ok(EgmRecording {
        samples,
        rate,
        array: array.clone(),
        annotations: Vec::new(),
    })
}

/// Cell traces for the cell index range `[start, stop)`, by synthesizing a
/// single-row tissue slice per cell through the shared delay machinery.
fn block_signals(
    tissue: &TissueModel,
    lat: &crate::simulation::LATField,
    templates: &[crate::simulation::APTemplate],
    amplitudes: &[f64],
    duration_ms: f64,
    start: usize,
    stop: usize,
) -> Result<Mat> {
    use crate::simulation::{synthesize_cell_signals, LATField, Stimulus, TissueModel as Tm};
    let count = stop - start;
    let sub = Tm {
        rows: 1,
        cols: count,
        spacing: tissue.spacing,
        conductivity: tissue.conductivity[start..stop].to_vec(),
        morphology_id: tissue.morphology_id[start..stop].to_vec(),
        stimuli: vec![Stimulus {
            cell: 0,
            onset_ms: 0.0,
        }],
    };
    let sub_lat = LATField {
        rows: 1,
        cols: count,
        tau: lat.tau[start..stop].to_vec(),
        source_mask: vec![false; count],
    };
    let cells = synthesize_cell_signals(
        &sub,
        &sub_lat,
        templates,
        &amplitudes[start..stop],
        duration_ms,
    )?;
    Ok(cells.samples)
}
