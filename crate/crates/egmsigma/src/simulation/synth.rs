//! Per-cell signal synthesis: each cell emits its morphology template,
//! gain-scaled and delayed by its activation time.
//!
//! Delays land on arbitrary fractions of a sample, so the delayed waveform is
//! produced by a 16-tap Hann-windowed sinc interpolator; whole-sample delays
//! take an exact index-shift path. The gain scales the deviation from rest,
//! so a normalized template yields a trace with l2 norm equal to its gain.

use super::{APTemplate, LATField, TissueModel};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Half-width of the windowed-sinc interpolation kernel, samples.
const SINC_HALF_WIDTH: usize = 8;

/// Per-cell signal field.
#[derive(Debug, Clone)]
pub struct CellSignals {
    /// `n_cells x n_samples`, row-major, one row per cell.
    pub samples: Mat,
    pub rate: f64,
    /// Resting level each silent cell sits at.
    pub resting_potential: f64,
}

/// Synthesize every cell's trace over `duration_ms`.
///
/// Unreachable cells emit a constant resting potential. The duration must
/// cover the latest-activating cell's full waveform.
pub fn synthesize_cell_signals(
    tissue: &TissueModel,
    lat: &LATField,
    templates: &[APTemplate],
    amplitudes: &[f64],
    duration_ms: f64,
) -> Result<CellSignals> {
    tissue.validate(templates.len())?;
    let n = tissue.n_cells();
    if lat.rows != tissue.rows || lat.cols != tissue.cols {
        return Err(Error::DimensionMismatch(format!(
            "LAT field {}x{} does not match tissue {}x{}",
            lat.rows, lat.cols, tissue.rows, tissue.cols
        )));
    }
    if amplitudes.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} amplitudes for {} cells",
            amplitudes.len(),
            n
        )));
    }
    if let Some((i, &a)) = amplitudes
        .iter()
        .enumerate()
        .find(|(_, &a)| !(a > 0.0) || !a.is_finite())
    {
        return Err(Error::invalid(
            "amplitudes",
            format!("cell {i} has non-positive gain {a}"),
        ));
    }
    if templates.is_empty() {
        return Err(Error::invalid("template bank", "no templates supplied"));
    }
    let rate = templates[0].rate;
    if templates.iter().any(|t| t.rate != rate) {
        return Err(Error::invalid(
            "template bank",
            "all templates must share one sample rate",
        ));
    }
    let rest = templates[0].resting_potential;
    if templates.iter().any(|t| t.resting_potential != rest) {
        return Err(Error::invalid(
            "template bank",
            "all templates must share one resting potential",
        ));
    }

    // Latest cell must still fit its whole waveform.
    let mut worst_cell = None;
    let mut worst_end = f64::NEG_INFINITY;
    for c in 0..n {
        let tau = lat.tau[c];
        if !tau.is_finite() {
            continue;
        }
        let end = tau + templates[tissue.morphology_id[c]].duration_ms();
        if end > worst_end {
            worst_end = end;
            worst_cell = Some(c);
        }
    }
    if let Some(cell) = worst_cell {
        if duration_ms < worst_end {
            return Err(Error::InvalidArgument(format!(
                "duration {duration_ms} ms cannot hold cell {cell} (activation {} ms + waveform {} ms)",
                lat.tau[cell],
                templates[tissue.morphology_id[cell]].duration_ms()
            )));
        }
    }

    let n_samples = (duration_ms * rate / 1000.0).round() as usize;
    let mut out = Mat::zeros(n, n_samples);
    let mut dev_bank: Vec<Vec<f64>> = Vec::with_capacity(templates.len());
    for t in templates {
        dev_bank.push(t.samples.iter().map(|s| s - rest).collect());
    }

    for c in 0..n {
        let row = out.row_mut(c);
        let tau = lat.tau[c];
        if !tau.is_finite() {
            for v in row.iter_mut() {
                *v = rest;
            }
            continue;
        }
        let dev = &dev_bank[tissue.morphology_id[c]];
        let gain = amplitudes[c];
        let delay_samples = tau * rate / 1000.0;
        delayed_into(dev, delay_samples, gain, rest, row);
    }

    Ok(CellSignals {
        samples: out,
        rate,
        resting_potential: rest,
    })
}

/// Write `rest + gain * dev(t - delay)` into `row`.
fn delayed_into(dev: &[f64], delay_samples: f64, gain: f64, rest: f64, row: &mut [f64]) {
    let rounded = delay_samples.round();
    if (delay_samples - rounded).abs() < 1e-9 {
        // Exact whole-sample shift.
        let q = rounded as i64;
        for (n, v) in row.iter_mut().enumerate() {
            let j = n as i64 - q;
            let d = if j >= 0 && (j as usize) < dev.len() {
                dev[j as usize]
            } else {
                0.0
            };
            *v = rest + gain * d;
        }
        return;
    }

    let q = delay_samples.floor() as i64;
    let frac = delay_samples - delay_samples.floor();
    // taps[i] = K(m - frac) for m = i - (half-1), i in 0..2*half.
    let half = SINC_HALF_WIDTH as i64;
    let mut taps = [0.0f64; 2 * SINC_HALF_WIDTH];
    for (i, tap) in taps.iter_mut().enumerate() {
        let m = i as i64 - (half - 1);
        *tap = sinc_hann(m as f64 - frac);
    }

    for (n, v) in row.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, tap) in taps.iter().enumerate() {
            let m = i as i64 - (half - 1);
            let j = n as i64 - q - m;
            if j >= 0 && (j as usize) < dev.len() {
                acc += tap * dev[j as usize];
            }
        }
        *v = rest + gain * acc;
    }
}

/// Hann-windowed sinc kernel, support |u| <= SINC_HALF_WIDTH.
fn sinc_hann(u: f64) -> f64 {
    let half = SINC_HALF_WIDTH as f64;
    if u.abs() >= half {
        return 0.0;
    }
    let sinc = if u == 0.0 {
        1.0
    } else {
        let x = std::f64::consts::PI * u;
        x.sin() / x
    };
    let w = 0.5 * (1.0 + (std::f64::consts::PI * u / half).cos());
    sinc * w
}
