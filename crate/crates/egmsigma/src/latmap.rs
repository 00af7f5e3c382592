//! Classical activation-time analysis: activation maps from cell signals or
//! electrograms, and conduction-block detection from adjacent-site delays.

use crate::error::{Error, Result};
use crate::simulation::CellSignals;
use crate::spectral::BeatWindow;

/// How activation times were estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatMethod {
    /// First upward crossing of a voltage threshold (cell signals).
    CellThreshold,
    /// Steepest negative slope of the electrogram.
    SteepestDescent,
}

/// Per-site activation times; `None` where no activation was detected.
#[derive(Debug, Clone)]
pub struct ActivationMap {
    pub lat_ms: Vec<Option<f64>>,
    pub method: LatMethod,
    /// Per-site deflection strength (steepest-descent maps only).
    pub deflection: Vec<f64>,
}

/// Flagged conduction-block edges between grid-adjacent channels.
#[derive(Debug, Clone)]
pub struct BlockSet {
    /// Unordered adjacent channel pairs, stored (low, high).
    pub edges: Vec<(usize, usize)>,
    pub threshold_ms: f64,
}

impl BlockSet {
    pub fn contains(&self, a: usize, b: usize) -> bool {
        let e = (a.min(b), a.max(b));
        self.edges.contains(&e)
    }
}

/// Default activation threshold for cell-level maps, mV.
pub const CELL_THRESHOLD_MV: f64 = -40.0;

/// Default clinical conduction-block threshold, ms.
pub const BLOCK_THRESHOLD_MS: f64 = 12.0;

/// Fraction of a channel's peak-to-peak below which its strongest
/// deflection is considered noise and no LAT is reported.
pub const DEFLECTION_FLOOR: f64 = 0.05;

/// Time span over which the deflection strength (largest voltage drop)
/// is measured, ms.
pub const DEFLECTION_WINDOW_MS: f64 = 10.0;

/// First upward threshold crossing per cell, linearly interpolated.
pub fn cell_activation_map(cells: &CellSignals, threshold: f64) -> ActivationMap {
    let n = cells.samples.rows();
    let dt_ms = 1000.0 / cells.rate;
    let mut lat = Vec::with_capacity(n);
    for c in 0..n {
        let row = cells.samples.row(c);
        let mut found = None;
        for i in 0..row.len().saturating_sub(1) {
            if row[i] <= threshold && row[i + 1] > threshold {
                let frac = (threshold - row[i]) / (row[i + 1] - row[i]);
                found = Some((i as f64 + frac) * dt_ms);
                break;
            }
        }
        lat.push(found);
    }
    ActivationMap {
        lat_ms: lat,
        method: LatMethod::CellThreshold,
        deflection: vec![0.0; n],
    }
}

/// Steepest-negative-slope activation time per electrogram channel, with
/// parabolic sub-sample refinement. Channels whose strongest downstroke
/// falls below the deflection floor report no LAT.
pub fn egm_activation_map(beat: &BeatWindow, layout: (usize, usize)) -> Result<ActivationMap> {
    let (rows, cols) = layout;
    if rows * cols != beat.samples.rows() {
        return Err(Error::DimensionMismatch(format!(
            "layout {rows}x{cols} does not cover {} channels",
            beat.samples.rows()
        )));
    }
    let dt_ms = 1000.0 / beat.rate;
    let m = beat.samples.rows();
    let drop_win = ((DEFLECTION_WINDOW_MS / 1000.0 * beat.rate).round() as usize).max(1);
    let mut lat = Vec::with_capacity(m);
    let mut deflection = Vec::with_capacity(m);

    for ch in 0..m {
        let x = beat.samples.row(ch);
        let ptp = x.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
            - x.iter().fold(f64::INFINITY, |a, &v| a.min(v));
        if x.len() < 3 || !(ptp > 0.0) {
            lat.push(None);
            deflection.push(0.0);
            continue;
        }
        // Discrete first difference; g[i] sits at time (i + 0.5) * dt.
        let mut best_i = 0usize;
        let mut best = f64::INFINITY;
        for i in 0..x.len() - 1 {
            let g = x[i + 1] - x[i];
            if g < best {
                best = g;
                best_i = i;
            }
        }
        // Deflection strength: largest voltage drop across the short window.
        let mut drop = 0.0f64;
        for i in 0..x.len() {
            let hi = (i + drop_win + 1).min(x.len());
            for j in i + 1..hi {
                drop = drop.max(x[i] - x[j]);
            }
        }
        deflection.push(drop);
        if drop < DEFLECTION_FLOOR * ptp {
            lat.push(None);
            continue;
        }
        // Parabolic refinement on the difference signal.
        let mut t = best_i as f64 + 0.5;
        if best_i > 0 && best_i + 1 < x.len() - 1 {
            let gm = x[best_i] - x[best_i - 1];
            let g0 = best;
            let gp = x[best_i + 2] - x[best_i + 1];
            let denom = gm - 2.0 * g0 + gp;
            if denom.abs() > 1e-300 {
                let delta = 0.5 * (gm - gp) / denom;
                if delta.abs() <= 1.0 {
                    t += delta;
                }
            }
        }
        lat.push(Some(t * dt_ms));
    }
    Ok(ActivationMap {
        lat_ms: lat,
        method: LatMethod::SteepestDescent,
        deflection,
    })
}

/// Flag every 4-adjacent channel pair whose LAT difference reaches the
/// threshold. Pairs touching a site without a LAT are skipped.
pub fn detect_blocks(
    map: &ActivationMap,
    layout: (usize, usize),
    threshold_ms: f64,
) -> Result<BlockSet> {
    let (rows, cols) = layout;
    if rows * cols != map.lat_ms.len() {
        return Err(Error::DimensionMismatch(format!(
            "layout {rows}x{cols} does not cover {} sites",
            map.lat_ms.len()
        )));
    }
    if !(threshold_ms >= 0.0) {
        return Err(Error::InvalidArgument("threshold must be >= 0".into()));
    }
    let mut edges = Vec::new();
    let idx = |r: usize, c: usize| r * cols + c;
    for r in 0..rows {
        for c in 0..cols {
            let here = idx(r, c);
            for (nr, nc) in [(r + 1, c), (r, c + 1)] {
                if nr >= rows || nc >= cols {
                    continue;
                }
                let there = idx(nr, nc);
                if let (Some(a), Some(b)) = (map.lat_ms[here], map.lat_ms[there]) {
                    if (a - b).abs() >= threshold_ms {
                        edges.push((here.min(there), here.max(there)));
                    }
                }
            }
        }
    }
    Ok(BlockSet {
        edges,
        threshold_ms,
    })
}
