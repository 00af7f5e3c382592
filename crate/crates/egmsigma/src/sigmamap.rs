//! Sliding-window normalized-sigma-2 maps over rectangular electrode arrays.
//!
//! Each interior pixel is the normalized second singular value of the
//! magnitude matrix built from the 3x3 electrode subset centered there.
//! Flat single-morphology activity keeps pixels near zero; fractionation,
//! block, and morphology mixtures raise them.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::spectral::{magnitude_matrix, BeatWindow, SpectralMatrix};
use crate::svdcore::{profile_of_mat, SingularProfile};

/// Window half-extent: maps use 3x3 subsets unless asked otherwise.
pub const DEFAULT_WINDOW: usize = 3;

/// Display clamp for rendered maps; ratios above this saturate.
pub const RENDER_CLAMP: f64 = 0.25;

/// Map of normalized sigma-2 values over the interior of the array.
#[derive(Debug, Clone)]
pub struct Sigma2Map {
    /// `(rows - win + 1) x (cols - win + 1)` values in [0, 1].
    pub values: Mat,
    /// Square window side length (3 by default).
    pub window: usize,
    /// Array layout the map was computed over.
    pub layout: (usize, usize),
    /// Beat index the map belongs to.
    pub source_beat_index: usize,
}

impl Sigma2Map {
    pub fn max_value(&self) -> f64 {
        self.values.data().iter().fold(0.0f64, |a, &v| a.max(v))
    }

    /// ASCII portable graymap with the display clamp applied.
    pub fn to_pgm(&self) -> String {
        let rows = self.values.rows();
        let cols = self.values.cols();
        let mut out = String::new();
        out.push_str("P2\n");
        out.push_str(&format!("{cols} {rows}\n255\n"));
        for r in 0..rows {
            let line: Vec<String> = (0..cols)
                .map(|c| {
                    let v = (self.values.get(r, c) / RENDER_CLAMP).min(1.0);
                    format!("{}", (255.0 * v).round() as u32)
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// CSV, row-major, with a column header.
    pub fn to_csv(&self) -> String {
        let cols = self.values.cols();
        let mut out = String::new();
        let header: Vec<String> = (0..cols).map(|c| format!("c{c}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.values.rows() {
            let line: Vec<String> = self.values.row(r).iter().map(|v| format!("{v:.9}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Build the sigma-2 map for a beat over a rectangular channel layout
/// (row-major order), with the default 3x3 window.
pub fn sigma2_map(beat: &BeatWindow, layout: (usize, usize)) -> Result<Sigma2Map> {
    sigma2_map_windowed(beat, layout, DEFAULT_WINDOW)
}

/// Sigma-2 map with a custom square window size (>= 2).
pub fn sigma2_map_windowed(
    beat: &BeatWindow,
    layout: (usize, usize),
    window: usize,
) -> Result<Sigma2Map> {
    let (rows, cols) = layout;
    if window < 2 {
        return Err(Error::InvalidArgument(format!(
            "window must be at least 2, got {window}"
        )));
    }
    if rows < window || cols < window {
        return Err(Error::InvalidArgument(format!(
            "layout {rows}x{cols} too small for a {window}x{window} window"
        )));
    }
    if rows * cols != beat.samples.rows() {
        return Err(Error::DimensionMismatch(format!(
            "layout {rows}x{cols} does not cover {} channels",
            beat.samples.rows()
        )));
    }

    // Every channel's magnitude row is computed once; each pixel then reads
    // only the rows of its own subset, so pixel values are identical to
    // running the transform per subset.
    let full = magnitude_matrix(beat)?;
    let out_rows = rows - window + 1;
    let out_cols = cols - window + 1;
    let mut values = Mat::zeros(out_rows, out_cols);

    let mut sub = Mat::zeros(window * window, full.values.cols());
    for r in 0..out_rows {
        for c in 0..out_cols {
            let mut i = 0;
            for wr in 0..window {
                for wc in 0..window {
                    let ch = (r + wr) * cols + (c + wc);
                    sub.row_mut(i).copy_from_slice(full.values.row(ch));
                    i += 1;
                }
            }
            let profile = profile_of_mat(&sub)?;
            values.set(r, c, profile.sigma2_norm());
        }
    }

    Ok(Sigma2Map {
        values,
        window,
        layout,
        source_beat_index: beat.source_beat_index,
    })
}

/// Singular profile of the magnitude matrix restricted to a channel subset.
pub fn subset_profile(beat: &BeatWindow, channel_subset: &[usize]) -> Result<SingularProfile> {
    if channel_subset.is_empty() {
        return Err(Error::InvalidArgument("empty channel subset".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for &ch in channel_subset {
        if ch >= beat.samples.rows() {
            return Err(Error::InvalidArgument(format!(
                "channel {ch} out of range ({} channels)",
                beat.samples.rows()
            )));
        }
        if !seen.insert(ch) {
            return Err(Error::InvalidArgument(format!(
                "channel {ch} listed twice in subset"
            )));
        }
    }
    let full = magnitude_matrix(beat)?;
    let sub = full.select_channels(channel_subset)?;
    svd_profile_of(&sub)
}

fn svd_profile_of(sm: &SpectralMatrix) -> Result<SingularProfile> {
    profile_of_mat(&sm.values)
}
