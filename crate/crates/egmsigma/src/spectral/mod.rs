//! Clinical-style preprocessing and construction of the phase-discarded
//! frequency-magnitude matrix.
//!
//! A beat is a fixed window referenced to the R peak; each channel of the
//! window is Fourier-transformed and only the magnitudes are kept. Dropping
//! the phase removes the activation times from the matrix while leaving the
//! per-channel waveform morphology, which is what the downstream
//! singular-value analysis measures.

mod filter;
mod rpeaks;

pub use filter::{design_bandpass, BandpassDesign, Biquad};
pub use rpeaks::{detect_r_peaks, PeakDetection};

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};
use crate::leadfield::EgmRecording;
use crate::mat::Mat;

/// Beat window definition: (start, end) in ms before the R peak.
/// The default covers atrial activity between 320 ms and 60 ms pre-R.
pub const DEFAULT_WINDOW_MS: (f64, f64) = (320.0, 60.0);

/// One segmented beat: an `M x W` excerpt of the recording.
#[derive(Debug, Clone)]
pub struct BeatWindow {
    pub samples: Mat,
    /// (start_before_R, end_before_R) in ms.
    pub window_def: (f64, f64),
    pub source_beat_index: usize,
    pub rate: f64,
}

impl BeatWindow {
    /// Window length in samples implied by the definition; construction
    /// guarantees the sample matrix matches it exactly.
    pub fn window_len(&self) -> usize {
        self.samples.cols()
    }

    /// Wrap a whole recording as a single beat window (used for simulated
    /// data that has no R peaks). Trims one trailing sample if needed to
    /// keep the window length even.
    pub fn whole_recording(rec: &EgmRecording) -> Result<BeatWindow> {
        rec.validate()?;
        let mut w = rec.n_samples();
        if w % 2 == 1 {
            w -= 1;
        }
        if w == 0 {
            return Err(Error::invalid("beat window", "recording too short"));
        }
        let mut samples = Mat::zeros(rec.channels(), w);
        for m in 0..rec.channels() {
            samples
                .row_mut(m)
                .copy_from_slice(&rec.samples.row(m)[..w]);
        }
        Ok(BeatWindow {
            samples,
            window_def: (w as f64 * 1000.0 / rec.rate, 0.0),
            source_beat_index: 0,
            rate: rec.rate,
        })
    }
}

/// Magnitude matrix of one beat, with frequency-bin metadata.
#[derive(Debug, Clone)]
pub struct SpectralMatrix {
    /// `M x N` nonnegative magnitudes.
    pub values: Mat,
    /// Frequency of each retained bin, Hz.
    pub bin_frequencies: Vec<f64>,
    /// Source channel index of each row.
    pub channels: Vec<usize>,
}

impl SpectralMatrix {
    /// Restrict to a subset of rows (channels), keeping bin metadata.
    pub fn select_channels(&self, subset: &[usize]) -> Result<SpectralMatrix> {
        let values = self.values.select_rows(subset)?;
        let channels = subset.iter().map(|&i| self.channels[i]).collect();
        Ok(SpectralMatrix {
            values,
            bin_frequencies: self.bin_frequencies.clone(),
            channels,
        })
    }
}

/// Zero-phase Butterworth band-pass over every channel of a recording.
pub fn bandpass(rec: &EgmRecording, lo_hz: f64, hi_hz: f64, order: usize) -> Result<EgmRecording> {
    rec.validate()?;
    if hi_hz >= rec.rate / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "upper band edge {hi_hz} Hz must stay below Nyquist ({} Hz)",
            rec.rate / 2.0
        )));
    }
    let design = design_bandpass(lo_hz, hi_hz, order, rec.rate)?;
    let mut out = rec.clone();
    for m in 0..rec.channels() {
        let y = design.filtfilt(rec.samples.row(m));
        out.samples.row_mut(m).copy_from_slice(&y);
    }
    Ok(out)
}

/// Outcome of beat segmentation: usable windows plus a report of skipped peaks.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub beats: Vec<BeatWindow>,
    /// (peak time ms, reason) for every skipped R peak.
    pub skipped: Vec<(f64, String)>,
}

/// Cut one fixed window per R peak; windows that would overrun the recording
/// are skipped and reported, not fatal.
pub fn segment_beats(
    rec: &EgmRecording,
    r_peaks_ms: &[f64],
    window_ms: (f64, f64),
) -> Result<Segmentation> {
    rec.validate()?;
    let (start_before, end_before) = window_ms;
    if !(start_before > end_before && end_before >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window must satisfy start > end >= 0 ms before R, got {start_before}:{end_before}"
        )));
    }
    let w_exact = (start_before - end_before) * rec.rate / 1000.0;
    let w = w_exact.round() as usize;
    if (w_exact - w as f64).abs() > 1e-9 || w == 0 {
        return Err(Error::InvalidArgument(format!(
            "window {start_before}:{end_before} ms is not a whole number of samples at {} samples/s",
            rec.rate
        )));
    }

    let total = rec.n_samples();
    let mut beats = Vec::new();
    let mut skipped = Vec::new();
    for (k, &r) in r_peaks_ms.iter().enumerate() {
        let start_f = (r - start_before) * rec.rate / 1000.0;
        let start = start_f.round() as i64;
        if start < 0 {
            skipped.push((r, format!("window starts {start} samples before the recording")));
            continue;
        }
        let start = start as usize;
        if start + w > total {
            skipped.push((
                r,
                format!(
                    "window needs samples {start}..{} but recording has {total}",
                    start + w
                ),
            ));
            continue;
        }
        let mut samples = Mat::zeros(rec.channels(), w);
        for m in 0..rec.channels() {
            samples
                .row_mut(m)
                .copy_from_slice(&rec.samples.row(m)[start..start + w]);
        }
        beats.push(BeatWindow {
            samples,
            window_def: window_ms,
            source_beat_index: k,
            rate: rec.rate,
        });
    }
    Ok(Segmentation { beats, skipped })
}

/// Per-channel DFT magnitudes of a beat window.
///
/// Keeps one-sided bins `1..=W/2` (DC excluded, Nyquist included), so a
/// 260-sample window yields 130 bins. Bin `k` sits at `k * rate / W` Hz.
/// The bin selection lives in [`retained_bins`] so the convention can be
/// changed in one place.
pub fn magnitude_matrix(beat: &BeatWindow) -> Result<SpectralMatrix> {
    let w = beat.window_len();
    if w == 0 || w % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "window length must be even and positive, got {w} samples"
        )));
    }
    if !beat.samples.all_finite() {
        return Err(Error::invalid("beat window", "samples must be finite"));
    }
    let bins = retained_bins(w);
    let m = beat.samples.rows();
    let mut values = Mat::zeros(m, bins.len());

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(w);
    let mut buf: Vec<Complex64> = Vec::with_capacity(w);
    for ch in 0..m {
        buf.clear();
        buf.extend(beat.samples.row(ch).iter().map(|&v| Complex64::new(v, 0.0)));
        fft.process(&mut buf);
        let row = values.row_mut(ch);
        for (i, &k) in bins.iter().enumerate() {
            row[i] = buf[k].norm();
        }
    }

    let bin_frequencies = bins
        .iter()
        .map(|&k| k as f64 * beat.rate / w as f64)
        .collect();
    Ok(SpectralMatrix {
        values,
        bin_frequencies,
        channels: (0..m).collect(),
    })
}

/// Indices of the retained DFT bins for an even window length `w`:
/// the one-sided spectrum without DC, `1..=w/2`.
pub fn retained_bins(w: usize) -> Vec<usize> {
    (1..=w / 2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leadfield::ElectrodeArray;

    fn recording(channels: usize, samples: usize, rate: f64) -> EgmRecording {
        let array = ElectrodeArray {
            positions: (0..channels).map(|i| (i as f64, 0.0)).collect(),
            height: 1.0,
            gain: 1.0,
            layout: None,
        };
        EgmRecording {
            samples: Mat::zeros(channels, samples),
            rate,
            array,
            annotations: Vec::new(),
        }
    }

    fn beat_of(samples: Mat, rate: f64) -> BeatWindow {
        BeatWindow {
            window_def: (samples.cols() as f64 * 1000.0 / rate, 0.0),
            source_beat_index: 0,
            rate,
            samples,
        }
    }

    #[test]
    fn segment_examples_from_contract() {
        let mut rec = recording(2, 2000, 1000.0);
        for n in 0..2000 {
            rec.samples.set(0, n, n as f64);
        }
        let seg = segment_beats(&rec, &[1000.0], DEFAULT_WINDOW_MS).unwrap();
        assert_eq!(seg.beats.len(), 1);
        let b = &seg.beats[0];
        assert_eq!(b.window_len(), 260);
        assert_eq!(b.samples.get(0, 0), 680.0);
        assert_eq!(b.samples.get(0, 259), 939.0);

        // Early peak underruns and is skipped with a report.
        let seg = segment_beats(&rec, &[100.0], DEFAULT_WINDOW_MS).unwrap();
        assert!(seg.beats.is_empty());
        assert_eq!(seg.skipped.len(), 1);

        // Two peaks 1 s apart give two disjoint windows.
        let seg = segment_beats(&rec, &[500.0, 1500.0], DEFAULT_WINDOW_MS).unwrap();
        assert_eq!(seg.beats.len(), 2);
    }

    #[test]
    fn pure_tone_lands_in_one_bin() {
        let w = 260;
        let rate = 1000.0;
        let mut m = Mat::zeros(1, w);
        for n in 0..w {
            m.set(
                0,
                n,
                (2.0 * std::f64::consts::PI * 10.0 * n as f64 / w as f64).cos(),
            );
        }
        let sm = magnitude_matrix(&beat_of(m, rate)).unwrap();
        assert_eq!(sm.values.cols(), 130);
        // Bin k=10 is row position 9 (DC excluded).
        assert!((sm.values.get(0, 9) - w as f64 / 2.0).abs() < 1e-9);
        for i in 0..130 {
            if i != 9 {
                assert!(sm.values.get(0, i) < 1e-9, "bin {i} leaked");
            }
        }
        assert!((sm.bin_frequencies[9] - 10.0 * rate / w as f64).abs() < 1e-12);
        assert!((sm.bin_frequencies[129] - rate / 2.0).abs() < 1e-12);
    }

    #[test]
    fn circular_shift_leaves_magnitudes_unchanged() {
        let w = 260;
        let mut a = Mat::zeros(2, w);
        for n in 0..w {
            let v = (n as f64 * 0.1).sin() + 0.3 * (n as f64 * 0.37).cos();
            a.set(0, n, v);
            a.set(1, (n + 7) % w, v);
        }
        let sm = magnitude_matrix(&beat_of(a, 1000.0)).unwrap();
        for k in 0..sm.values.cols() {
            assert!(
                (sm.values.get(0, k) - sm.values.get(1, k)).abs() < 1e-9,
                "bin {k}"
            );
        }
    }

    #[test]
    fn odd_window_is_rejected() {
        let m = Mat::zeros(1, 261);
        assert!(magnitude_matrix(&beat_of(m, 1000.0)).is_err());
    }

    #[test]
    fn row_scaling_is_equivariant() {
        let w = 64;
        let mut a = Mat::zeros(1, w);
        for n in 0..w {
            a.set(0, n, (n as f64 * 0.3).sin());
        }
        let mut b = a.clone();
        for v in b.data_mut() {
            *v *= 3.5;
        }
        let sa = magnitude_matrix(&beat_of(a, 1000.0)).unwrap();
        let sb = magnitude_matrix(&beat_of(b, 1000.0)).unwrap();
        for k in 0..sa.values.cols() {
            assert!((3.5 * sa.values.get(0, k) - sb.values.get(0, k)).abs() < 1e-9);
        }
    }

    #[test]
    fn whole_recording_window_trims_to_even() {
        let rec = recording(1, 261, 1000.0);
        let b = BeatWindow::whole_recording(&rec).unwrap();
        assert_eq!(b.window_len(), 260);
    }
}
