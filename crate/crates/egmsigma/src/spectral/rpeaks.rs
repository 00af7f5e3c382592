//! Pan-Tompkins R-peak detection.
//!
//! Offline variant with symmetric (non-delaying) stages: 5-15 Hz zero-phase
//! band-pass, centered five-point derivative, squaring, centered 150 ms
//! moving-window integration, then adaptive dual-threshold peak picking with
//! a 200 ms refractory period and RR-gap search-back.

use super::filter::design_bandpass;
use crate::error::{Error, Result};

/// Minimum spacing between accepted peaks, ms.
const REFRACTORY_MS: f64 = 200.0;

#[derive(Debug, Clone)]
pub struct PeakDetection {
    /// R-peak times, ms, sorted ascending, spaced >= 200 ms.
    pub peaks_ms: Vec<f64>,
    pub warning: Option<String>,
}

/// Detect R peaks on a single-channel ECG.
pub fn detect_r_peaks(ecg: &[f64], rate: f64) -> Result<PeakDetection> {
    if !(rate >= 200.0) {
        return Err(Error::InvalidArgument(format!(
            "R-peak detection needs >= 200 samples/s, got {rate}"
        )));
    }
    if (ecg.len() as f64) < 2.0 * rate {
        return Err(Error::InvalidArgument(format!(
            "R-peak detection needs >= 2 s of signal, got {} samples at {rate} samples/s",
            ecg.len()
        )));
    }

    let design = design_bandpass(5.0, 15.0, 2, rate)?;
    let bp = design.filtfilt(ecg);

    // Centered five-point derivative.
    let n = bp.len();
    let mut deriv = vec![0.0f64; n];
    for i in 2..n.saturating_sub(2) {
        deriv[i] = (2.0 * bp[i + 2] + bp[i + 1] - bp[i - 1] - 2.0 * bp[i - 2]) / 8.0;
    }
    for v in deriv.iter_mut() {
        *v *= *v;
    }

    // Centered moving-window integration, 150 ms.
    let mut w = (0.15 * rate).round() as usize;
    if w % 2 == 0 {
        w += 1;
    }
    let half = w / 2;
    let mut mwi = vec![0.0f64; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += deriv[i];
        if i >= w {
            acc -= deriv[i - w];
        }
        if i >= half {
            mwi[i - half] = acc / w as f64;
        }
    }

    let peaks = adaptive_threshold(&mwi, ecg, rate);
    let warning = if peaks.is_empty() {
        Some("no R peaks found".to_string())
    } else {
        None
    };
    Ok(PeakDetection {
        peaks_ms: peaks,
        warning,
    })
}

/// Local maxima that also dominate their surrounding `suppress` samples.
/// Plain local maxima would include noise wiggles on the rising edge of a
/// QRS hump; accepting one of those first makes the refractory period
/// swallow the true peak.
fn local_maxima(mwi: &[f64], floor: f64, suppress: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..mwi.len().saturating_sub(1) {
        if mwi[i] > floor && mwi[i] >= mwi[i - 1] && mwi[i] > mwi[i + 1] {
            let lo = i.saturating_sub(suppress);
            let hi = (i + suppress + 1).min(mwi.len());
            let window_max = mwi[lo..hi].iter().cloned().fold(0.0f64, f64::max);
            if mwi[i] >= window_max {
                out.push(i);
            }
        }
    }
    out
}

/// Peak picking on the integrated signal; accepted detections are snapped to
/// the strongest raw deflection nearby, where the R peak actually lives (the
/// narrow QRS band rings, and its side lobes can out-weigh the main lobe
/// under noise).
fn adaptive_threshold(mwi: &[f64], raw: &[f64], rate: f64) -> Vec<f64> {
    let global_max = mwi.iter().fold(0.0f64, |a, &v| a.max(v));
    if global_max <= 0.0 {
        return Vec::new();
    }
    let refractory = (REFRACTORY_MS / 1000.0 * rate) as usize;
    let candidates = local_maxima(mwi, 1e-12 * global_max, refractory);
    if candidates.is_empty() {
        return Vec::new();
    }

    let learn = (2.0 * rate) as usize;
    let learn_max = mwi[..learn.min(mwi.len())]
        .iter()
        .fold(0.0f64, |a, &v| a.max(v));
    let learn_mean =
        mwi[..learn.min(mwi.len())].iter().sum::<f64>() / learn.min(mwi.len()) as f64;

    let mut spki = 0.5 * learn_max;
    let mut npki = 0.5 * learn_mean;
    let mut accepted: Vec<usize> = Vec::new();
    let mut rr_history: Vec<usize> = Vec::new();

    let mut i = 0;
    while i < candidates.len() {
        let p = candidates[i];
        let v = mwi[p];
        let threshold1 = npki + 0.25 * (spki - npki);

        if let Some(&last) = accepted.last() {
            if p - last < refractory {
                i += 1;
                continue;
            }
        }

        if v > threshold1 {
            if let Some(&last) = accepted.last() {
                rr_history.push(p - last);
                if rr_history.len() > 8 {
                    rr_history.remove(0);
                }
            }
            accepted.push(p);
            spki = 0.125 * v + 0.875 * spki;
        } else {
            npki = 0.125 * v + 0.875 * npki;
            // Search-back: if the RR gap got too long, accept the strongest
            // missed candidate above the lower threshold.
            if let (Some(&last), false) = (accepted.last(), rr_history.is_empty()) {
                let rr_avg = rr_history.iter().sum::<usize>() / rr_history.len();
                if p - last > (1.66 * rr_avg as f64) as usize {
                    let threshold2 = 0.5 * threshold1;
                    let missed = candidates[..=i]
                        .iter()
                        .rev()
                        .take_while(|&&c| c > last + refractory)
                        .filter(|&&c| mwi[c] > threshold2)
                        .max_by(|&&a, &&b| mwi[a].total_cmp(&mwi[b]));
                    if let Some(&&m) = missed.as_ref() {
                        rr_history.push(m - last);
                        if rr_history.len() > 8 {
                            rr_history.remove(0);
                        }
                        accepted.push(m);
                        spki = 0.25 * mwi[m] + 0.75 * spki;
                    }
                }
            }
        }
        i += 1;
    }

    let search = (0.05 * rate) as usize;
    let mut times: Vec<f64> = accepted
        .iter()
        .map(|&p| {
            let lo = p.saturating_sub(search);
            let hi = (p + search + 1).min(raw.len());
            let best = (lo..hi)
                .max_by(|&a, &b| raw[a].abs().total_cmp(&raw[b].abs()))
                .unwrap_or(p);
            best as f64 * 1000.0 / rate
        })
        .collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup_by(|b, a| {
        // `a` precedes `b`; drop `b` when too close.
        *b - *a < REFRACTORY_MS
    });
    times
}
