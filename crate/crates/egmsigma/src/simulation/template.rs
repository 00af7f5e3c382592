//! Parametric action-potential templates.
//!
//! The waveform is a smooth piecewise shape: a raised-cosine upstroke from
//! rest to peak, a raised-cosine dome settling onto the plateau level, and an
//! exponential repolarization back to rest. Varying the plateau parameters
//! produces the distinct morphologies the analysis needs.

use crate::error::{Error, Result};

/// Depolarization peak above resting potential, mV. Fixed so the upstroke
/// always crosses the -40 mV activation threshold from a -80 mV rest.
const DEPOLARIZATION_MV: f64 = 100.0;

/// Default resting potential for atrial cells, mV.
pub const RESTING_POTENTIAL_MV: f64 = -80.0;

/// Morphology parameters of a parametric AP template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApParams {
    pub upstroke_ms: f64,
    /// Plateau level above resting potential, mV.
    pub plateau_mv: f64,
    pub plateau_ms: f64,
    pub repol_tau_ms: f64,
}

impl Default for ApParams {
    fn default() -> Self {
        ApParams {
            upstroke_ms: 2.0,
            plateau_mv: 20.0,
            plateau_ms: 150.0,
            repol_tau_ms: 50.0,
        }
    }
}

/// A sampled action-potential waveform.
#[derive(Debug, Clone)]
pub struct APTemplate {
    /// Voltage samples, mV (or unitless after normalization).
    pub samples: Vec<f64>,
    /// Samples per second.
    pub rate: f64,
    pub resting_potential: f64,
    pub params: ApParams,
    /// True once the deviation from rest has been scaled to unit l2 norm
    /// (resting potential mapped to 0).
    pub normalized: bool,
}

impl APTemplate {
    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.rate
    }

    /// Rescale so the deviation from rest has unit l2 norm; the resting
    /// potential becomes 0 so that gain-scaled, rest-padded traces keep
    /// their stated energy.
    pub fn normalized(&self) -> APTemplate {
        let rest = self.resting_potential;
        let norm: f64 = self
            .samples
            .iter()
            .map(|s| (s - rest) * (s - rest))
            .sum::<f64>()
            .sqrt();
        let samples = if norm > 0.0 {
            self.samples.iter().map(|s| (s - rest) / norm).collect()
        } else {
            vec![0.0; self.samples.len()]
        };
        APTemplate {
            samples,
            rate: self.rate,
            resting_potential: 0.0,
            params: self.params,
            normalized: true,
        }
    }

    /// Check the structural invariants. For unnormalized templates: endpoints
    /// within 1 mV of rest and exactly one upward crossing of -40 mV; for
    /// normalized ones: rest at 0 and unit deviation norm.
    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::invalid("template", "needs at least 2 samples"));
        }
        if self.normalized {
            let norm: f64 = self.samples.iter().map(|s| s * s).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(
                    "template",
                    format!("normalized template has l2 norm {norm}"),
                ));
            }
            if self.resting_potential != 0.0 {
                return Err(Error::invalid(
                    "template",
                    "normalized template must have resting potential 0",
                ));
            }
            return Ok(());
        }
        let rest = self.resting_potential;
        let first = self.samples[0];
        let last = *self.samples.last().unwrap();
        if (first - rest).abs() > 1.0 || (last - rest).abs() > 1.0 {
            return Err(Error::invalid(
                "template",
                format!(
                    "endpoints must lie within 1 mV of rest ({rest} mV): first {first}, last {last}"
                ),
            ));
        }
        let crossings = upward_crossings(&self.samples, -40.0);
        if crossings != 1 {
            return Err(Error::invalid(
                "template",
                format!("expected exactly one upward -40 mV crossing, found {crossings}"),
            ));
        }
        Ok(())
    }
}

fn upward_crossings(samples: &[f64], threshold: f64) -> usize {
    samples
        .windows(2)
        .filter(|w| w[0] <= threshold && w[1] > threshold)
        .count()
}

/// Generate a parametric AP template at the given rate and duration.
///
/// The duration must leave room for the waveform to return to rest:
/// upstroke + plateau + five repolarization time constants.
pub fn generate_ap_template(params: ApParams, rate: f64, duration_ms: f64) -> Result<APTemplate> {
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample rate must be positive, got {rate}"
        )));
    }
    for (name, v) in [
        ("upstroke_ms", params.upstroke_ms),
        ("plateau_mv", params.plateau_mv),
        ("plateau_ms", params.plateau_ms),
        ("repol_tau_ms", params.repol_tau_ms),
    ] {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if params.plateau_mv >= DEPOLARIZATION_MV {
        return Err(Error::InvalidArgument(format!(
            "plateau level {} mV must stay below the depolarization peak {} mV",
            params.plateau_mv, DEPOLARIZATION_MV
        )));
    }
    let needed = params.upstroke_ms + params.plateau_ms + 5.0 * params.repol_tau_ms;
    if duration_ms < needed {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_ms} ms too short: waveform needs upstroke + plateau + 5 repol tau = {needed} ms to return to rest"
        )));
    }

    let n = (duration_ms * rate / 1000.0).round() as usize;
    let rest = RESTING_POTENTIAL_MV;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * 1000.0 / rate;
        samples.push(rest + deviation_at(t, &params));
    }

    let tpl = APTemplate {
        samples,
        rate,
        resting_potential: rest,
        params,
        normalized: false,
    };
    tpl.validate()?;
    Ok(tpl)
}

/// Waveform deviation above rest at time `t` ms after onset.
fn deviation_at(t: f64, p: &ApParams) -> f64 {
    let half = |x: f64| (1.0 - (std::f64::consts::PI * x).cos()) / 2.0;
    if t < 0.0 {
        0.0
    } else if t < p.upstroke_ms {
        DEPOLARIZATION_MV * half(t / p.upstroke_ms)
    } else if t < p.upstroke_ms + p.plateau_ms {
        let x = (t - p.upstroke_ms) / p.plateau_ms;
        DEPOLARIZATION_MV - (DEPOLARIZATION_MV - p.plateau_mv) * half(x)
    } else {
        let dt = t - p.upstroke_ms - p.plateau_ms;
        p.plateau_mv * (-dt / p.repol_tau_ms).exp()
    }
}
