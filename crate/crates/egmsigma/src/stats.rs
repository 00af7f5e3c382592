//! Per-beat feature aggregation and two-sample distribution comparison.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::svdcore::SingularProfile;

/// Rhythm label vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rhythm {
    Sr,
    Af,
}

impl Rhythm {
    pub fn parse(s: &str) -> Result<Rhythm> {
        match s {
            "SR" => Ok(Rhythm::Sr),
            "AF" => Ok(Rhythm::Af),
            other => Err(Error::invalid(
                "rhythm label",
                format!("expected SR or AF, got {other:?}"),
            )),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Rhythm::Sr => "SR",
            Rhythm::Af => "AF",
        }
    }
}

/// A singular profile tagged with its provenance.
#[derive(Debug, Clone)]
pub struct LabeledProfile {
    pub recording_id: String,
    pub location: String,
    pub rhythm: Rhythm,
    pub beat_index: usize,
    pub profile: SingularProfile,
}

#[derive(Debug, Clone)]
pub struct BeatFeatureRow {
    pub recording_id: String,
    pub location: String,
    pub rhythm: Rhythm,
    pub beat_index: usize,
    pub sigma2_norm: f64,
    pub normalized: Vec<f64>,
}

/// One row per beat plus per-(location, rhythm) group means.
#[derive(Debug, Clone, Default)]
pub struct BeatFeatureTable {
    pub rows: Vec<BeatFeatureRow>,
}

impl BeatFeatureTable {
    pub fn group_means(&self) -> BTreeMap<(String, Rhythm), f64> {
        let mut sums: BTreeMap<(String, Rhythm), (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            let e = sums
                .entry((r.location.clone(), r.rhythm))
                .or_insert((0.0, 0));
            e.0 += r.sigma2_norm;
            e.1 += 1;
        }
        sums.into_iter()
            .map(|(k, (s, n))| (k, s / n as f64))
            .collect()
    }

    /// Values of one (location, rhythm) group.
    pub fn group_values(&self, location: &str, rhythm: Rhythm) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.location == location && r.rhythm == rhythm)
            .map(|r| r.sigma2_norm)
            .collect()
    }

    /// Suggested per-location separation threshold: midpoint of the SR and AF
    /// group means, when both are present.
    pub fn suggested_thresholds(&self) -> BTreeMap<String, f64> {
        let means = self.group_means();
        let mut out = BTreeMap::new();
        let locations: std::collections::BTreeSet<String> =
            means.keys().map(|(l, _)| l.clone()).collect();
        for loc in locations {
            if let (Some(sr), Some(af)) = (
                means.get(&(loc.clone(), Rhythm::Sr)),
                means.get(&(loc.clone(), Rhythm::Af)),
            ) {
                out.insert(loc, (sr + af) / 2.0);
            }
        }
        out
    }
}

/// Build the feature table; one row per labeled beat.
pub fn aggregate(profiles: &[LabeledProfile]) -> Result<BeatFeatureTable> {
    let mut rows = Vec::with_capacity(profiles.len());
    for p in profiles {
        let sigma2 = p.profile.sigma2_norm();
        if !(0.0..=1.0).contains(&sigma2) {
            return Err(Error::invalid(
                "feature table",
                format!("normalized sigma2 {sigma2} outside [0,1]"),
            ));
        }
        rows.push(BeatFeatureRow {
            recording_id: p.recording_id.clone(),
            location: p.location.clone(),
            rhythm: p.rhythm,
            beat_index: p.beat_index,
            sigma2_norm: sigma2,
            normalized: p.profile.normalized.clone(),
        });
    }
    Ok(BeatFeatureTable { rows })
}

/// Mann-Whitney U rank-sum test, two-sided.
///
/// Exact enumeration over all group assignments when the combined size is at
/// most 20, normal approximation with tie correction and continuity
/// correction above that. Returns `(U, p)` with `U` the first group's
/// statistic and `p` in (0, 1].
pub fn rank_sum_test(group_a: &[f64], group_b: &[f64]) -> Result<(f64, f64)> {
    let na = group_a.len();
    let nb = group_b.len();
    if na < 3 || nb < 3 {
        return Err(Error::InvalidArgument(format!(
            "each group needs >= 3 values, got {na} and {nb}"
        )));
    }
    if group_a.iter().chain(group_b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }

    let n = na + nb;
    let mut pooled: Vec<f64> = group_a.iter().chain(group_b.iter()).copied().collect();
    let ranks = midranks(&pooled);
    let r_a: f64 = ranks[..na].iter().sum();
    let u = r_a - (na * (na + 1)) as f64 / 2.0;
    let mu = (na * nb) as f64 / 2.0;

    pooled.sort_by(|a, b| a.total_cmp(b));
    let all_equal = pooled.first() == pooled.last();
    if all_equal {
        return Ok((u, 1.0));
    }

    let p = if n <= 20 {
        exact_two_sided(&ranks, na, u, mu)
    } else {
        normal_two_sided(&pooled, na, nb, u, mu)
    };
    Ok((u, p.clamp(f64::MIN_POSITIVE, 1.0)))
}

/// Midranks of the pooled sample, in input order.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Enumerate all assignments of `na` labels over the pooled ranks.
fn exact_two_sided(ranks: &[f64], na: usize, u_obs: f64, mu: f64) -> f64 {
    let n = ranks.len();
    let observed = (u_obs - mu).abs();
    let mut sorted_ranks = ranks.to_vec();
    sorted_ranks.sort_by(|a, b| a.total_cmp(b));

    // Iterate combinations of indices (lexicographic).
    let mut idx: Vec<usize> = (0..na).collect();
    let mut count: u64 = 0;
    let mut total: u64 = 0;
    loop {
        let r: f64 = idx.iter().map(|&i| sorted_ranks[i]).sum();
        let u = r - (na * (na + 1)) as f64 / 2.0;
        if (u - mu).abs() >= observed - 1e-9 {
            count += 1;
        }
        total += 1;
        // next combination
        let mut k = na;
        loop {
            if k == 0 {
                return count as f64 / total as f64;
            }
            k -= 1;
            if idx[k] != k + n - na {
                idx[k] += 1;
                for j in k + 1..na {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn normal_two_sided(pooled_sorted: &[f64], na: usize, nb: usize, u: f64, mu: f64) -> f64 {
    let n = na + nb;
    // Tie correction over the sorted pooled values.
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let nf = n as f64;
    let var = (na * nb) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2)
}

/// Complementary error function (Abramowitz & Stegun 7.1.26 with the
/// exponential prefactor kept for tail accuracy).
fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Five-number box-plot summary with 1.5 IQR outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

/// Quartiles by linear interpolation of the sorted order statistics
/// (position `p * (n - 1)`); outliers fall outside 1.5 IQR whiskers.
pub fn boxplot_summary(values: &[f64]) -> Result<BoxplotSummary> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "boxplot needs at least one value".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let quantile = |p: f64| -> f64 {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let q25 = quantile(0.25);
    let median = quantile(0.5);
    let q75 = quantile(0.75);
    let iqr = q75 - q25;
    let lo_fence = q25 - 1.5 * iqr;
    let hi_fence = q75 + 1.5 * iqr;
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < lo_fence || v > hi_fence)
        .collect();
    Ok(BoxplotSummary {
        min: sorted[0],
        q25,
        median,
        q75,
        max: *sorted.last().unwrap(),
        outliers,
    })
}
