#![allow(dead_code)] // shared across test binaries; not every binary uses every helper

//! Shared fixtures and independent oracles for the integration suites.
//!
//! Oracles here deliberately reimplement their targets with naive methods
//! (direct DFT sums, Gram eigendecomposition, 16-neighbor Dijkstra,
//! enumeration and resampling tests) so the implementation path is checked
//! against an independent route.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use egmsigma::leadfield::{synthesize_egm_streamed, EgmRecording, ElectrodeArray};
use egmsigma::mat::Mat;
use egmsigma::simulation::{
    generate_ap_template, solve_lat, APTemplate, ApParams, CellSignals, Stimulus, TissueModel,
};
use egmsigma::spectral::BeatWindow;

// ---------------------------------------------------------------------------
// Fixture parameters shared by the acceptance scenarios.
// ---------------------------------------------------------------------------

/// Compact atrial-like template used by the simulation scenarios: most of
/// its energy sits in the activation deflection.
pub const TPL_COMPACT: ApParams = ApParams {
    upstroke_ms: 2.0,
    plateau_mv: 6.0,
    plateau_ms: 8.0,
    repol_tau_ms: 15.0,
};

/// Second morphology: slower foot and a long dome, clearly separated
/// from the compact one in magnitude-spectrum shape.
pub const TPL_CONTRAST: ApParams = ApParams {
    upstroke_ms: 6.0,
    plateau_mv: 40.0,
    plateau_ms: 200.0,
    repol_tau_ms: 70.0,
};

/// Depressed morphology assigned to cells inside the conduction-block line:
/// slow upstroke, small dome. Models the depressed activation a
/// reaction-diffusion substrate would produce in a barely-conducting region.
pub const TPL_DEPRESSED: ApParams = ApParams {
    upstroke_ms: 10.0,
    plateau_mv: 8.0,
    plateau_ms: 12.0,
    repol_tau_ms: 18.0,
};

/// Conduction speed (mm/ms at conductivity 1) for the scenario fixtures.
pub const V0_SCENARIO: f64 = 0.6;
/// Conduction speed for the block-map fixtures.
pub const V0_BLOCK: f64 = 0.45;
/// Conduction speed for the plane-wave fixtures.
pub const V0_FLAT: f64 = 0.5;

/// Build a normalized template bank with one shared duration.
pub fn bank(params: &[ApParams], rate: f64) -> Vec<APTemplate> {
    let dur = params
        .iter()
        .map(|p| (p.upstroke_ms + p.plateau_ms + 8.0 * p.repol_tau_ms).ceil())
        .fold(0.0f64, f64::max);
    params
        .iter()
        .map(|p| generate_ap_template(*p, rate, dur).unwrap().normalized())
        .collect()
}

/// Uniform tissue with a single corner stimulus.
pub fn corner_tissue(grid: usize) -> TissueModel {
    let mut t = TissueModel::uniform(grid, grid, 0.1);
    t.stimuli.push(Stimulus {
        cell: 0,
        onset_ms: 0.0,
    });
    t
}

/// Uniform tissue with the whole first row stimulated: a plane wave.
pub fn plane_wave_tissue(grid: usize) -> TissueModel {
    let mut t = TissueModel::uniform(grid, grid, 0.1);
    for c in 0..grid {
        t.stimuli.push(Stimulus {
            cell: c,
            onset_ms: 0.0,
        });
    }
    t
}

/// Corner-stimulated tissue with an anti-diagonal low-conductivity line of
/// the given width (cells); line cells take morphology slot 1.
pub fn block_tissue(grid: usize, width_cells: f64) -> TissueModel {
    let mut t = corner_tissue(grid);
    let extent = (grid as f64 - 1.0) * 0.1;
    for r in 0..grid {
        for c in 0..grid {
            let x = c as f64 * 0.1;
            let y = r as f64 * 0.1;
            let d = ((x + y) - extent).abs() / 2.0f64.sqrt();
            if d <= width_cells / 2.0 * 0.1 {
                t.conductivity[r * grid + c] = 0.01;
                t.morphology_id[r * grid + c] = 1;
            }
        }
    }
    t
}

/// Distance (mm) from an (x, y) point to the dilated anti-diagonal block
/// line of `block_tissue`; 0 inside the line region.
pub fn distance_to_block_line(x: f64, y: f64, grid: usize, width_cells: f64) -> f64 {
    let extent = (grid as f64 - 1.0) * 0.1;
    let d = ((x + y) - extent).abs() / 2.0f64.sqrt();
    (d - width_cells / 2.0 * 0.1).max(0.0)
}

/// Centered rectangular array over a grid of the given cell extent.
pub fn centered_array(grid: usize, rows: usize, cols: usize, pitch: f64) -> ElectrodeArray {
    let extent = (grid as f64 - 1.0) * 0.1;
    ElectrodeArray::grid(rows, cols, pitch, extent / 2.0, extent / 2.0, 1.0)
}

/// Forward-model a scenario end to end. The duration covers every cell's
/// full waveform, and at least `min_duration_ms` when given.
pub fn simulate_egm(
    tissue: &TissueModel,
    array: &ElectrodeArray,
    templates: &[APTemplate],
    amplitudes: &[f64],
    v0: f64,
    min_duration_ms: Option<f64>,
) -> EgmRecording {
    let lat = solve_lat(tissue, v0).unwrap();
    let max_tau = lat.field.max_finite().unwrap();
    let tpl_dur = templates
        .iter()
        .map(|t| t.duration_ms())
        .fold(0.0f64, f64::max);
    let mut dur = (max_tau + tpl_dur + 1.0).ceil();
    if let Some(min) = min_duration_ms {
        dur = dur.max(min);
    }
    synthesize_egm_streamed(array, tissue, &lat.field, templates, amplitudes, dur).unwrap()
}

/// First `len` samples of a recording as one beat window (trimmed to even).
pub fn prefix_beat(rec: &EgmRecording, len: usize) -> BeatWindow {
    let len = len.min(rec.n_samples()) & !1;
    let mut samples = Mat::zeros(rec.channels(), len);
    for m in 0..rec.channels() {
        samples
            .row_mut(m)
            .copy_from_slice(&rec.samples.row(m)[..len]);
    }
    BeatWindow {
        samples,
        window_def: (len as f64 * 1000.0 / rec.rate, 0.0),
        source_beat_index: 0,
        rate: rec.rate,
    }
}

/// Wrap per-cell signals as a beat window (cell-level analysis).
pub fn cell_beat(cells: &CellSignals) -> BeatWindow {
    let mut w = cells.samples.cols();
    if w % 2 == 1 {
        w -= 1;
    }
    let mut samples = Mat::zeros(cells.samples.rows(), w);
    for r in 0..cells.samples.rows() {
        samples
            .row_mut(r)
            .copy_from_slice(&cells.samples.row(r)[..w]);
    }
    BeatWindow {
        samples,
        window_def: (w as f64 * 1000.0 / cells.rate, 0.0),
        source_beat_index: 0,
        rate: cells.rate,
    }
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Naive O(W^2) DFT magnitude of one channel, bins 1..=W/2.
pub fn naive_dft_magnitude(x: &[f64]) -> Vec<f64> {
    let w = x.len();
    (1..=w / 2)
        .map(|k| {
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for (n, &v) in x.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * n) as f64 / w as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Brute-force singular values via the eigendecomposition of the small-side
/// Gram matrix, using a plain classical Jacobi sweep written independently
/// of the library kernel.
pub fn gram_eigen_sigmas(b: &Mat) -> Vec<f64> {
    let (m, n) = (b.rows(), b.cols());
    let k = m.min(n);
    // Gram over the smaller side.
    let mut g = vec![vec![0.0f64; k]; k];
    for i in 0..k {
        for j in 0..k {
            let mut acc = 0.0;
            if m <= n {
                for c in 0..n {
                    acc += b.get(i, c) * b.get(j, c);
                }
            } else {
                for r in 0..m {
                    acc += b.get(r, i) * b.get(r, j);
                }
            }
            g[i][j] = acc;
        }
    }
    // Classical Jacobi: repeatedly zero the largest off-diagonal element.
    let mut a = g;
    for _ in 0..20 * k * k {
        let (mut p, mut q, mut big) = (0, 1, 0.0f64);
        for i in 0..k {
            for j in i + 1..k {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big <= 1e-300 || k < 2 {
            break;
        }
        let scale: f64 = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max);
        if big <= f64::EPSILON * scale {
            break;
        }
        let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for i in 0..k {
            let aip = a[i][p];
            let aiq = a[i][q];
            a[i][p] = c * aip - s * aiq;
            a[i][q] = s * aip + c * aiq;
        }
        for j in 0..k {
            let apj = a[p][j];
            let aqj = a[q][j];
            a[p][j] = c * apj - s * aqj;
            a[q][j] = s * apj + c * aqj;
        }
    }
    let mut sigmas: Vec<f64> = (0..k).map(|i| a[i][i].max(0.0).sqrt()).collect();
    sigmas.sort_by(|x, y| y.total_cmp(x));
    sigmas
}

/// Dijkstra first-arrival oracle on a 16-neighborhood grid graph (axis,
/// diagonal and knight moves), which approximates the continuous shortest
/// path to well under a percent. Moves crossing zero-conductivity cells are
/// forbidden. Edge time uses the mean slowness of the endpoints.
pub fn dijkstra16(tissue: &TissueModel, v0: f64) -> Vec<f64> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct E(f64, usize);
    impl Eq for E {}
    impl Ord for E {
        fn cmp(&self, o: &Self) -> Ordering {
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }
    impl PartialOrd for E {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }

    let rows = tissue.rows as i64;
    let cols = tissue.cols as i64;
    let idx = |r: i64, c: i64| (r * cols + c) as usize;
    let passable = |r: i64, c: i64| {
        r >= 0 && c >= 0 && r < rows && c < cols && tissue.conductivity[idx(r, c)] > 0.0
    };
    let slow = |cell: usize| 1.0 / (v0 * tissue.conductivity[cell].sqrt());

    let moves: [(i64, i64); 16] = [
        (0, 1), (0, -1), (1, 0), (-1, 0),
        (1, 1), (1, -1), (-1, 1), (-1, -1),
        (1, 2), (1, -2), (-1, 2), (-1, -2),
        (2, 1), (2, -1), (-2, 1), (-2, -1),
    ];

    let mut dist = vec![f64::INFINITY; (rows * cols) as usize];
    let mut heap = BinaryHeap::new();
    for s in &tissue.stimuli {
        if s.onset_ms < dist[s.cell] {
            dist[s.cell] = s.onset_ms;
            heap.push(E(s.onset_ms, s.cell));
        }
    }
    while let Some(E(d, cell)) = heap.pop() {
        if d > dist[cell] {
            continue;
        }
        let r = cell as i64 / cols;
        let c = cell as i64 % cols;
        if tissue.conductivity[cell] <= 0.0 {
            continue;
        }
        for &(dr, dc) in &moves {
            let (nr, nc) = (r + dr, c + dc);
            if !passable(nr, nc) {
                continue;
            }
            // Intermediate cells crossed by the move must be passable.
            let blocked = if dr.abs() == 1 && dc.abs() == 1 {
                !passable(r, nc) || !passable(nr, c)
            } else if dr.abs() + dc.abs() == 3 {
                // knight move: check the two cells nearest the segment
                let mid1 = (r + dr / 2, c + dc / 2);
                let mid2 = (r + (dr + dr.signum()) / 2, c + (dc + dc.signum()) / 2);
                !passable(mid1.0, mid1.1) || !passable(mid2.0, mid2.1)
            } else {
                false
            };
            if blocked {
                continue;
            }
            let nb = idx(nr, nc);
            let len = ((dr * dr + dc * dc) as f64).sqrt() * tissue.spacing;
            let t = d + len * 0.5 * (slow(cell) + slow(nb));
            if t < dist[nb] {
                dist[nb] = t;
                heap.push(E(t, nb));
            }
        }
    }
    dist
}

/// Synthetic ECG: biphasic QRS + T waves at the given R times, plus white
/// noise at the requested SNR (dB, signal power over noise power).
pub fn synth_ecg(rate: f64, dur_ms: f64, r_times_ms: &[f64], snr_db: Option<f64>, seed: u64) -> Vec<f64> {
    let n = (dur_ms * rate / 1000.0) as usize;
    let mut x = vec![0.0f64; n];
    for &r in r_times_ms {
        for (i, v) in x.iter_mut().enumerate() {
            let t = i as f64 * 1000.0 / rate - r;
            *v += 1.2 * (-t * t / (2.0 * 8.0 * 8.0)).exp();
            *v -= 0.3 * (-(t - 25.0) * (t - 25.0) / (2.0 * 10.0 * 10.0)).exp();
            *v += 0.25 * (-(t - 180.0) * (t - 180.0) / (2.0 * 40.0 * 40.0)).exp();
        }
    }
    if let Some(db) = snr_db {
        let p_signal = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let sigma = (p_signal / 10f64.powf(db / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut i = 0;
        while i < n {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let r = (-2.0 * u1.ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * u2;
            x[i] += sigma * r * th.cos();
            if i + 1 < n {
                x[i + 1] += sigma * r * th.sin();
            }
            i += 2;
        }
    }
    x
}

/// Exhaustive two-sided Mann-Whitney oracle: recursively enumerate every
/// assignment of the pooled values into the first group.
pub fn exact_mannwhitney_oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let na = a.len();
    let nb = b.len();
    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    // Midranks.
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| pooled[x].total_cmp(&pooled[y]));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let u_obs: f64 = ranks[..na].iter().sum::<f64>() - (na * (na + 1)) as f64 / 2.0;
    let mu = (na * nb) as f64 / 2.0;
    let observed = (u_obs - mu).abs();

    fn walk(
        ranks: &[f64],
        pos: usize,
        left: usize,
        sum: f64,
        na: usize,
        mu: f64,
        observed: f64,
        count: &mut u64,
        total: &mut u64,
    ) {
        if left == 0 {
            let u = sum - (na * (na + 1)) as f64 / 2.0;
            if (u - mu).abs() >= observed - 1e-9 {
                *count += 1;
            }
            *total += 1;
            return;
        }
        if ranks.len() - pos < left {
            return;
        }
        walk(ranks, pos + 1, left - 1, sum + ranks[pos], na, mu, observed, count, total);
        walk(ranks, pos + 1, left, sum, na, mu, observed, count, total);
    }
    let mut sorted = ranks.clone();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let mut count = 0u64;
    let mut total = 0u64;
    walk(&sorted, 0, na, 0.0, na, mu, observed, &mut count, &mut total);
    (u_obs, count as f64 / total as f64)
}

/// Monte-Carlo permutation oracle for the two-sided rank-sum p-value.
pub fn permutation_oracle(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> f64 {
    let na = a.len();
    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let n = pooled.len();
    let rank_of = |values: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
        let mut ranks = vec![0.0f64; values.len()];
        let mut i = 0;
        while i < values.len() {
            let mut j = i;
            while j + 1 < values.len() && values[order[j + 1]] == values[order[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &order[i..=j] {
                ranks[k] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let ranks = rank_of(&pooled);
    let u_of = |idx: &[usize]| -> f64 {
        let s: f64 = idx.iter().map(|&i| ranks[i]).sum();
        s - (na * (na + 1)) as f64 / 2.0
    };
    let base: Vec<usize> = (0..na).collect();
    let u_obs = u_of(&base);
    let mu = (na * (n - na)) as f64 / 2.0;
    let observed = (u_obs - mu).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    for _ in 0..resamples {
        // Partial Fisher-Yates: draw the first `na` positions.
        for i in 0..na {
            let j = rng.gen_range(i..n);
            indices.swap(i, j);
        }
        let u = u_of(&indices[..na]);
        if (u - mu).abs() >= observed - 1e-9 {
            count += 1;
        }
    }
    (count as f64 + 1.0) / (resamples as f64 + 1.0)
}
