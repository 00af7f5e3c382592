//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them all).

mod common;

use std::time::Instant;

use common::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use egmsigma::latmap::{detect_blocks, egm_activation_map, BLOCK_THRESHOLD_MS};
use egmsigma::mat::Mat;
use egmsigma::sigmamap::sigma2_map;
use egmsigma::simulation::{
    generate_ap_template, synthesize_cell_signals, ApParams, LATField, TissueModel,
};
use egmsigma::spectral::{bandpass, detect_r_peaks, magnitude_matrix, BeatWindow};
use egmsigma::stats::rank_sum_test;
use egmsigma::svdcore::{decompose, svd_profile};

/// Cell-level magnitude matrix from a 1xN strip of cells with the given
/// integer-millisecond delays, gains, and per-cell morphology.
fn strip_cells(
    delays_ms: &[f64],
    gains: &[f64],
    morphology: &[usize],
    bank: &[egmsigma::simulation::APTemplate],
) -> BeatWindow {
    let n = delays_ms.len();
    let mut tissue = TissueModel::uniform(1, n, 1.0);
    tissue.stimuli.push(egmsigma::simulation::Stimulus {
        cell: 0,
        onset_ms: 0.0,
    });
    tissue.morphology_id = morphology.to_vec();
    let lat = LATField {
        rows: 1,
        cols: n,
        tau: delays_ms.to_vec(),
        source_mask: vec![false; n],
    };
    let tpl_dur = bank.iter().map(|t| t.duration_ms()).fold(0.0f64, f64::max);
    let max_delay = delays_ms.iter().cloned().fold(0.0f64, f64::max);
    let duration = (max_delay + tpl_dur + 2.0).ceil();
    let cells = synthesize_cell_signals(&tissue, &lat, bank, gains, duration).unwrap();
    cell_beat(&cells)
}

#[test]
fn criterion_01_exact_rank1_cell_level() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let tpl = generate_ap_template(
        ApParams {
            plateau_ms: 80.0,
            repol_tau_ms: 30.0,
            ..ApParams::default()
        },
        1000.0,
        330.0,
    )
    .unwrap()
    .normalized();
    let n = 500usize;
    let delays: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=120) as f64).collect();
    let gains: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let beat = strip_cells(&delays, &gains, &vec![0; n], &[tpl]);
    let sm = magnitude_matrix(&beat).unwrap();
    let profile = svd_profile(&sm).unwrap();
    let sigma2 = profile.normalized[1];
    let elapsed = start.elapsed();
    assert!(sigma2 < 1e-9, "normalized sigma2 {sigma2}");
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?}");
    println!(
        "acceptance criterion 1: PASS (500 cells, normalized sigma2 = {sigma2:.3e}, {:.2} s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_02_exact_rank2_complementary_groups() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let bank = bank(
        &[
            ApParams {
                plateau_ms: 80.0,
                repol_tau_ms: 30.0,
                ..ApParams::default()
            },
            ApParams {
                plateau_mv: 40.0,
                plateau_ms: 150.0,
                repol_tau_ms: 45.0,
                ..ApParams::default()
            },
        ],
        1000.0,
    );
    let n = 500usize;
    let delays: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=100) as f64).collect();
    let gains: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let morphology: Vec<usize> = (0..n).map(|i| usize::from(i % 2 == 0)).collect();
    let beat = strip_cells(&delays, &gains, &morphology, &bank);
    let sm = magnitude_matrix(&beat).unwrap();
    let profile = svd_profile(&sm).unwrap();
    let s2 = profile.normalized[1];
    let s3 = profile.normalized[2];
    let elapsed = start.elapsed();
    assert!(s3 < 1e-9, "sigma3/sigma1 = {s3}");
    assert!(s2 > 0.0, "sigma2/sigma1 = {s2}");
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?}");
    println!(
        "acceptance criterion 2: PASS (sigma2/sigma1 = {s2:.3}, sigma3/sigma1 = {s3:.3e}, {:.2} s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_03_lat_insensitivity_under_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let tpl = generate_ap_template(
        ApParams {
            plateau_ms: 60.0,
            repol_tau_ms: 25.0,
            ..ApParams::default()
        },
        1000.0,
        270.0,
    )
    .unwrap()
    .normalized();
    let bank = [tpl];
    let n = 150usize;
    let delays: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=80) as f64).collect();
    let gains: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let morphology = vec![0usize; n];

    let base = svd_profile(
        &magnitude_matrix(&strip_cells(&delays, &gains, &morphology, &bank)).unwrap(),
    )
    .unwrap();

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut permuted = delays.clone();
        permuted.shuffle(&mut rng);
        let profile = svd_profile(
            &magnitude_matrix(&strip_cells(&permuted, &gains, &morphology, &bank)).unwrap(),
        )
        .unwrap();
        for (a, b) in base.normalized.iter().zip(profile.normalized.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-9, "max profile change {worst}");
    println!(
        "acceptance criterion 3: PASS (100 delay permutations, max normalized-profile change = {worst:.3e})"
    );
}

#[test]
fn criterion_04_flat_wavefront_rank1_and_gain_gradient() {
    let grid = 200usize;
    let tissue = plane_wave_tissue(grid);
    let array = centered_array(grid, 10, 10, 2.0);
    let templates = bank(&[ApParams::default()], 1000.0);
    let amps = vec![1.0; grid * grid];

    let egm = simulate_egm(&tissue, &array, &templates, &amps, V0_FLAT, None);
    let beat = BeatWindow::whole_recording(&egm).unwrap();
    let s2 = svd_profile(&magnitude_matrix(&beat).unwrap())
        .unwrap()
        .sigma2_norm();
    assert!(s2 < 0.05, "flat-wave normalized sigma2 {s2}");

    // Exponential gain gradient with alpha * array extent = 0.2.
    let alpha = 0.2 / 18.0;
    let amps_grad: Vec<f64> = (0..grid * grid)
        .map(|c| ((c % grid) as f64 * 0.1 * alpha).exp())
        .collect();
    let egm_grad = simulate_egm(&tissue, &array, &templates, &amps_grad, V0_FLAT, None);
    let beat_grad = BeatWindow::whole_recording(&egm_grad).unwrap();
    let s2_grad = svd_profile(&magnitude_matrix(&beat_grad).unwrap())
        .unwrap()
        .sigma2_norm();
    let delta = (s2_grad - s2).abs();
    assert!(delta < 0.01, "gain gradient changed sigma2 by {delta}");
    println!(
        "acceptance criterion 4: PASS (flat sigma2 = {s2:.4} < 0.05, gain-gradient delta = {delta:.5} < 0.01)"
    );
}

#[test]
fn criterion_05_scenario_ordering() {
    let start = Instant::now();
    let grid = 200usize;
    let array = centered_array(grid, 10, 10, 2.0);
    let two_bank = bank(&[TPL_COMPACT, TPL_CONTRAST], 1000.0);
    let one_bank = vec![two_bank[0].clone()];
    let amps = vec![1.0; grid * grid];

    let sigma2_of = |tissue: &TissueModel, templates: &[egmsigma::simulation::APTemplate]| {
        let egm = simulate_egm(tissue, &array, templates, &amps, V0_SCENARIO, None);
        let beat = BeatWindow::whole_recording(&egm).unwrap();
        svd_profile(&magnitude_matrix(&beat).unwrap())
            .unwrap()
            .sigma2_norm()
    };

    // One curved wavefront, one morphology.
    let t1 = corner_tissue(grid);
    let s1 = sigma2_of(&t1, &one_bank);

    // One wavefront, two morphology patches.
    let mut t2 = corner_tissue(grid);
    for r in 60..120 {
        for c in 40..100 {
            t2.morphology_id[r * grid + c] = 1;
        }
    }
    for r in 120..180 {
        for c in 110..170 {
            t2.morphology_id[r * grid + c] = 1;
        }
    }
    let s2 = sigma2_of(&t2, &two_bank);

    // Two colliding wavefronts, left/right morphologies.
    let mut t3 = corner_tissue(grid);
    t3.stimuli.push(egmsigma::simulation::Stimulus {
        cell: grid - 1,
        onset_ms: 0.0,
    });
    for r in 0..grid {
        for c in grid / 2..grid {
            t3.morphology_id[r * grid + c] = 1;
        }
    }
    let s3 = sigma2_of(&t3, &two_bank);

    let elapsed = start.elapsed();
    assert!((0.05..=0.25).contains(&s1), "curved single-wavefront sigma2 {s1}");
    assert!((0.15..=0.30).contains(&s3), "colliding two-morphology sigma2 {s3}");
    assert!(s1 < s3, "expected ordering s1 {s1} < s3 {s3}");
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?}");
    println!(
        "acceptance criterion 5: PASS (s1 = {s1:.4} in [0.05,0.25], s2 = {s2:.4}, s3 = {s3:.4} in [0.15,0.30], s1 < s3, {:.0} s)",
        elapsed.as_secs_f64()
    );
}

/// Shared construction for the 32x32 map fixtures: simulate, band-pass
/// 5-100 Hz, take the first 260 ms as the beat.
fn map_fixture(tissue: &TissueModel, templates: &[egmsigma::simulation::APTemplate]) -> BeatWindow {
    let grid = tissue.rows;
    let array = centered_array(grid, 32, 32, 0.5);
    let amps = vec![1.0; grid * grid];
    let egm = simulate_egm(tissue, &array, templates, &amps, V0_BLOCK, Some(261.0));
    let filtered = bandpass(&egm, 5.0, 100.0, 4).unwrap();
    prefix_beat(&filtered, 260)
}

#[test]
fn criterion_06_sigma2_map_thresholds() {
    let start = Instant::now();
    let grid = 200usize;
    let width_cells = 16.0;
    let templates = bank(&[TPL_COMPACT, TPL_DEPRESSED], 1000.0);
    let array = centered_array(grid, 32, 32, 0.5);

    // Homogeneous: every pixel below the flat-wave threshold.
    let homog_beat = map_fixture(&corner_tissue(grid), &templates);
    let homog_map = sigma2_map(&homog_beat, (32, 32)).unwrap();
    let homog_max = homog_map.max_value();
    assert!(homog_max < 0.05, "homogeneous map max {homog_max}");

    // Diagonal block line: hot pixels on the line, quiet far away.
    let block_beat = map_fixture(&block_tissue(grid, width_cells), &templates);
    let block_map = sigma2_map(&block_beat, (32, 32)).unwrap();
    let mut block_max = 0.0f64;
    let mut hot_off_line = Vec::new();
    let mut far_max = 0.0f64;
    // 2 pixels of slack at the 0.5 mm pitch; "far" is 3 window widths.
    let hot_slack_mm = 2.0 * 0.5;
    let far_mm = 3.0 * 3.0 * 0.5;
    for r in 0..block_map.values.rows() {
        for c in 0..block_map.values.cols() {
            let (ex, ey) = array.positions[(r + 1) * 32 + (c + 1)];
            let d = distance_to_block_line(ex, ey, grid, width_cells);
            let v = block_map.values.get(r, c);
            block_max = block_max.max(v);
            if v >= 0.05 && d > hot_slack_mm {
                hot_off_line.push((r, c, d, v));
            }
            if d >= far_mm {
                far_max = far_max.max(v);
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(block_max > 0.05, "block map max {block_max}");
    assert!(
        hot_off_line.is_empty(),
        "hot pixels beyond 2 px of the line: {hot_off_line:?}"
    );
    assert!(far_max < 0.05, "max {far_max} at >= 3 windows from the line");
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?}");
    println!(
        "acceptance criterion 6: PASS (homogeneous max = {homog_max:.4} < 0.05, block max = {block_max:.4} > 0.05, hot set on the line, far max = {far_max:.4} < 0.05, {:.0} s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_07_block_detection() {
    let grid = 200usize;
    let width_cells = 16.0;
    let templates = bank(&[TPL_COMPACT, TPL_DEPRESSED], 1000.0);
    let array = centered_array(grid, 32, 32, 0.5);
    let amps = vec![1.0; grid * grid];

    // Raw (unfiltered) beat for activation mapping.
    let egm = simulate_egm(
        &block_tissue(grid, width_cells),
        &array,
        &templates,
        &amps,
        V0_BLOCK,
        Some(261.0),
    );
    let beat = prefix_beat(&egm, 260);
    let act = egm_activation_map(&beat, (32, 32)).unwrap();
    let blocks = detect_blocks(&act, (32, 32), BLOCK_THRESHOLD_MS).unwrap();
    assert!(!blocks.edges.is_empty(), "no block edges flagged");

    // Every flagged edge sits on the line.
    for &(a, b) in &blocks.edges {
        let (xa, ya) = array.positions[a];
        let (xb, yb) = array.positions[b];
        let d = distance_to_block_line((xa + xb) / 2.0, (ya + yb) / 2.0, grid, width_cells);
        assert!(d <= 1.5, "edge ({a},{b}) is {d:.2} mm from the line");
    }

    // The flagged edges form one spatially contiguous band along the line:
    // midpoints chain together at the electrode pitch and cover most of the
    // array diagonal.
    let midpoints: Vec<(f64, f64)> = blocks
        .edges
        .iter()
        .map(|&(a, b)| {
            let (xa, ya) = array.positions[a];
            let (xb, yb) = array.positions[b];
            ((xa + xb) / 2.0, (ya + yb) / 2.0)
        })
        .collect();
    let n_mid = midpoints.len();
    let mut seen = vec![false; n_mid];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if seen[i] {
            continue;
        }
        seen[i] = true;
        for j in 0..n_mid {
            if !seen[j] {
                let dx = midpoints[i].0 - midpoints[j].0;
                let dy = midpoints[i].1 - midpoints[j].1;
                if (dx * dx + dy * dy).sqrt() <= 0.80 {
                    stack.push(j);
                }
            }
        }
    }
    let component = seen.iter().filter(|&&s| s).count();
    assert!(
        component * 10 >= n_mid * 9,
        "largest band component holds {component} of {n_mid} flagged edges"
    );
    // Span along the line direction (the (1, -1) diagonal).
    let along: Vec<f64> = midpoints.iter().map(|&(x, y)| (x - y) / 2.0f64.sqrt()).collect();
    let span = along.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - along.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(span >= 10.0, "band spans only {span:.1} mm along the line");

    // Plane wave: no flagged edges at clinically plausible speed.
    let flat_grid = 200usize;
    let flat = plane_wave_tissue(flat_grid);
    let flat_arr = centered_array(flat_grid, 10, 10, 2.0);
    let flat_amps = vec![1.0; flat_grid * flat_grid];
    let flat_bank = bank(&[ApParams::default()], 1000.0);
    let flat_egm = simulate_egm(&flat, &flat_arr, &flat_bank, &flat_amps, V0_FLAT, None);
    let flat_beat = BeatWindow::whole_recording(&flat_egm).unwrap();
    let flat_act = egm_activation_map(&flat_beat, (10, 10)).unwrap();
    // The empty block set must come from real LATs, not missing ones.
    let present = flat_act.lat_ms.iter().filter(|l| l.is_some()).count();
    assert!(present >= 90, "only {present}/100 flat-wave LATs detected");
    let flat_blocks = detect_blocks(&flat_act, (10, 10), BLOCK_THRESHOLD_MS).unwrap();
    assert!(
        flat_blocks.edges.is_empty(),
        "flat wave flagged {:?}",
        flat_blocks.edges
    );
    println!(
        "acceptance criterion 7: PASS ({} block edges in one band on the line, flat wave flags none)",
        blocks.edges.len()
    );
}

#[test]
fn criterion_08_spectral_against_naive_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_rel = 0.0f64;
    for _ in 0..50 {
        let mut m = Mat::zeros(9, 260);
        for v in m.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let beat = BeatWindow {
            window_def: (260.0, 0.0),
            source_beat_index: 0,
            rate: 1000.0,
            samples: m.clone(),
        };
        let sm = magnitude_matrix(&beat).unwrap();
        for ch in 0..9 {
            let oracle = naive_dft_magnitude(m.row(ch));
            let scale = oracle.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
            for (k, &o) in oracle.iter().enumerate() {
                worst_rel = worst_rel.max((sm.values.get(ch, k) - o).abs() / scale);
            }
        }
    }
    assert!(worst_rel < 1e-9, "worst relative error {worst_rel}");

    // Circular-shift invariance.
    let mut worst_shift = 0.0f64;
    for _ in 0..100 {
        let w = 260usize;
        let base: Vec<f64> = (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shift = rng.gen_range(1..w);
        let mut m = Mat::zeros(2, w);
        for n in 0..w {
            m.set(0, n, base[n]);
            m.set(1, (n + shift) % w, base[n]);
        }
        let beat = BeatWindow {
            window_def: (260.0, 0.0),
            source_beat_index: 0,
            rate: 1000.0,
            samples: m,
        };
        let sm = magnitude_matrix(&beat).unwrap();
        let scale = sm.values.row(0).iter().cloned().fold(0.0f64, f64::max);
        for k in 0..sm.values.cols() {
            worst_shift = worst_shift
                .max((sm.values.get(0, k) - sm.values.get(1, k)).abs() / scale);
        }
    }
    assert!(worst_shift < 1e-9, "worst shift deviation {worst_shift}");
    println!(
        "acceptance criterion 8: PASS (naive-DFT agreement {worst_rel:.2e}, shift invariance {worst_shift:.2e})"
    );
}

#[test]
fn criterion_09_svd_kernel_against_gram_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst_sigma = 0.0f64;
    let mut worst_recon = 0.0f64;
    for _ in 0..100 {
        let mut b = Mat::zeros(9, 130);
        for v in b.data_mut() {
            *v = rng.gen_range(0.0..1.0);
        }
        let svd = decompose(&b).unwrap();
        // Reconstruction residual.
        let mut resid = 0.0f64;
        for r in 0..9 {
            for c in 0..130 {
                let mut acc = 0.0;
                for k in 0..9 {
                    acc += svd.u.get(r, k) * svd.sigmas[k] * svd.vt.get(k, c);
                }
                let d = b.get(r, c) - acc;
                resid += d * d;
            }
        }
        let rel = resid.sqrt() / b.frobenius_norm();
        worst_recon = worst_recon.max(rel);

        let oracle = gram_eigen_sigmas(&b);
        for (a, o) in svd.sigmas.iter().zip(oracle.iter()) {
            worst_sigma = worst_sigma.max((a - o).abs() / svd.sigmas[0]);
        }
    }
    assert!(worst_recon <= 1e-10, "worst reconstruction residual {worst_recon}");
    assert!(worst_sigma <= 1e-9, "worst sigma disagreement {worst_sigma}");
    println!(
        "acceptance criterion 9: PASS (reconstruction {worst_recon:.2e}, Gram-oracle agreement {worst_sigma:.2e})"
    );
}

#[test]
fn criterion_10_r_peak_detection_under_noise() {
    let rate = 1000.0;
    let mut total = 0usize;
    let mut matched = 0usize;
    for rec_idx in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + rec_idx);
        let mut truth = Vec::new();
        let mut t = 600.0;
        for _ in 0..10 {
            truth.push(t);
            t += rng.gen_range(700.0..1100.0);
        }
        let dur = truth.last().unwrap() + 800.0;
        let ecg = synth_ecg(rate, dur, &truth, Some(20.0), 7000 + rec_idx);
        let det = detect_r_peaks(&ecg, rate).unwrap();
        total += truth.len();
        for &want in &truth {
            if det.peaks_ms.iter().any(|p| (p - want).abs() <= 15.0) {
                matched += 1;
            }
        }
    }
    let rate_pct = matched as f64 / total as f64 * 100.0;
    assert!(
        rate_pct >= 90.0,
        "{matched}/{total} peaks within 15 ms ({rate_pct:.1}%)"
    );
    println!(
        "acceptance criterion 10: PASS ({matched}/{total} peaks within 15 ms at 20 dB SNR = {rate_pct:.1}%)"
    );
}

#[test]
fn criterion_11_rank_sum_against_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    // Exact-path agreement for every (na, nb) with 3 <= na <= nb, na+nb <= 10.
    let mut checked = 0;
    for na in 3..=7usize {
        for nb in na..=(10 - na).max(na) {
            if na + nb > 10 || nb < 3 {
                continue;
            }
            for _rep in 0..5 {
                // Values rounded to one decimal so ties occur.
                let a: Vec<f64> = (0..na)
                    .map(|_| (rng.gen_range(0.0..2.0) * 10.0f64).round() / 10.0)
                    .collect();
                let b: Vec<f64> = (0..nb)
                    .map(|_| (rng.gen_range(0.5..2.5) * 10.0f64).round() / 10.0)
                    .collect();
                let (u, p) = rank_sum_test(&a, &b).unwrap();
                let (u_o, p_o) = exact_mannwhitney_oracle(&a, &b);
                assert!((u - u_o).abs() < 1e-12, "U {u} vs oracle {u_o}");
                assert!((p - p_o).abs() < 1e-12, "p {p} vs oracle {p_o} (n=({na},{nb}))");
                checked += 1;
            }
        }
    }

    // Normal approximation vs permutation oracle at n = 50 per group.
    let mut worst = 0.0f64;
    for (shift, seed) in [(0.0f64, 21u64), (0.25, 22), (0.6, 23)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0) + shift).collect();
        let (_, p) = rank_sum_test(&a, &b).unwrap();
        let p_perm = permutation_oracle(&a, &b, 100_000, 31 + seed);
        worst = worst.max((p - p_perm).abs());
    }
    assert!(worst <= 0.005, "worst |p - permutation| = {worst}");

    // Strongly separated groups are significant.
    let mut rng2 = ChaCha8Rng::seed_from_u64(29);
    let a: Vec<f64> = (0..50).map(|_| rng2.gen_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..50).map(|_| rng2.gen_range(0.0..1.0) + 3.0 * 0.29).collect();
    let (_, p_sep) = rank_sum_test(&a, &b).unwrap();
    assert!(p_sep < 0.001, "separated groups p = {p_sep}");

    println!(
        "acceptance criterion 11: PASS ({checked} exact cases agree, permutation gap {worst:.4} <= 0.005, separated p = {p_sep:.1e})"
    );
}

#[test]
fn criterion_12_cli_reproducibility() {
    let exe = env!("CARGO_BIN_EXE_egmsigma");
    let base = std::env::temp_dir().join(format!("egmsigma_accept_{}", std::process::id()));
    std::fs::create_dir_all(&base).unwrap();
    let cfg = base.join("small.cfg");
    std::fs::write(
        &cfg,
        "[tissue]\nrows = 40\ncols = 40\nspacing_mm = 0.1\n\n[conductivity.base]\nkind = uniform\nvalue = 1.0\n\n[stimuli]\nstim = 0, 0, 0.0\n\n[array]\nrows = 4\ncols = 4\npitch_mm = 0.8\nz0_mm = 1.0\n\n[run]\nv0_mm_per_ms = 0.5\nseed = 7\nnoise_std = 0.001\n",
    )
    .unwrap();

    let run = |args: &[String]| {
        let out = std::process::Command::new(exe)
            .args(args)
            .output()
            .expect("spawn CLI");
        assert!(
            out.status.success(),
            "{:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let read = |p: std::path::PathBuf| std::fs::read(p).unwrap();

    // simulate twice, second run driven by the manifest argv.
    let d1 = base.join("sim1");
    run(&[
        "simulate".into(),
        "--config".into(),
        cfg.display().to_string(),
        "--out".into(),
        d1.display().to_string(),
    ]);
    let argv = egmsigma::dataio::Manifest::read_argv(&d1.join("manifest.txt")).unwrap();
    let d2 = base.join("sim2");
    let mut argv2 = argv.clone();
    let pos = argv2.iter().position(|a| a == "--out").unwrap();
    argv2[pos + 1] = d2.display().to_string();
    run(&argv2);
    for name in ["egm.egmr", "lat.csv", "cells.egmr"] {
        assert_eq!(
            read(d1.join(name)),
            read(d2.join(name)),
            "{name} differs between runs"
        );
    }

    // analyze twice from its manifest.
    let a1 = base.join("an1");
    run(&[
        "analyze".into(),
        "--in".into(),
        d1.join("egm.egmr").display().to_string(),
        "--out".into(),
        a1.display().to_string(),
        "--no-filter".into(),
    ]);
    let argv = egmsigma::dataio::Manifest::read_argv(&a1.join("manifest.txt")).unwrap();
    let a2 = base.join("an2");
    let mut argv2 = argv.clone();
    let pos = argv2.iter().position(|a| a == "--out").unwrap();
    argv2[pos + 1] = a2.display().to_string();
    run(&argv2);
    for name in ["profiles.csv", "bmat_0.csv", "segmentation.txt"] {
        assert_eq!(read(a1.join(name)), read(a2.join(name)), "{name} differs");
    }

    // map twice from its manifest.
    let m1 = base.join("map1");
    run(&[
        "map".into(),
        "--in".into(),
        d1.join("egm.egmr").display().to_string(),
        "--out".into(),
        m1.display().to_string(),
        "--compare".into(),
    ]);
    let argv = egmsigma::dataio::Manifest::read_argv(&m1.join("manifest.txt")).unwrap();
    let m2 = base.join("map2");
    let mut argv2 = argv.clone();
    let pos = argv2.iter().position(|a| a == "--out").unwrap();
    argv2[pos + 1] = m2.display().to_string();
    run(&argv2);
    for name in [
        "sigma2_map.csv",
        "sigma2_map.pgm",
        "activation.csv",
        "blocks.csv",
        "comparison.txt",
    ] {
        assert_eq!(read(m1.join(name)), read(m2.join(name)), "{name} differs");
    }

    // stats twice on a small hand-built table.
    let table = base.join("features.csv");
    let mut text = String::from("recording,location,rhythm,beat,sigma2_norm,nsigma1,nsigma2\n");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for loc in ["RA1", "LA2"] {
        for rhythm in ["SR", "AF"] {
            for beat in 0..5 {
                let v: f64 = if rhythm == "SR" {
                    rng.gen_range(0.05..0.15)
                } else {
                    rng.gen_range(0.2..0.3)
                };
                text.push_str(&format!("r0,{loc},{rhythm},{beat},{v:.6},1.0,{v:.6}\n"));
            }
        }
    }
    std::fs::write(&table, text).unwrap();
    let s1 = base.join("st1");
    run(&[
        "stats".into(),
        "--in".into(),
        table.display().to_string(),
        "--out".into(),
        s1.display().to_string(),
    ]);
    let argv = egmsigma::dataio::Manifest::read_argv(&s1.join("manifest.txt")).unwrap();
    let s2 = base.join("st2");
    let mut argv2 = argv.clone();
    let pos = argv2.iter().position(|a| a == "--out").unwrap();
    argv2[pos + 1] = s2.display().to_string();
    run(&argv2);
    for name in ["group_summary.csv", "rank_sum.csv", "thresholds.csv"] {
        assert_eq!(read(s1.join(name)), read(s2.join(name)), "{name} differs");
    }

    // render twice.
    let p1 = base.join("r1.pgm");
    let p2 = base.join("r2.pgm");
    for p in [&p1, &p2] {
        run(&[
            "render".into(),
            "--map".into(),
            m1.join("sigma2_map.csv").display().to_string(),
            "--out".into(),
            p.display().to_string(),
        ]);
    }
    assert_eq!(read(p1), read(p2));

    std::fs::remove_dir_all(&base).ok();
    println!(
        "acceptance criterion 12: PASS (simulate/analyze/map/stats/render reruns are byte-identical)"
    );
}
