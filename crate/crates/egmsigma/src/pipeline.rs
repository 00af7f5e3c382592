//! Implementations behind the CLI commands. Each run writes its artifacts
//! plus a manifest that records the resolved command line and every
//! effective parameter.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::{
    parse_scenario, read_annotations, read_csv_recording, read_recording, write_recording,
    Manifest,
};
use crate::error::{Error, Result};
use crate::latmap::{detect_blocks, egm_activation_map, BLOCK_THRESHOLD_MS};
use crate::leadfield::{synthesize_egm_streamed, EgmRecording, ElectrodeArray};
use crate::mat::Mat;
use crate::sigmamap::{sigma2_map, Sigma2Map, RENDER_CLAMP};
use crate::simulation::{generate_ap_template, solve_lat, APTemplate, ApParams};
use crate::spectral::{bandpass, detect_r_peaks, segment_beats, BeatWindow};
use crate::stats::{boxplot_summary, rank_sum_test, BeatFeatureRow, BeatFeatureTable, Rhythm};
use crate::svdcore::svd_profile;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Template duration long enough for the waveform to settle: the envelope
/// precondition plus margin, rounded to a whole millisecond.
fn template_duration_ms(p: &ApParams) -> f64 {
    (p.upstroke_ms + p.plateau_ms + 8.0 * p.repol_tau_ms).ceil()
}

pub fn build_template_bank(
    params: &[ApParams],
    rate: f64,
    normalize: bool,
) -> Result<Vec<APTemplate>> {
    // One shared duration keeps every template the same length.
    let dur = params
        .iter()
        .map(template_duration_ms)
        .fold(0.0f64, f64::max);
    params
        .iter()
        .map(|p| {
            let t = generate_ap_template(*p, rate, dur)?;
            Ok(if normalize { t.normalized() } else { t })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub cell_signals: bool,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let scenario = parse_scenario(&args.config)?;
    let run = &scenario.run;

    let bank = build_template_bank(&scenario.templates, run.rate_hz, run.normalize_templates)?;
    let lat = solve_lat(&scenario.tissue, run.v0_mm_per_ms)?;
    for w in &lat.warnings {
        eprintln!("warning: {w}");
    }

    let max_template_ms = bank
        .iter()
        .map(|t| t.duration_ms())
        .fold(0.0f64, f64::max);
    let duration_ms = match run.duration_ms {
        Some(d) => d,
        None => (lat.field.max_finite().unwrap_or(0.0) + max_template_ms + 1.0).ceil(),
    };

    let amplitudes = vec![1.0; scenario.tissue.n_cells()];
    let mut egm = synthesize_egm_streamed(
        &scenario.array,
        &scenario.tissue,
        &lat.field,
        &bank,
        &amplitudes,
        duration_ms,
    )?;

    if run.noise_std > 0.0 {
        add_gaussian_noise(&mut egm.samples, run.noise_std, run.seed);
    }

    let egm_path = args.out.join("egm.egmr");
    write_recording(&egm, &egm_path)?;

    let lat_path = args.out.join("lat.csv");
    write_text(&lat_path, &lat_field_csv(&lat.field))?;

    let mut outputs = vec!["egm.egmr".to_string(), "lat.csv".to_string()];
    if args.cell_signals {
        let cells = crate::simulation::synthesize_cell_signals(
            &scenario.tissue,
            &lat.field,
            &bank,
            &amplitudes,
            duration_ms,
        )?;
        let cell_rec = EgmRecording {
            samples: cells.samples,
            rate: cells.rate,
            array: ElectrodeArray {
                positions: (0..scenario.tissue.n_cells())
                    .map(|c| scenario.tissue.cell_xy(c))
                    .collect(),
                height: 1.0,
                gain: 1.0,
                layout: Some((scenario.tissue.rows, scenario.tissue.cols)),
            },
            annotations: Vec::new(),
        };
        write_recording(&cell_rec, &args.out.join("cells.egmr"))?;
        outputs.push("cells.egmr".to_string());
    }

    let mut argv = vec![
        "simulate".to_string(),
        "--config".to_string(),
        args.config.display().to_string(),
        "--out".to_string(),
        args.out.display().to_string(),
    ];
    if !args.cell_signals {
        argv.push("--no-cell-signals".to_string());
    }
    let mut man = Manifest::new("simulate", &argv);
    man.input(&args.config)?;
    man.param("tissue.rows", scenario.tissue.rows);
    man.param("tissue.cols", scenario.tissue.cols);
    man.param("tissue.spacing_mm", scenario.tissue.spacing);
    man.param("array.electrodes", scenario.array.len());
    man.param("array.z0_mm", scenario.array.height);
    man.param("array.gain", scenario.array.gain);
    man.param("run.rate_hz", run.rate_hz);
    man.param("run.duration_ms", duration_ms);
    man.param("run.v0_mm_per_ms", run.v0_mm_per_ms);
    man.param("run.seed", run.seed);
    man.param("run.noise_std", run.noise_std);
    man.param("run.normalize_templates", run.normalize_templates);
    man.param("templates", scenario.templates.len());
    for o in &outputs {
        man.output(o);
    }
    man.write(&args.out.join("manifest.txt"))?;
    Ok(())
}

fn add_gaussian_noise(samples: &mut Mat, std: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = samples.data_mut();
    let mut i = 0;
    // Box-Muller pairs keep the stream deterministic for a given seed.
    while i < data.len() {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        data[i] += std * r * theta.cos();
        if i + 1 < data.len() {
            data[i + 1] += std * r * theta.sin();
        }
        i += 2;
    }
}

fn lat_field_csv(field: &crate::simulation::LATField) -> String {
    let mut out = String::new();
    for r in 0..field.rows {
        let line: Vec<String> = (0..field.cols)
            .map(|c| {
                let t = field.tau[r * field.cols + c];
                if t.is_finite() {
                    format!("{t:.6}")
                } else {
                    "inf".to_string()
                }
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

pub struct AnalyzeArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    /// Band edges in Hz; None disables filtering.
    pub band: Option<(f64, f64)>,
    pub order: usize,
    /// (start, end) ms before the R peak.
    pub window: (f64, f64),
    pub annotations: Option<PathBuf>,
    pub ecg_channel: Option<usize>,
    /// Sample rate for CSV inputs.
    pub csv_rate: Option<f64>,
    /// Multiplier applied to CSV samples (e.g. an LSB-to-mV factor for
    /// 16-bit integer exports).
    pub csv_scale: Option<f64>,
}

fn load_recording(
    input: &Path,
    csv_rate: Option<f64>,
    csv_scale: Option<f64>,
) -> Result<EgmRecording> {
    if input.extension().and_then(|e| e.to_str()) == Some("csv") {
        let rate = csv_rate.ok_or_else(|| {
            Error::InvalidArgument("CSV input needs --csv-rate <samples/s>".into())
        })?;
        let mut rec = read_csv_recording(input, rate, None)?;
        if let Some(scale) = csv_scale {
            if !(scale > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "--csv-scale must be positive, got {scale}"
                )));
            }
            for v in rec.samples.data_mut() {
                *v *= scale;
            }
        }
        Ok(rec)
    } else {
        read_recording(input)
    }
}

/// Beat markers: annotation file when given, else Pan-Tompkins on the
/// designated ECG channel, else the whole recording as one synthetic beat.
fn beat_markers(
    rec: &EgmRecording,
    annotations: &Option<PathBuf>,
    ecg_channel: Option<usize>,
) -> Result<(Option<Vec<f64>>, crate::dataio::Annotations)> {
    if let Some(path) = annotations {
        let ann = read_annotations(path)?;
        if ann.beats_ms.is_empty() {
            return Err(Error::invalid("annotations", "no beat markers"));
        }
        return Ok((Some(ann.beats_ms.clone()), ann));
    }
    if let Some(ch) = ecg_channel {
        if ch >= rec.channels() {
            return Err(Error::InvalidArgument(format!(
                "ECG channel {ch} out of range ({} channels)",
                rec.channels()
            )));
        }
        let det = detect_r_peaks(rec.samples.row(ch), rec.rate)?;
        if let Some(w) = &det.warning {
            eprintln!("warning: {w}");
        }
        return Ok((Some(det.peaks_ms), crate::dataio::Annotations::default()));
    }
    Ok((None, crate::dataio::Annotations::default()))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let rec = load_recording(&args.input, args.csv_rate, args.csv_scale)?;

    let filtered = match args.band {
        Some((lo, hi)) => bandpass(&rec, lo, hi, args.order)?,
        None => rec.clone(),
    };

    let (markers, ann) = beat_markers(&rec, &args.annotations, args.ecg_channel)?;
    let (beats, report) = match markers {
        Some(peaks) => {
            let seg = segment_beats(&filtered, &peaks, args.window)?;
            let mut report = format!(
                "beats: {} kept, {} skipped\n",
                seg.beats.len(),
                seg.skipped.len()
            );
            for (t, why) in &seg.skipped {
                report.push_str(&format!("skipped beat at {t} ms: {why}\n"));
            }
            (seg.beats, report)
        }
        None => {
            let beat = BeatWindow::whole_recording(&filtered)?;
            (vec![beat], "beats: whole recording as beat 0\n".to_string())
        }
    };

    let mut profiles_csv = String::new();
    let mut feature_rows: Vec<BeatFeatureRow> = Vec::new();
    let location = ann.labels.get("location").cloned();
    let rhythm = ann
        .labels
        .get("rhythm")
        .map(|r| Rhythm::parse(r))
        .transpose()?;
    let recording_id = ann.labels.get("recording").cloned().unwrap_or_else(|| {
        args.input
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "recording".to_string())
    });

    for (k, beat) in beats.iter().enumerate() {
        let sm = crate::spectral::magnitude_matrix(beat)?;
        write_text(
            &args.out.join(format!("bmat_{k}.csv")),
            &spectral_csv(&sm),
        )?;
        let profile = svd_profile(&sm)?;
        if k == 0 {
            let kf = profile.sigmas.len();
            let mut header = vec!["beat".to_string()];
            header.extend((1..=kf).map(|i| format!("sigma{i}")));
            header.extend((1..=kf).map(|i| format!("nsigma{i}")));
            profiles_csv.push_str(&header.join(","));
            profiles_csv.push('\n');
        }
        let mut row = vec![format!("{k}")];
        row.extend(profile.sigmas.iter().map(|v| format!("{v:.12e}")));
        row.extend(profile.normalized.iter().map(|v| format!("{v:.12e}")));
        profiles_csv.push_str(&row.join(","));
        profiles_csv.push('\n');

        if let (Some(loc), Some(rh)) = (&location, rhythm) {
            feature_rows.push(BeatFeatureRow {
                recording_id: recording_id.clone(),
                location: loc.clone(),
                rhythm: rh,
                beat_index: k,
                sigma2_norm: profile.sigma2_norm(),
                normalized: profile.normalized.clone(),
            });
        }
    }

    write_text(&args.out.join("profiles.csv"), &profiles_csv)?;
    write_text(&args.out.join("segmentation.txt"), &report)?;
    let mut outputs = vec![
        "profiles.csv".to_string(),
        "segmentation.txt".to_string(),
    ];
    for k in 0..beats.len() {
        outputs.push(format!("bmat_{k}.csv"));
    }
    if !feature_rows.is_empty() {
        let table = BeatFeatureTable { rows: feature_rows };
        write_text(&args.out.join("feature_rows.csv"), &feature_table_csv(&table))?;
        outputs.push("feature_rows.csv".to_string());
    }

    let mut argv = vec![
        "analyze".to_string(),
        "--in".to_string(),
        args.input.display().to_string(),
        "--out".to_string(),
        args.out.display().to_string(),
    ];
    match args.band {
        Some((lo, hi)) => {
            argv.push("--band".to_string());
            argv.push(format!("{lo}:{hi}"));
        }
        None => argv.push("--no-filter".to_string()),
    }
    argv.push("--window".to_string());
    argv.push(format!("{}:{}", args.window.0, args.window.1));
    argv.push("--order".to_string());
    argv.push(args.order.to_string());
    if let Some(a) = &args.annotations {
        argv.push("--annotations".to_string());
        argv.push(a.display().to_string());
    }
    if let Some(ch) = args.ecg_channel {
        argv.push("--ecg-channel".to_string());
        argv.push(ch.to_string());
    }
    if let Some(r) = args.csv_rate {
        argv.push("--csv-rate".to_string());
        argv.push(r.to_string());
    }
    if let Some(s) = args.csv_scale {
        argv.push("--csv-scale".to_string());
        argv.push(s.to_string());
    }
    let mut man = Manifest::new("analyze", &argv);
    man.input(&args.input)?;
    if let Some(a) = &args.annotations {
        man.input(a)?;
    }
    man.param("channels", rec.channels());
    man.param("rate_hz", rec.rate);
    man.param(
        "band_hz",
        args.band
            .map(|(lo, hi)| format!("{lo}:{hi}"))
            .unwrap_or_else(|| "none".into()),
    );
    man.param("order", args.order);
    man.param("window_ms", format!("{}:{}", args.window.0, args.window.1));
    man.param("beats", beats.len());
    for o in &outputs {
        man.output(o);
    }
    man.write(&args.out.join("manifest.txt"))?;
    Ok(())
}

fn spectral_csv(sm: &crate::spectral::SpectralMatrix) -> String {
    let mut out = String::new();
    let header: Vec<String> = sm
        .bin_frequencies
        .iter()
        .map(|f| format!("{f:.6}"))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..sm.values.rows() {
        let line: Vec<String> = sm.values.row(r).iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn feature_table_csv(table: &BeatFeatureTable) -> String {
    let mut out = String::from("recording,location,rhythm,beat,sigma2_norm");
    let width = table.rows.first().map_or(0, |r| r.normalized.len());
    for i in 1..=width {
        out.push_str(&format!(",nsigma{i}"));
    }
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{:.12e}",
            r.recording_id,
            r.location,
            r.rhythm.as_str(),
            r.beat_index,
            r.sigma2_norm
        ));
        for v in &r.normalized {
            out.push_str(&format!(",{v:.12e}"));
        }
        out.push('\n');
    }
    out
}

pub fn feature_table_from_csv(path: &Path) -> Result<BeatFeatureTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line_no == 0 || line.trim().is_empty() {
            continue;
        }
        let err = |detail: String| Error::Parse {
            path: path.display().to_string(),
            context: format!("line {}", line_no + 1),
            detail,
        };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 5 {
            return Err(err(format!("expected >= 5 cells, got {}", cells.len())));
        }
        let beat_index: usize = cells[3]
            .parse()
            .map_err(|_| err(format!("bad beat index {:?}", cells[3])))?;
        let sigma2_norm: f64 = cells[4]
            .parse()
            .map_err(|_| err(format!("bad sigma2 {:?}", cells[4])))?;
        if !(0.0..=1.0).contains(&sigma2_norm) {
            return Err(err(format!("sigma2 {sigma2_norm} outside [0,1]")));
        }
        let normalized: std::result::Result<Vec<f64>, _> =
            cells[5..].iter().map(|c| c.parse::<f64>()).collect();
        rows.push(BeatFeatureRow {
            recording_id: cells[0].to_string(),
            location: cells[1].to_string(),
            rhythm: Rhythm::parse(cells[2]).map_err(|e| err(e.to_string()))?,
            beat_index,
            sigma2_norm,
            normalized: normalized.map_err(|_| err("bad profile cell".into()))?,
        });
    }
    Ok(BeatFeatureTable { rows })
}

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

pub struct MapArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub beat: usize,
    pub band: Option<(f64, f64)>,
    pub order: usize,
    pub window: (f64, f64),
    pub annotations: Option<PathBuf>,
    pub ecg_channel: Option<usize>,
    pub compare: bool,
    pub csv_rate: Option<f64>,
    pub csv_scale: Option<f64>,
}

pub fn map_cmd(args: &MapArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let rec = load_recording(&args.input, args.csv_rate, args.csv_scale)?;
    let layout = rec.array.layout.ok_or_else(|| {
        Error::invalid("recording", "sigma2 maps need a rectangular array layout")
    })?;

    let filtered = match args.band {
        Some((lo, hi)) => bandpass(&rec, lo, hi, args.order)?,
        None => rec.clone(),
    };

    let (markers, _) = beat_markers(&rec, &args.annotations, args.ecg_channel)?;
    let beat = match markers {
        Some(peaks) => {
            let seg = segment_beats(&filtered, &peaks, args.window)?;
            seg.beats
                .into_iter()
                .nth(args.beat)
                .ok_or_else(|| Error::InvalidArgument(format!("beat {} not available", args.beat)))?
        }
        None => {
            if args.beat != 0 {
                return Err(Error::InvalidArgument(
                    "recording has no beat markers; only --beat 0 (whole recording) exists".into(),
                ));
            }
            BeatWindow::whole_recording(&filtered)?
        }
    };

    let map = sigma2_map(&beat, layout)?;
    write_text(&args.out.join("sigma2_map.csv"), &map.to_csv())?;
    write_text(&args.out.join("sigma2_map.pgm"), &map.to_pgm())?;
    let mut outputs = vec!["sigma2_map.csv".to_string(), "sigma2_map.pgm".to_string()];

    if args.compare {
        let act = egm_activation_map(&beat, layout)?;
        write_text(&args.out.join("activation.csv"), &activation_csv(&act, layout))?;
        let blocks = detect_blocks(&act, layout, BLOCK_THRESHOLD_MS)?;
        let mut blocks_csv = String::from("channel_a,channel_b\n");
        for (a, b) in &blocks.edges {
            blocks_csv.push_str(&format!("{a},{b}\n"));
        }
        write_text(&args.out.join("blocks.csv"), &blocks_csv)?;
        write_text(
            &args.out.join("comparison.txt"),
            &comparison_report(&map, &blocks, layout),
        )?;
        outputs.extend(
            ["activation.csv", "blocks.csv", "comparison.txt"]
                .iter()
                .map(|s| s.to_string()),
        );
    }

    let mut argv = vec![
        "map".to_string(),
        "--in".to_string(),
        args.input.display().to_string(),
        "--out".to_string(),
        args.out.display().to_string(),
        "--beat".to_string(),
        args.beat.to_string(),
    ];
    if let Some((lo, hi)) = args.band {
        argv.push("--band".to_string());
        argv.push(format!("{lo}:{hi}"));
    }
    if let Some(a) = &args.annotations {
        argv.push("--annotations".to_string());
        argv.push(a.display().to_string());
    }
    if let Some(ch) = args.ecg_channel {
        argv.push("--ecg-channel".to_string());
        argv.push(ch.to_string());
    }
    if args.compare {
        argv.push("--compare".to_string());
    }
    let mut man = Manifest::new("map", &argv);
    man.input(&args.input)?;
    man.param("layout", format!("{}x{}", layout.0, layout.1));
    man.param("beat", args.beat);
    man.param("window", "3x3");
    man.param("render_clamp", RENDER_CLAMP);
    man.param("block_threshold_ms", BLOCK_THRESHOLD_MS);
    for o in &outputs {
        man.output(o);
    }
    man.write(&args.out.join("manifest.txt"))?;
    Ok(())
}

fn activation_csv(map: &crate::latmap::ActivationMap, layout: (usize, usize)) -> String {
    let (rows, cols) = layout;
    let mut out = String::new();
    for r in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|c| match map.lat_ms[r * cols + c] {
                Some(t) => format!("{t:.4}"),
                None => "nan".to_string(),
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn comparison_report(map: &Sigma2Map, blocks: &crate::latmap::BlockSet, layout: (usize, usize)) -> String {
    let mut hot = 0usize;
    for &v in map.values.data() {
        if v >= 0.05 {
            hot += 1;
        }
    }
    let mut out = String::new();
    out.push_str(&format!("array layout: {}x{}\n", layout.0, layout.1));
    out.push_str(&format!("sigma2 map: {}x{} pixels, max {:.4}\n", map.values.rows(), map.values.cols(), map.max_value()));
    out.push_str(&format!("pixels with normalized sigma2 >= 0.05: {hot}\n"));
    out.push_str(&format!(
        "conduction-block edges (|dLAT| >= {} ms): {}\n",
        blocks.threshold_ms,
        blocks.edges.len()
    ));
    out.push_str(
        "note: the activation map reports one time per channel; sites with double potentials \
         keep only the strongest deflection there, while the sigma2 map responds to the mixture.\n",
    );
    out
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

pub struct StatsArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub group_by: String,
}

pub fn stats_cmd(args: &StatsArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let keys: Vec<&str> = args.group_by.split(',').map(str::trim).collect();
    for k in &keys {
        if !["location", "rhythm"].contains(k) {
            return Err(Error::InvalidArgument(format!(
                "unsupported group-by key {k:?} (location, rhythm)"
            )));
        }
    }
    let table = feature_table_from_csv(&args.input)?;

    // Group summaries.
    let mut groups: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for r in &table.rows {
        let mut parts = Vec::new();
        if keys.contains(&"location") {
            parts.push(r.location.clone());
        }
        if keys.contains(&"rhythm") {
            parts.push(r.rhythm.as_str().to_string());
        }
        groups.entry(parts.join("/")).or_default().push(r.sigma2_norm);
    }
    let mut summary = String::from("group,n,mean,min,q25,median,q75,max,outliers\n");
    for (g, vals) in &groups {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let b = boxplot_summary(vals)?;
        summary.push_str(&format!(
            "{g},{},{mean:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            vals.len(),
            b.min,
            b.q25,
            b.median,
            b.q75,
            b.max,
            b.outliers.len()
        ));
    }
    write_text(&args.out.join("group_summary.csv"), &summary)?;

    // SR vs AF per location.
    let mut pvals = String::from("location,n_sr,n_af,U,p\n");
    let locations: std::collections::BTreeSet<String> =
        table.rows.iter().map(|r| r.location.clone()).collect();
    for loc in &locations {
        let sr = table.group_values(loc, Rhythm::Sr);
        let af = table.group_values(loc, Rhythm::Af);
        if sr.len() >= 3 && af.len() >= 3 {
            let (u, p) = rank_sum_test(&sr, &af)?;
            pvals.push_str(&format!("{loc},{},{},{u},{p:.6e}\n", sr.len(), af.len()));
        }
    }
    write_text(&args.out.join("rank_sum.csv"), &pvals)?;

    let mut thresholds = String::from("location,suggested_threshold\n");
    for (loc, thr) in table.suggested_thresholds() {
        thresholds.push_str(&format!("{loc},{thr:.6}\n"));
    }
    write_text(&args.out.join("thresholds.csv"), &thresholds)?;

    let argv = vec![
        "stats".to_string(),
        "--in".to_string(),
        args.input.display().to_string(),
        "--group-by".to_string(),
        args.group_by.clone(),
        "--out".to_string(),
        args.out.display().to_string(),
    ];
    let mut man = Manifest::new("stats", &argv);
    man.input(&args.input)?;
    man.param("group_by", &args.group_by);
    man.param("rows", table.rows.len());
    for o in ["group_summary.csv", "rank_sum.csv", "thresholds.csv"] {
        man.output(o);
    }
    man.write(&args.out.join("manifest.txt"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

pub struct RenderArgs {
    pub map: PathBuf,
    pub out: PathBuf,
}

pub fn render(args: &RenderArgs) -> Result<()> {
    let text =
        fs::read_to_string(&args.map).map_err(|e| Error::io(args.map.display().to_string(), e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line_no == 0 || line.trim().is_empty() {
            continue; // header
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        rows.push(vals.map_err(|_| Error::Parse {
            path: args.map.display().to_string(),
            context: format!("line {}", line_no + 1),
            detail: "non-numeric cell".into(),
        })?);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: args.map.display().to_string(),
            context: "file".into(),
            detail: "no data rows".into(),
        });
    }
    let mat = Mat::from_rows(&rows)?;
    let map = Sigma2Map {
        values: mat,
        window: 3,
        layout: (0, 0),
        source_beat_index: 0,
    };
    write_text(&args.out, &map.to_pgm())?;
    Ok(())
}
