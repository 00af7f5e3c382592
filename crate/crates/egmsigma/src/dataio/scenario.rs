//! Scenario configuration: a sectioned key-value text format describing the
//! tissue grid, conductivity primitives, morphology regions, stimuli,
//! electrode array, and run parameters.
//!
//! ```text
//! [tissue]
//! rows = 200
//! cols = 200
//! spacing_mm = 0.1
//!
//! [conductivity.base]
//! kind = uniform
//! value = 1.0
//!
//! [conductivity.block]
//! kind = line
//! value = 0.01
//! from_cell = 40, 160      # row, col
//! to_cell = 160, 40
//! width_cells = 8
//!
//! [morphology.right]       # adds bank slot 1, 2, ... in section order
//! region = rect
//! row0 = 0
//! col0 = 100
//! rows = 200
//! cols = 100
//! plateau_ms = 80          # template parameters, defaulted when absent
//!
//! [stimuli]
//! stim = 0, 0, 0.0         # row, col, onset_ms
//! line = 0, 0, 0, 199, 0.0 # row0, col0, row1, col1, onset_ms
//!
//! [array]
//! rows = 10
//! cols = 10
//! pitch_mm = 2.0
//! z0_mm = 1.0
//!
//! [run]
//! v0_mm_per_ms = 0.5
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::leadfield::ElectrodeArray;
use crate::simulation::{ApParams, Stimulus, TissueModel};

/// Simulation-run parameters with their defaults resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub rate_hz: f64,
    /// None means: derived from the solved activation field at run time.
    pub duration_ms: Option<f64>,
    pub v0_mm_per_ms: f64,
    pub seed: u64,
    pub noise_std: f64,
    /// Scale templates to unit l2 deviation before synthesis.
    pub normalize_templates: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            rate_hz: 1000.0,
            duration_ms: None,
            v0_mm_per_ms: 0.5,
            seed: 0,
            noise_std: 0.0,
            normalize_templates: true,
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub tissue: TissueModel,
    pub array: ElectrodeArray,
    pub run: RunParams,
    /// Template bank parameters; slot 0 is the default morphology, further
    /// slots come from `[morphology.*]` sections in file order.
    pub templates: Vec<ApParams>,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

fn parse_sections(path: &Path, text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                context: format!("line {}", line_no + 1),
                detail: "unterminated section header".into(),
            })?;
            sections.push(Section {
                name: name.trim().to_string(),
                line: line_no + 1,
                entries: Vec::new(),
            });
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            context: format!("line {}", line_no + 1),
            detail: format!("expected key = value, got {line:?}"),
        })?;
        let section = sections.last_mut().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            context: format!("line {}", line_no + 1),
            detail: "key outside any [section]".into(),
        })?;
        section
            .entries
            .push((k.trim().to_string(), v.trim().to_string(), line_no + 1));
    }
    Ok(sections)
}

/// Helper that tracks which keys were consumed so unknown keys can be
/// rejected with their location.
struct KeyBag<'a> {
    path: &'a Path,
    section: &'a Section,
    used: Vec<bool>,
}

impl<'a> KeyBag<'a> {
    fn new(path: &'a Path, section: &'a Section) -> Self {
        KeyBag {
            path,
            section,
            used: vec![false; section.entries.len()],
        }
    }

    fn err(&self, line: usize, detail: String) -> Error {
        Error::Parse {
            path: self.path.display().to_string(),
            context: format!("section [{}], line {line}", self.section.name),
            detail,
        }
    }

    fn get(&mut self, key: &str) -> Option<(String, usize)> {
        for (i, (k, v, line)) in self.section.entries.iter().enumerate() {
            if k == key && !self.used[i] {
                self.used[i] = true;
                return Some((v.clone(), *line));
            }
        }
        None
    }

    fn get_all(&mut self, key: &str) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        for (i, (k, v, line)) in self.section.entries.iter().enumerate() {
            if k == key {
                self.used[i] = true;
                out.push((v.clone(), *line));
            }
        }
        out
    }

    fn f64_of(&self, raw: &str, line: usize) -> Result<f64> {
        raw.parse::<f64>()
            .map_err(|_| self.err(line, format!("expected a number, got {raw:?}")))
    }

    fn req_f64(&mut self, key: &str) -> Result<(f64, usize)> {
        let (raw, line) = self
            .get(key)
            .ok_or_else(|| self.err(self.section.line, format!("missing key {key:?}")))?;
        Ok((self.f64_of(&raw, line)?, line))
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<(f64, usize)>> {
        match self.get(key) {
            Some((raw, line)) => Ok(Some((self.f64_of(&raw, line)?, line))),
            None => Ok(None),
        }
    }

    fn req_usize(&mut self, key: &str) -> Result<(usize, usize)> {
        let (v, line) = self.req_f64(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(self.err(line, format!("{key} must be a nonnegative integer, got {v}")));
        }
        Ok((v as usize, line))
    }

    fn numbers(&self, raw: &str, line: usize, want: usize, what: &str) -> Result<Vec<f64>> {
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        if parts.len() != want {
            return Err(self.err(
                line,
                format!("{what} needs {want} comma-separated numbers, got {raw:?}"),
            ));
        }
        parts
            .iter()
            .map(|p| self.f64_of(p, line))
            .collect::<Result<Vec<f64>>>()
    }

    fn finish(self) -> Result<()> {
        for (i, (k, _, line)) in self.section.entries.iter().enumerate() {
            if !self.used[i] {
                return Err(self.err(*line, format!("unknown key {k:?}")));
            }
        }
        Ok(())
    }
}

/// Parse and validate a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let sections = parse_sections(path, &text)?;

    let find = |name: &str| sections.iter().find(|s| s.name == name);
    let perr = |detail: String| Error::Parse {
        path: path.display().to_string(),
        context: "file".into(),
        detail,
    };

    // [tissue]
    let tissue_sec = find("tissue").ok_or_else(|| perr("missing [tissue] section".into()))?;
    let mut bag = KeyBag::new(path, tissue_sec);
    let (rows, _) = bag.req_usize("rows")?;
    let (cols, _) = bag.req_usize("cols")?;
    let (spacing, sp_line) = bag.req_f64("spacing_mm")?;
    if !(spacing > 0.0) {
        return Err(bag.err(sp_line, format!("spacing_mm must be positive, got {spacing}")));
    }
    bag.finish()?;
    if rows == 0 || cols == 0 {
        return Err(perr("tissue grid must be non-empty".into()));
    }

    let mut tissue = TissueModel::uniform(rows, cols, spacing);

    // [conductivity.*]: one optional uniform base plus patches.
    // Overlapping patches with different values contradict each other.
    let mut base: Option<(f64, String)> = None;
    let mut patch_owner: Vec<Option<(f64, usize)>> = vec![None; rows * cols];
    let mut patch_names: Vec<String> = Vec::new();
    for sec in sections.iter().filter(|s| s.name.starts_with("conductivity.")) {
        let mut bag = KeyBag::new(path, sec);
        let (kind, kind_line) = bag
            .get("kind")
            .ok_or_else(|| bag.err(sec.line, "missing key \"kind\"".into()))?;
        let (value, val_line) = bag.req_f64("value")?;
        if !(value >= 0.0) || !value.is_finite() {
            return Err(bag.err(val_line, format!("conductivity must be >= 0, got {value}")));
        }
        let mut cells: Vec<usize> = Vec::new();
        match kind.as_str() {
            "uniform" => {
                if let Some((prev, ref prev_sec)) = base {
                    if prev != value {
                        return Err(bag.err(
                            kind_line,
                            format!(
                                "uniform conductivity {value} contradicts [{prev_sec}] = {prev}"
                            ),
                        ));
                    }
                }
                base = Some((value, sec.name.clone()));
            }
            "rect" => {
                let (r0, _) = bag.req_usize("row0")?;
                let (c0, _) = bag.req_usize("col0")?;
                let (nr, nr_line) = bag.req_usize("rows")?;
                let (nc, nc_line) = bag.req_usize("cols")?;
                if nr == 0 || nc == 0 {
                    return Err(bag.err(nr_line.max(nc_line), "degenerate rectangle".into()));
                }
                if r0 + nr > rows || c0 + nc > cols {
                    return Err(bag.err(
                        nr_line,
                        format!("rectangle {r0},{c0} + {nr}x{nc} leaves the {rows}x{cols} grid"),
                    ));
                }
                for r in r0..r0 + nr {
                    for c in c0..c0 + nc {
                        cells.push(r * cols + c);
                    }
                }
            }
            "line" => {
                let (from_raw, from_line) = bag
                    .get("from_cell")
                    .ok_or_else(|| bag.err(sec.line, "missing key \"from_cell\"".into()))?;
                let from = bag.numbers(&from_raw, from_line, 2, "from_cell")?;
                let (to_raw, to_line) = bag
                    .get("to_cell")
                    .ok_or_else(|| bag.err(sec.line, "missing key \"to_cell\"".into()))?;
                let to = bag.numbers(&to_raw, to_line, 2, "to_cell")?;
                let (width, w_line) = bag.req_f64("width_cells")?;
                if !(width > 0.0) {
                    return Err(bag.err(w_line, format!("width_cells must be positive, got {width}")));
                }
                for r in 0..rows {
                    for c in 0..cols {
                        let d = point_segment_distance(
                            c as f64,
                            r as f64,
                            from[1],
                            from[0],
                            to[1],
                            to[0],
                        );
                        if d <= width / 2.0 {
                            cells.push(r * cols + c);
                        }
                    }
                }
                if cells.is_empty() {
                    return Err(bag.err(w_line, "line patch covers no cells".into()));
                }
            }
            other => {
                return Err(bag.err(
                    kind_line,
                    format!("unknown conductivity kind {other:?} (uniform|rect|line)"),
                ))
            }
        }
        bag.finish()?;
        let patch_id = patch_names.len();
        patch_names.push(sec.name.clone());
        for cell in cells {
            if let Some((prev, owner)) = patch_owner[cell] {
                if prev != value {
                    return Err(perr(format!(
                        "conductivity patches [{}] and [{}] overlap with different values {} vs {}",
                        patch_names[owner], sec.name, prev, value
                    )));
                }
            } else {
                patch_owner[cell] = Some((value, patch_id));
            }
        }
    }
    let base_value = base.map(|(v, _)| v).unwrap_or(1.0);
    for (cell, c) in tissue.conductivity.iter_mut().enumerate() {
        *c = match patch_owner[cell] {
            Some((v, _)) => v,
            None => base_value,
        };
    }

    // [morphology.*]: template bank slots with regions.
    let mut templates = vec![ApParams::default()];
    for sec in sections.iter().filter(|s| s.name.starts_with("morphology.")) {
        let mut bag = KeyBag::new(path, sec);
        let defaults = ApParams::default();
        let params = ApParams {
            upstroke_ms: bag.opt_f64("upstroke_ms")?.map_or(defaults.upstroke_ms, |v| v.0),
            plateau_mv: bag.opt_f64("plateau_mv")?.map_or(defaults.plateau_mv, |v| v.0),
            plateau_ms: bag.opt_f64("plateau_ms")?.map_or(defaults.plateau_ms, |v| v.0),
            repol_tau_ms: bag.opt_f64("repol_tau_ms")?.map_or(defaults.repol_tau_ms, |v| v.0),
        };
        let slot = templates.len();
        templates.push(params);
        let (region, region_line) = bag
            .get("region")
            .ok_or_else(|| bag.err(sec.line, "missing key \"region\"".into()))?;
        match region.as_str() {
            "all" => {
                for id in tissue.morphology_id.iter_mut() {
                    *id = slot;
                }
            }
            "rect" => {
                let (r0, _) = bag.req_usize("row0")?;
                let (c0, _) = bag.req_usize("col0")?;
                let (nr, _) = bag.req_usize("rows")?;
                let (nc, nc_line) = bag.req_usize("cols")?;
                if r0 + nr > rows || c0 + nc > cols {
                    return Err(bag.err(
                        nc_line,
                        format!("region {r0},{c0} + {nr}x{nc} leaves the {rows}x{cols} grid"),
                    ));
                }
                for r in r0..r0 + nr {
                    for c in c0..c0 + nc {
                        tissue.morphology_id[r * cols + c] = slot;
                    }
                }
            }
            "line" => {
                let (from_raw, from_line) = bag
                    .get("from_cell")
                    .ok_or_else(|| bag.err(sec.line, "missing key \"from_cell\"".into()))?;
                let from = bag.numbers(&from_raw, from_line, 2, "from_cell")?;
                let (to_raw, to_line) = bag
                    .get("to_cell")
                    .ok_or_else(|| bag.err(sec.line, "missing key \"to_cell\"".into()))?;
                let to = bag.numbers(&to_raw, to_line, 2, "to_cell")?;
                let (width, w_line) = bag.req_f64("width_cells")?;
                if !(width > 0.0) {
                    return Err(
                        bag.err(w_line, format!("width_cells must be positive, got {width}"))
                    );
                }
                for r in 0..rows {
                    for c in 0..cols {
                        let d = point_segment_distance(
                            c as f64, r as f64, from[1], from[0], to[1], to[0],
                        );
                        if d <= width / 2.0 {
                            tissue.morphology_id[r * cols + c] = slot;
                        }
                    }
                }
            }
            other => {
                return Err(bag.err(
                    region_line,
                    format!("unknown morphology region {other:?} (all|rect|line)"),
                ))
            }
        }
        bag.finish()?;
    }

    // [stimuli]
    let stim_sec = find("stimuli").ok_or_else(|| perr("missing [stimuli] section".into()))?;
    let mut bag = KeyBag::new(path, stim_sec);
    for (raw, line) in bag.get_all("stim") {
        let v = bag.numbers(&raw, line, 3, "stim")?;
        let (r, c, onset) = (v[0], v[1], v[2]);
        if r.fract() != 0.0 || c.fract() != 0.0 || r < 0.0 || c < 0.0 {
            return Err(bag.err(line, format!("stim cell must be integer row, col: {raw:?}")));
        }
        let (r, c) = (r as usize, c as usize);
        if r >= rows || c >= cols {
            return Err(bag.err(line, format!("stim cell {r},{c} outside {rows}x{cols} grid")));
        }
        tissue.stimuli.push(Stimulus {
            cell: r * cols + c,
            onset_ms: onset,
        });
    }
    for (raw, line) in bag.get_all("line") {
        let v = bag.numbers(&raw, line, 5, "line")?;
        let (r0, c0, r1, c1, onset) = (v[0], v[1], v[2], v[3], v[4]);
        let steps = ((r1 - r0).abs().max((c1 - c0).abs()) as usize).max(1);
        for k in 0..=steps {
            let f = k as f64 / steps as f64;
            let r = (r0 + f * (r1 - r0)).round();
            let c = (c0 + f * (c1 - c0)).round();
            if r < 0.0 || c < 0.0 || r as usize >= rows || c as usize >= cols {
                return Err(bag.err(line, format!("stimulus line leaves the grid: {raw:?}")));
            }
            let cell = r as usize * cols + c as usize;
            if !tissue.stimuli.iter().any(|s| s.cell == cell) {
                tissue.stimuli.push(Stimulus {
                    cell,
                    onset_ms: onset,
                });
            }
        }
    }
    bag.finish()?;
    if tissue.stimuli.is_empty() {
        return Err(perr("[stimuli] defines no stimulus".into()));
    }

    // [array]
    let array_sec = find("array").ok_or_else(|| perr("missing [array] section".into()))?;
    let mut bag = KeyBag::new(path, array_sec);
    let (arows, _) = bag.req_usize("rows")?;
    let (acols, _) = bag.req_usize("cols")?;
    let (pitch, p_line) = bag.req_f64("pitch_mm")?;
    if !(pitch > 0.0) {
        return Err(bag.err(p_line, format!("pitch_mm must be positive, got {pitch}")));
    }
    let (z0, z_line) = bag.opt_f64("z0_mm")?.map_or((1.0, 0), |v| v);
    if !(z0 > 0.0) {
        return Err(bag.err(z_line, format!("z0_mm must be positive, got {z0}")));
    }
    let gain = bag.opt_f64("gain")?.map_or(1.0, |v| v.0);
    let center = match bag.get("center_mm") {
        Some((raw, line)) if raw != "auto" => {
            let v = bag.numbers(&raw, line, 2, "center_mm")?;
            (v[0], v[1])
        }
        _ => (
            (cols as f64 - 1.0) * spacing / 2.0,
            (rows as f64 - 1.0) * spacing / 2.0,
        ),
    };
    bag.finish()?;
    let mut array = ElectrodeArray::grid(arows, acols, pitch, center.0, center.1, z0);
    array.gain = gain;
    array.validate()?;

    // [run]
    let mut run = RunParams::default();
    if let Some(run_sec) = find("run") {
        let mut bag = KeyBag::new(path, run_sec);
        if let Some((v, line)) = bag.opt_f64("rate_hz")? {
            if !(v > 0.0) {
                return Err(bag.err(line, "rate_hz must be positive".into()));
            }
            run.rate_hz = v;
        }
        if let Some((raw, line)) = bag.get("duration_ms") {
            if raw != "auto" {
                let v = bag.f64_of(&raw, line)?;
                if !(v > 0.0) {
                    return Err(bag.err(line, "duration_ms must be positive or auto".into()));
                }
                run.duration_ms = Some(v);
            }
        }
        if let Some((v, line)) = bag.opt_f64("v0_mm_per_ms")? {
            if !(v > 0.0) {
                return Err(bag.err(line, "v0_mm_per_ms must be positive".into()));
            }
            run.v0_mm_per_ms = v;
        }
        if let Some((v, line)) = bag.opt_f64("seed")? {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(bag.err(line, "seed must be a nonnegative integer".into()));
            }
            run.seed = v as u64;
        }
        if let Some((v, line)) = bag.opt_f64("noise_std")? {
            if !(v >= 0.0) {
                return Err(bag.err(line, "noise_std must be >= 0".into()));
            }
            run.noise_std = v;
        }
        if let Some((raw, line)) = bag.get("normalize_templates") {
            run.normalize_templates = match raw.as_str() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(bag.err(line, format!("expected true|false, got {other:?}")))
                }
            };
        }
        bag.finish()?;
    }

    // Unknown sections are rejected too.
    for sec in &sections {
        let known = sec.name == "tissue"
            || sec.name == "stimuli"
            || sec.name == "array"
            || sec.name == "run"
            || sec.name.starts_with("conductivity.")
            || sec.name.starts_with("morphology.");
        if !known {
            return Err(Error::Parse {
                path: path.display().to_string(),
                context: format!("line {}", sec.line),
                detail: format!("unknown section [{}]", sec.name),
            });
        }
    }

    tissue.validate(templates.len())?;
    Ok(Scenario {
        tissue,
        array,
        run,
        templates,
    })
}

/// Distance from point (px, py) to the segment (ax, ay)-(bx, by), cell units.
fn point_segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let dx = bx - ax;
    let dy = by - ay;
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let cx = ax + t * dx;
    let cy = ay + t * dy;
    ((px - cx) * (px - cx) + (py - cy) * (py - cy)).sqrt()
}
