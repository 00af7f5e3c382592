//! Binary recording format, CSV interchange, and annotation files.
//!
//! The binary layout is channel-major so per-channel analysis (filtering,
//! DFT) streams without strided access. Readers reject malformed input,
//! never repair it.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::leadfield::{EgmRecording, ElectrodeArray};
use crate::mat::Mat;

pub const EGMR_MAGIC: &[u8; 4] = b"EGMR";
pub const EGMR_VERSION: u16 = 1;

/// What went wrong while reading a binary recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatErrorKind {
    BadMagic,
    UnsupportedVersion,
    Truncated,
    NonFinite,
    Header,
}

fn format_err(path: &Path, kind: FormatErrorKind, detail: String) -> Error {
    Error::Format {
        path: path.display().to_string(),
        detail: format!("{kind:?}: {detail}"),
    }
}

/// Write a recording:
/// magic, version u16, channels u32, samples u64, rate f64,
/// layout rows u16 + cols u16 (0,0 when absent), per-channel (x, y) f64 mm,
/// z0 f64, gain f64, then all samples channel-major little-endian f64.
pub fn write_recording(rec: &EgmRecording, path: &Path) -> Result<()> {
    rec.validate()?;
    let m = rec.channels();
    let t = rec.n_samples();
    let mut buf: Vec<u8> =
        Vec::with_capacity(4 + 2 + 4 + 8 + 8 + 4 + 16 * m + 16 + 8 * m * t);
    buf.extend_from_slice(EGMR_MAGIC);
    buf.extend_from_slice(&EGMR_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    buf.extend_from_slice(&(t as u64).to_le_bytes());
    buf.extend_from_slice(&rec.rate.to_le_bytes());
    let (lr, lc) = rec.array.layout.unwrap_or((0, 0));
    buf.extend_from_slice(&(lr as u16).to_le_bytes());
    buf.extend_from_slice(&(lc as u16).to_le_bytes());
    for &(x, y) in &rec.array.positions {
        buf.extend_from_slice(&x.to_le_bytes());
        buf.extend_from_slice(&y.to_le_bytes());
    }
    buf.extend_from_slice(&rec.array.height.to_le_bytes());
    buf.extend_from_slice(&rec.array.gain.to_le_bytes());
    for ch in 0..m {
        for &v in rec.samples.row(ch) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(&buf)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(format_err(
                self.path,
                FormatErrorKind::Truncated,
                format!(
                    "{what} needs bytes {}..{} but file has {}",
                    self.pos,
                    self.pos + n,
                    self.data.len()
                ),
            ));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Read a recording; every header invariant is enforced.
pub fn read_recording(path: &Path) -> Result<EgmRecording> {
    let data = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut cur = Cursor {
        data: &data,
        pos: 0,
        path,
    };
    let magic = cur.take(4, "magic")?;
    if magic != EGMR_MAGIC {
        return Err(format_err(
            path,
            FormatErrorKind::BadMagic,
            format!("expected {:?}, got {:?}", EGMR_MAGIC, magic),
        ));
    }
    let version = cur.u16("version")?;
    if version != EGMR_VERSION {
        return Err(format_err(
            path,
            FormatErrorKind::UnsupportedVersion,
            format!("version {version}, this build reads {EGMR_VERSION}"),
        ));
    }
    let m = cur.u32("channel count")? as usize;
    let t = cur.u64("sample count")? as usize;
    let rate = cur.f64("rate")?;
    let lr = cur.u16("layout rows")? as usize;
    let lc = cur.u16("layout cols")? as usize;
    if m == 0 || t == 0 {
        return Err(format_err(
            path,
            FormatErrorKind::Header,
            format!("empty recording: {m} channels x {t} samples"),
        ));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(format_err(
            path,
            FormatErrorKind::Header,
            format!("rate must be positive and finite, got {rate}"),
        ));
    }
    let layout = if lr == 0 && lc == 0 {
        None
    } else if lr * lc == m {
        Some((lr, lc))
    } else {
        return Err(format_err(
            path,
            FormatErrorKind::Header,
            format!("layout {lr}x{lc} does not cover {m} channels"),
        ));
    };
    let mut positions = Vec::with_capacity(m);
    for i in 0..m {
        let x = cur.f64(&format!("position x of channel {i}"))?;
        let y = cur.f64(&format!("position y of channel {i}"))?;
        positions.push((x, y));
    }
    let z0 = cur.f64("z0")?;
    let gain = cur.f64("gain")?;

    let expected = m * t * 8;
    let remaining = data.len() - cur.pos;
    if remaining != expected {
        return Err(format_err(
            path,
            FormatErrorKind::Truncated,
            format!("payload holds {remaining} bytes, header promises {expected}"),
        ));
    }
    let mut samples = Mat::zeros(m, t);
    for ch in 0..m {
        let row = samples.row_mut(ch);
        for v in row.iter_mut() {
            let raw = &data[cur.pos..cur.pos + 8];
            cur.pos += 8;
            let x = f64::from_le_bytes(raw.try_into().unwrap());
            if !x.is_finite() {
                return Err(format_err(
                    path,
                    FormatErrorKind::NonFinite,
                    format!("channel {ch} contains a non-finite sample"),
                ));
            }
            *v = x;
        }
    }

    let rec = EgmRecording {
        samples,
        rate,
        array: ElectrodeArray {
            positions,
            height: z0,
            gain,
            layout,
        },
        annotations: Vec::new(),
    };
    rec.validate()?;
    Ok(rec)
}

/// Write a recording as CSV: header `ch0..chM`, one row per sample, 17
/// significant digits so a decimal round trip stays within 1e-12 relative.
pub fn write_csv_recording(rec: &EgmRecording, path: &Path) -> Result<()> {
    rec.validate()?;
    let mut out = String::new();
    let header: Vec<String> = (0..rec.channels()).map(|c| format!("ch{c}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for n in 0..rec.n_samples() {
        let row: Vec<String> = (0..rec.channels())
            .map(|c| format!("{:.16e}", rec.samples.get(c, n)))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Read a rectangular numeric CSV as a recording: one column per channel,
/// optional header, supplied metadata.
pub fn read_csv_recording(
    path: &Path,
    rate: f64,
    layout: Option<(usize, usize)>,
) -> Result<EgmRecording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if line_no == 0 => continue, // header row
            Err(_) => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    context: format!("line {}", line_no + 1),
                    detail: "non-numeric cell".into(),
                })
            }
        };
        if let Some(w) = width {
            if values.len() != w {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    context: format!("line {}", line_no + 1),
                    detail: format!("ragged row: {} cells, expected {w}", values.len()),
                });
            }
        } else {
            width = Some(values.len());
        }
        rows.push(values);
    }
    let width = width.ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        context: "end of file".into(),
        detail: "no numeric rows".into(),
    })?;
    // Columns are channels.
    let mut samples = Mat::zeros(width, rows.len());
    for (n, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            samples.set(c, n, v);
        }
    }
    let rec = EgmRecording {
        samples,
        rate,
        array: ElectrodeArray {
            positions: (0..width).map(|i| (i as f64, 0.0)).collect(),
            height: 1.0,
            gain: 1.0,
            layout,
        },
        annotations: Vec::new(),
    };
    rec.validate()?;
    Ok(rec)
}

/// Beat markers and labels parsed from an annotation file.
#[derive(Debug, Clone, Default)]
pub struct Annotations {
    pub beats_ms: Vec<f64>,
    pub labels: std::collections::BTreeMap<String, String>,
}

const ANNOTATION_KEYS: &[&str] = &["location", "rhythm", "recording"];

/// Text annotations: `beat,<time_ms>` and `label,<key>=<value>` lines,
/// `#` comments. Beat times must be strictly increasing; label keys come
/// from a fixed vocabulary.
pub fn read_annotations(path: &Path) -> Result<Annotations> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut ann = Annotations::default();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |detail: String| Error::Parse {
            path: path.display().to_string(),
            context: format!("line {}", line_no + 1),
            detail,
        };
        let (kind, rest) = line
            .split_once(',')
            .ok_or_else(|| err("expected `beat,<ms>` or `label,<key>=<value>`".into()))?;
        match kind.trim() {
            "beat" => {
                let t: f64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad beat time {rest:?}")))?;
                if !t.is_finite() {
                    return Err(err("beat time must be finite".into()));
                }
                if let Some(&last) = ann.beats_ms.last() {
                    if t <= last {
                        return Err(err(format!(
                            "beat times must be strictly increasing ({t} after {last})"
                        )));
                    }
                }
                ann.beats_ms.push(t);
            }
            "label" => {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| err("label needs key=value".into()))?;
                let k = k.trim();
                if !ANNOTATION_KEYS.contains(&k) {
                    return Err(err(format!(
                        "unknown label key {k:?}, allowed: {ANNOTATION_KEYS:?}"
                    )));
                }
                ann.labels.insert(k.to_string(), v.trim().to_string());
            }
            other => return Err(err(format!("unknown line kind {other:?}"))),
        }
    }
    Ok(ann)
}

pub fn write_annotations(ann: &Annotations, path: &Path) -> Result<()> {
    let mut out = String::from("# egmsigma annotations\n");
    for (k, v) in &ann.labels {
        out.push_str(&format!("label,{k}={v}\n"));
    }
    for t in &ann.beats_ms {
        out.push_str(&format!("beat,{t}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
