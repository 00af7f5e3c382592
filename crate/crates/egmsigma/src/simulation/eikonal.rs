//! Fast-marching first-arrival solver on the 4-connected cell grid.
//!
//! Local front speed is `v0 * sqrt(conductivity)`, the square-root scaling
//! that matches how conduction velocity tracks the diffusion coefficient in
//! reaction-diffusion tissue. Zero-conductivity cells never conduct.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{LATField, TissueModel};
use crate::error::{Error, Result};

/// Cells within this Euclidean radius of a stimulus get exact straight-ray
/// arrival times when the surrounding conductivity is locally uniform.
/// Plain upwind marching overshoots badly right at a point source where the
/// front curvature is highest; seeding a small disk removes that error.
const EXACT_INIT_RADIUS: f64 = 4.0;

/// Solver output: the field plus non-fatal warnings.
#[derive(Debug, Clone)]
pub struct LatOutcome {
    pub field: LATField,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    time: f64,
    cell: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (time, cell): earliest time first, ties broken by
        // lowest cell index.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First-arrival activation times for every cell.
pub fn solve_lat(tissue: &TissueModel, v0: f64) -> Result<LatOutcome> {
    let (outcome, _) = solve_lat_traced(tissue, v0)?;
    Ok(outcome)
}

/// Like [`solve_lat`] but also returns the acceptance order, used by tests
/// to check front monotonicity.
pub(crate) fn solve_lat_traced(
    tissue: &TissueModel,
    v0: f64,
) -> Result<(LatOutcome, Vec<usize>)> {
    if !(v0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "propagation speed v0 must be positive, got {v0}"
        )));
    }
    // Morphology bank size is irrelevant here; validate with a permissive one.
    tissue.validate(usize::MAX)?;

    let n = tissue.n_cells();
    let cols = tissue.cols;
    let rows = tissue.rows;
    let h = tissue.spacing;

    let mut tau = vec![f64::INFINITY; n];
    let mut known = vec![false; n];
    let mut source_mask = vec![false; n];
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();

    for s in &tissue.stimuli {
        source_mask[s.cell] = true;
        if s.onset_ms < tau[s.cell] {
            tau[s.cell] = s.onset_ms;
            heap.push(HeapEntry {
                time: s.onset_ms,
                cell: s.cell,
            });
        }
    }

    // Exact-disk seeding around sources in locally uniform conductivity.
    for s in &tissue.stimuli {
        seed_exact_disk(tissue, v0, s.cell, s.onset_ms, &mut tau, &mut heap);
    }

    let slowness = |cell: usize| -> f64 {
        let c = tissue.conductivity[cell];
        if c > 0.0 {
            1.0 / (v0 * c.sqrt())
        } else {
            f64::INFINITY
        }
    };

    let mut acceptance = Vec::with_capacity(n);
    while let Some(HeapEntry { time, cell }) = heap.pop() {
        if known[cell] || time > tau[cell] {
            continue; // stale entry
        }
        known[cell] = true;
        acceptance.push(cell);

        let r = cell / cols;
        let c = cell % cols;
        let mut neighbors = [usize::MAX; 4];
        let mut cnt = 0;
        if r > 0 {
            neighbors[cnt] = cell - cols;
            cnt += 1;
        }
        if r + 1 < rows {
            neighbors[cnt] = cell + cols;
            cnt += 1;
        }
        if c > 0 {
            neighbors[cnt] = cell - 1;
            cnt += 1;
        }
        if c + 1 < cols {
            neighbors[cnt] = cell + 1;
            cnt += 1;
        }

        for &nb in &neighbors[..cnt] {
            if known[nb] {
                continue;
            }
            let s_nb = slowness(nb);
            if !s_nb.is_finite() {
                continue;
            }
            let cand = upwind_update(tissue, nb, h * s_nb, &tau, &known);
            if cand < tau[nb] {
                tau[nb] = cand;
                heap.push(HeapEntry {
                    time: cand,
                    cell: nb,
                });
            }
        }
    }

    let mut warnings = Vec::new();
    let reached_beyond_sources = (0..n).any(|i| !source_mask[i] && tau[i].is_finite());
    if !reached_beyond_sources && n > tissue.stimuli.len() {
        warnings.push("front did not reach any cell beyond the stimulus sites".to_string());
    }

    Ok((
        LatOutcome {
            field: LATField {
                rows,
                cols,
                tau,
                source_mask,
            },
            warnings,
        },
        acceptance,
    ))
}

/// First-order upwind solution at `cell` with edge cost `fh` (ms per cell),
/// built from the known 4-neighbors with positive conductivity.
fn upwind_update(
    tissue: &TissueModel,
    cell: usize,
    fh: f64,
    tau: &[f64],
    known: &[bool],
) -> f64 {
    let cols = tissue.cols;
    let rows = tissue.rows;
    let r = cell / cols;
    let c = cell % cols;

    let axis_min = |a: Option<usize>, b: Option<usize>| -> f64 {
        let mut best = f64::INFINITY;
        for nb in [a, b].into_iter().flatten() {
            if known[nb] && tissue.conductivity[nb] > 0.0 {
                best = best.min(tau[nb]);
            }
        }
        best
    };

    let horiz = axis_min(
        if c > 0 { Some(cell - 1) } else { None },
        if c + 1 < cols { Some(cell + 1) } else { None },
    );
    let vert = axis_min(
        if r > 0 { Some(cell - cols) } else { None },
        if r + 1 < rows { Some(cell + cols) } else { None },
    );

    let (a, b) = if horiz <= vert { (horiz, vert) } else { (vert, horiz) };
    if !a.is_finite() {
        return f64::INFINITY;
    }
    if !b.is_finite() || (b - a) >= fh {
        return a + fh;
    }
    // Two-sided quadratic update.
    0.5 * (a + b + (2.0 * fh * fh - (b - a) * (b - a)).sqrt())
}

fn seed_exact_disk(
    tissue: &TissueModel,
    v0: f64,
    source: usize,
    onset: f64,
    tau: &mut [f64],
    heap: &mut BinaryHeap<HeapEntry>,
) {
    let cond = tissue.conductivity[source];
    if !(cond > 0.0) {
        return;
    }
    let cols = tissue.cols;
    let rows = tissue.rows;
    let sr = (source / cols) as i64;
    let sc = (source % cols) as i64;
    let rad = EXACT_INIT_RADIUS;
    let ir = rad.ceil() as i64;

    // Only seed when the whole disk shares the source conductivity;
    // otherwise straight-ray times would be wrong.
    for dr in -ir..=ir {
        for dc in -ir..=ir {
            let d2 = (dr * dr + dc * dc) as f64;
            if d2 > rad * rad {
                continue;
            }
            let r = sr + dr;
            let c = sc + dc;
            if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
                continue;
            }
            let cell = r as usize * cols + c as usize;
            if tissue.conductivity[cell] != cond {
                return;
            }
        }
    }

    let speed = v0 * cond.sqrt();
    for dr in -ir..=ir {
        for dc in -ir..=ir {
            let d2 = (dr * dr + dc * dc) as f64;
            if d2 > rad * rad || (dr == 0 && dc == 0) {
                continue;
            }
            let r = sr + dr;
            let c = sc + dc;
            if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
                continue;
            }
            let cell = r as usize * cols + c as usize;
            let t = onset + d2.sqrt() * tissue.spacing / speed;
            if t < tau[cell] {
                tau[cell] = t;
                heap.push(HeapEntry { time: t, cell });
            }
        }
    }
}
