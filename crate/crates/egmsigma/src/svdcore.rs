//! Singular value decomposition of spectral matrices and normalized
//! singular-value profiles.
//!
//! The matrices handled here are short and wide (a handful of electrodes by
//! ~130 frequency bins), so the decomposition runs as an eigendecomposition
//! of the small-side Gram matrix followed by a one-sided Jacobi refinement
//! pass on the full matrix. The refinement recovers high relative accuracy
//! for small singular values, which the Gram squaring alone would lose.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::spectral::SpectralMatrix;

/// Sorted singular values of a spectral matrix plus the normalized profile
/// (every value divided by the largest one).
#[derive(Debug, Clone)]
pub struct SingularProfile {
    /// Singular values, descending.
    pub sigmas: Vec<f64>,
    /// `sigmas / sigmas[0]`, or all zeros for a zero matrix.
    pub normalized: Vec<f64>,
    /// Count of singular values at or above `DEFAULT_RANK_TOL * sigma_1`.
    pub rank_estimate: usize,
}

/// Relative threshold used for the default rank estimate, matching the
/// flat-wavefront sigma-2 threshold used in the map analysis.
pub const DEFAULT_RANK_TOL: f64 = 0.05;

/// Relative reconstruction residual every decomposition must satisfy.
const RECONSTRUCTION_TOL: f64 = 1e-10;

impl SingularProfile {
    /// Normalized second singular value, 0 for profiles shorter than 2.
    pub fn sigma2_norm(&self) -> f64 {
        self.normalized.get(1).copied().unwrap_or(0.0)
    }
}

/// Full decomposition result. `u` is `M x K`, `vt` is `K x N` with
/// `K = min(M, N)`; kept so callers (and tests) can check the
/// reconstruction residual.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub sigmas: Vec<f64>,
    pub vt: Mat,
}

/// Singular-value profile of a spectral matrix.
///
/// The decomposition is verified against its own reconstruction residual;
/// an all-zero matrix yields a profile of zeros with rank 0.
pub fn svd_profile(b: &SpectralMatrix) -> Result<SingularProfile> {
    profile_of_mat(&b.values)
}

/// Profile of a raw matrix; entry point used by the map and subset analyses.
pub fn profile_of_mat(values: &Mat) -> Result<SingularProfile> {
    let svd = decompose(values)?;
    Ok(profile_from_sigmas(svd.sigmas))
}

fn profile_from_sigmas(sigmas: Vec<f64>) -> SingularProfile {
    let s1 = sigmas.first().copied().unwrap_or(0.0);
    let normalized = if s1 > 0.0 {
        sigmas.iter().map(|s| s / s1).collect()
    } else {
        vec![0.0; sigmas.len()]
    };
    let rank_estimate = count_at_tol(&sigmas, DEFAULT_RANK_TOL);
    SingularProfile {
        sigmas,
        normalized,
        rank_estimate,
    }
}

/// Count of singular values at or above `rel_tol * sigma_1`.
///
/// A zero profile has rank 0 regardless of tolerance.
pub fn rank_estimate(profile: &SingularProfile, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must be in (0,1), got {rel_tol}"
        )));
    }
    Ok(count_at_tol(&profile.sigmas, rel_tol))
}

fn count_at_tol(sigmas: &[f64], rel_tol: f64) -> usize {
    let s1 = sigmas.first().copied().unwrap_or(0.0);
    if s1 <= 0.0 {
        return 0;
    }
    sigmas.iter().filter(|&&s| s >= rel_tol * s1).count()
}

/// Decompose an arbitrary finite matrix.
pub fn decompose(b: &Mat) -> Result<Svd> {
    if !b.all_finite() {
        return Err(Error::Numerical(
            "matrix contains non-finite entries".into(),
        ));
    }
    let svd = if b.rows() <= b.cols() {
        decompose_short(b)?
    } else {
        let t = decompose_short(&b.transpose())?;
        Svd {
            u: t.vt.transpose(),
            sigmas: t.sigmas,
            vt: t.u.transpose(),
        }
    };
    check_reconstruction(b, &svd)?;
    Ok(svd)
}

/// Decomposition for `rows <= cols`.
///
/// 1. Eigendecompose `G = B B^T` (rows x rows, symmetric) with cyclic Jacobi;
///    the eigenvectors are a first estimate of the left singular vectors.
/// 2. Form `H = B^T U0` and run one-sided Jacobi on its columns, mirroring the
///    rotations into `U0`. Column norms of the rotated `H` are the singular
///    values, computed directly from `B` rather than from squared data.
fn decompose_short(b: &Mat) -> Result<Svd> {
    let m = b.rows();
    let n = b.cols();
    debug_assert!(m <= n);

    if m == 0 || n == 0 {
        return Ok(Svd {
            u: Mat::zeros(m, 0),
            sigmas: vec![],
            vt: Mat::zeros(0, n),
        });
    }

    // Gram matrix of the short side.
    let mut gram = Mat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let dot: f64 = b
                .row(i)
                .iter()
                .zip(b.row(j).iter())
                .map(|(x, y)| x * y)
                .sum();
            gram.set(i, j, dot);
            gram.set(j, i, dot);
        }
    }

    let (mut eigvals, mut u) = jacobi_eigen_symmetric(&gram)?;
    sort_eigen_desc(&mut eigvals, &mut u);

    // H = B^T U0, columns approximately sigma_k * v_k.
    let mut h = b.transpose().mul(&u)?;
    one_sided_jacobi(&mut h, &mut u)?;

    // Column norms, then sort descending keeping U in step.
    let mut order: Vec<usize> = (0..m).collect();
    let norms: Vec<f64> = (0..m).map(|k| col_norm(&h, k)).collect();
    order.sort_by(|&a, &b2| norms[b2].total_cmp(&norms[a]));

    let mut sigmas = Vec::with_capacity(m);
    let mut u_sorted = Mat::zeros(u.rows(), m);
    let mut vt = Mat::zeros(m, n);
    for (slot, &k) in order.iter().enumerate() {
        let s = norms[k];
        sigmas.push(s);
        for r in 0..u.rows() {
            u_sorted.set(r, slot, u.get(r, k));
        }
        if s > 0.0 {
            for r in 0..n {
                vt.set(slot, r, h.get(r, k) / s);
            }
        }
    }

    Ok(Svd {
        u: u_sorted,
        sigmas,
        vt,
    })
}

fn col_norm(m: &Mat, c: usize) -> f64 {
    (0..m.rows()).map(|r| m.get(r, c) * m.get(r, c)).sum::<f64>().sqrt()
}

fn check_reconstruction(b: &Mat, svd: &Svd) -> Result<()> {
    let bnorm = b.frobenius_norm();
    if bnorm == 0.0 {
        return Ok(());
    }
    let mut resid = 0.0f64;
    let k = svd.sigmas.len();
    for r in 0..b.rows() {
        for c in 0..b.cols() {
            let mut acc = 0.0;
            for j in 0..k {
                acc += svd.u.get(r, j) * svd.sigmas[j] * svd.vt.get(j, c);
            }
            let d = b.get(r, c) - acc;
            resid += d * d;
        }
    }
    let rel = resid.sqrt() / bnorm;
    if rel > RECONSTRUCTION_TOL {
        return Err(Error::Numerical(format!(
            "SVD reconstruction residual {rel:.3e} exceeds {RECONSTRUCTION_TOL:.0e}"
        )));
    }
    Ok(())
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns (eigenvalues, eigenvector columns).
fn jacobi_eigen_symmetric(g: &Mat) -> Result<(Vec<f64>, Mat)> {
    let n = g.rows();
    let mut a = g.clone();
    let mut q = Mat::zeros(n, n);
    for i in 0..n {
        q.set(i, i, 1.0);
    }
    if n <= 1 {
        return Ok(((0..n).map(|i| a.get(i, i)).collect(), q));
    }

    let scale: f64 = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], q));
    }
    let tol = f64::EPSILON * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for r in p + 1..n {
                off = off.max(a.get(p, r).abs());
            }
        }
        if off <= tol {
            let vals = (0..n).map(|i| a.get(i, i)).collect();
            return Ok((vals, q));
        }
        for p in 0..n - 1 {
            for r in p + 1..n {
                let apq = a.get(p, r);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(r, r);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rotate rows/columns p and r of A.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, r);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, r, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(r, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(r, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkq = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkq);
                    q.set(k, r, s * qkp + c * qkq);
                }
            }
        }
    }
    Err(Error::Numerical(
        "Jacobi eigendecomposition did not converge in 60 sweeps".into(),
    ))
}

fn sort_eigen_desc(vals: &mut [f64], vecs: &mut Mat) {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let old_vals = vals.to_vec();
    let old_vecs = vecs.clone();
    for (slot, &k) in order.iter().enumerate() {
        vals[slot] = old_vals[k];
        for r in 0..vecs.rows() {
            vecs.set(r, slot, old_vecs.get(r, k));
        }
    }
}

/// One-sided Jacobi: orthogonalize the columns of `h`, applying the same
/// rotations to the columns of `u` so that `h = B^T u` stays consistent.
///
/// Columns whose norm sits at the round-off floor relative to the largest
/// column are left alone: they represent singular values that are zero to
/// working precision, and rotating them against each other never converges.
fn one_sided_jacobi(h: &mut Mat, u: &mut Mat) -> Result<()> {
    let ncols = h.cols();
    if ncols < 2 {
        return Ok(());
    }
    let tol = 4.0 * f64::EPSILON;
    let max_norm_sq = (0..ncols)
        .map(|c| {
            let n = col_norm(h, c);
            n * n
        })
        .fold(0.0f64, f64::max);
    let floor = max_norm_sq * 1e-24;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..ncols - 1 {
            for r in p + 1..ncols {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = 0.0f64;
                for k in 0..h.rows() {
                    let x = h.get(k, p);
                    let y = h.get(k, r);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if app <= floor || aqq <= floor {
                    continue;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..h.rows() {
                    let x = h.get(k, p);
                    let y = h.get(k, r);
                    h.set(k, p, c * x - s * y);
                    h.set(k, r, s * x + c * y);
                }
                for k in 0..u.rows() {
                    let x = u.get(k, p);
                    let y = u.get(k, r);
                    u.set(k, p, c * x - s * y);
                    u.set(k, r, s * x + c * y);
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::Numerical(
        "one-sided Jacobi refinement did not converge in 60 sweeps".into(),
    ))
}
