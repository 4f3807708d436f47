//! Real eigenvalue assignment for a controllable pair `(F, B)` by the
//! eigenvector method: pick input directions `h_j`, set
//! `v_j = (λ_j I − F)⁻¹ B h_j` and `K = H V⁻¹`, so that `(F + B K) v_j = λ_j v_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeoError, Result};
use crate::linalg::{self, Mat};

const CANDIDATES: usize = 24;
const SHIFTS: [f64; 4] = [0.0, 1.0, 2.5, 7.0];
const SEED: u64 = 0x6765_6f75_696f;

/// Returns `K` (q×r) with `eig(F + B K)` equal to `targets` (real, distinct).
pub(crate) fn assign_real_eigenvalues(f: &Mat, b: &Mat, targets: &[f64]) -> Result<Mat> {
    let r = f.nrows();
    let q = b.ncols();
    if targets.len() != r {
        return Err(GeoError::DimensionMismatch {
            context: "pole placement targets",
            expected: r,
            actual: targets.len(),
        });
    }
    if r == 0 {
        return Ok(Mat::zeros(q, 0));
    }
    validate_targets(targets)?;
    if q == 0 {
        return Err(unassignable(f));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut candidates: Vec<Mat> = (0..q.min(r))
        .map(|k| Mat::from_fn(q, r, |i, j| if (j + k) % q == i { 1.0 } else { 0.0 }))
        .collect();
    candidates.extend((0..CANDIDATES).map(|_| Mat::from_fn(q, r, |_, _| rng.random_range(-1.0..1.0))));

    let scale = (1.0 + linalg::spectral_norm(f)) / (1.0 + linalg::spectral_norm(b));
    let direction = Mat::from_fn(q, r, |_, _| rng.random_range(-1.0..1.0));
    let mut best: Option<(f64, Mat)> = None;
    for shift in SHIFTS {
        let k0 = (shift * scale) * &direction;
        let f0 = f + b * &k0;
        for h in &candidates {
            let Some((cond, kd)) = eigenvector_gain(&f0, b, h, targets) else {
                continue;
            };
            let k = &k0 + kd;
            if !matches_targets(&(f + b * &k), targets) {
                continue;
            }
            if best.as_ref().is_none_or(|(c, _)| cond < *c) {
                best = Some((cond, k));
            }
        }
        if let Some((_, k)) = best {
            return Ok(k);
        }
    }
    Err(unassignable(f))
}

fn unassignable(f: &Mat) -> GeoError {
    GeoError::SpectrumUnassignable {
        eigenvalues: linalg::eigenvalues(f).unwrap_or_default(),
    }
}

fn validate_targets(targets: &[f64]) -> Result<()> {
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(GeoError::InvalidInput("pole targets must be finite".into()));
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-6 * (1.0 + w[0].abs())) {
        return Err(GeoError::InvalidInput("pole targets must be distinct".into()));
    }
    Ok(())
}

fn eigenvector_gain(f: &Mat, b: &Mat, h: &Mat, targets: &[f64]) -> Option<(f64, Mat)> {
    let r = f.nrows();
    let mut v = Mat::zeros(r, r);
    let mut hs = h.clone();
    for (j, &lambda) in targets.iter().enumerate() {
        let shifted = Mat::identity(r, r) * lambda - f;
        let rhs = b * h.column(j);
        let col = shifted.lu().solve(&rhs)?;
        let norm = col.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return None;
        }
        v.set_column(j, &(col / norm));
        hs.set_column(j, &(h.column(j) / norm));
    }
    let sv = linalg::svd_desc(&v).1;
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if !(min > 1e-12 * max) {
        return None;
    }
    let vinv = v.try_inverse()?;
    Some((max / min, hs * vinv))
}

fn matches_targets(m: &Mat, targets: &[f64]) -> bool {
    let Ok(eigs) = linalg::eigenvalues(m) else {
        return false;
    };
    let spread = 1.0 + targets.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let mut got: Vec<_> = eigs.iter().map(|z| (z.re, z.im)).collect();
    got.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut want = targets.to_vec();
    want.sort_by(f64::total_cmp);
    got.iter()
        .zip(&want)
        .all(|(&(re, im), &t)| (re - t).abs() <= 1e-6 * spread && im.abs() <= 1e-6 * spread)
}
