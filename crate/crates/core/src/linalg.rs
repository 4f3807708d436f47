//! Dense numerical helpers shared by the geometric layer.
//!
//! Every rank decision in the crate goes through [`numerical_rank`], which
//! also feeds the per-thread margin audit used by the randomized
//! verification battery to separate clear-cut instances from marginal ones.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{GeoError, Result};
use crate::subspace::TolerancePolicy;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

thread_local! {
    static MIN_MARGIN: Cell<f64> = const { Cell::new(f64::INFINITY) };
}

/// Runs `f` and reports the smallest decision margin observed on this
/// thread while it ran: the relative singular-value gap at every rank
/// decision and the distance of classified eigenvalues to a spectral
/// boundary. Nested calls propagate their minimum outward.
pub fn audited<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let outer = MIN_MARGIN.with(|m| m.replace(f64::INFINITY));
    let out = f();
    let inner = MIN_MARGIN.with(|m| m.get());
    MIN_MARGIN.with(|m| m.set(outer.min(inner)));
    (out, inner)
}

pub(crate) fn record_margin(margin: f64) {
    MIN_MARGIN.with(|m| {
        if margin < m.get() {
            m.set(margin);
        }
    });
}

/// Thin SVD with singular values sorted in descending order.
/// Returns `(U, sigma, V^T)`; empty matrices give empty factors.
///
/// Computed by one-sided Jacobi rotations, which keep small singular
/// values accurate relative to the columns they come from.
pub fn svd_desc(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (Mat::zeros(r, 0), Vec::new(), Mat::zeros(0, c));
    }
    if r < c {
        let (u, sv, vt) = svd_desc(&m.transpose());
        return (vt.transpose(), sv, u.transpose());
    }
    let (mut work, mut v) = (m.clone(), Mat::identity(c, c));
    jacobi_sweeps(&mut work, &mut v);
    let norms: Vec<f64> = work.column_iter().map(|col| col.norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sv: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let nonzero = sv.iter().take_while(|&&s| s > 0.0).count();
    let mut u = Mat::zeros(r, c);
    for (k, &i) in order.iter().take(nonzero).enumerate() {
        u.set_column(k, &(work.column(i) / norms[i]));
    }
    if nonzero < c {
        let completed = complete_orthonormal(&u.columns(0, nonzero).into_owned());
        u.columns_mut(nonzero, c - nonzero)
            .copy_from(&completed.columns(nonzero, c - nonzero));
    }
    let vt = Mat::from_fn(c, c, |k, j| v[(j, order[k])]);
    (u, sv, vt)
}

/// Rotates column pairs of `work` until they are mutually orthogonal,
/// accumulating the rotations into `v`.
fn jacobi_sweeps(work: &mut Mat, v: &mut Mat) {
    const MAX_SWEEPS: usize = 80;
    let c = work.ncols();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let alpha = work.column(i).norm_squared();
                let beta = work.column(j).norm_squared();
                let gamma = work.column(i).dot(&work.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let cs = 1.0 / t.hypot(1.0);
                let sn = cs * t;
                rotate_columns(work, i, j, cs, sn);
                rotate_columns(v, i, j, cs, sn);
            }
        }
        if !rotated {
            return;
        }
    }
}

fn rotate_columns(m: &mut Mat, i: usize, j: usize, cs: f64, sn: f64) {
    for row in 0..m.nrows() {
        let (x, y) = (m[(row, i)], m[(row, j)]);
        m[(row, i)] = cs * x - sn * y;
        m[(row, j)] = sn * x + cs * y;
    }
}

/// Counts singular values above `rel_rank_tol · scale · max_dim`.
///
/// `scale` is the magnitude the decision is relative to; callers pass
/// `sigma_max` of the matrix itself or, when the matrix is a product that
/// may be pure round-off, the norm of the factor that produced it.
pub fn numerical_rank(sv: &[f64], max_dim: usize, scale: f64, tol: &TolerancePolicy) -> usize {
    if sv.is_empty() || !(scale > 0.0) {
        return 0;
    }
    let threshold = tol.rel_rank_tol * scale * max_dim.max(1) as f64;
    let rank = sv.iter().take_while(|&&s| s > threshold).count();
    let kept_min = if rank > 0 { sv[rank - 1] } else { scale };
    let dropped_max = sv.get(rank).copied().unwrap_or(0.0);
    record_margin((kept_min - dropped_max) / scale);
    rank
}

pub fn spectral_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    svd_desc(m).1[0]
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_1(m: &Mat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced infinity-norm (maximum absolute row sum).
pub fn norm_inf(m: &Mat) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Moore-Penrose pseudoinverse with the policy's rank cut.
pub fn pinv(m: &Mat, tol: &TolerancePolicy) -> Mat {
    pinv_scaled(m, spectral_norm(m), tol)
}

/// Pseudoinverse with the rank decided relative to `scale`.
pub fn pinv_scaled(m: &Mat, scale: f64, tol: &TolerancePolicy) -> Mat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Mat::zeros(c, r);
    }
    let (u, sv, vt) = svd_desc(m);
    let rank = numerical_rank(&sv, r.max(c), scale, tol);
    let mut out = Mat::zeros(c, r);
    for i in 0..rank {
        out += (vt.row(i).transpose() / sv[i]) * u.column(i).transpose();
    }
    out
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Mat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            out.view_mut((i * br, j * bc), (br, bc))
                .copy_from(&(b * a[(i, j)]));
        }
    }
    out
}

/// Column-major vectorization.
pub fn vec_of(m: &Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Mat {
    Mat::from_column_slice(rows, cols, v.as_slice())
}

pub fn block_diag(blocks: &[Mat]) -> Mat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn vstack(top: &Mat, bottom: &Mat) -> Mat {
    assert_eq!(top.ncols(), bottom.ncols());
    let mut out = Mat::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

pub fn hstack(left: &Mat, right: &Mat) -> Mat {
    assert_eq!(left.nrows(), right.nrows());
    let mut out = Mat::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

/// Selects columns of `m` by index.
pub fn select_columns(m: &Mat, cols: &[usize]) -> Mat {
    let mut out = Mat::zeros(m.nrows(), cols.len());
    for (k, &j) in cols.iter().enumerate() {
        out.set_column(k, &m.column(j));
    }
    out
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Extends orthonormal columns `q` (n×k) to an orthogonal n×n matrix whose
/// leading k columns span the same space.
pub fn complete_orthonormal(q: &Mat) -> Mat {
    let n = q.nrows();
    if q.ncols() == 0 {
        return Mat::identity(n, n);
    }
    let stacked = hstack(q, &Mat::identity(n, n));
    let full = stacked.qr().q();
    let mut out = full.columns(0, n).into_owned();
    // QR may flip signs of the leading columns; restore the caller's basis.
    out.view_mut((0, 0), q.shape()).copy_from(q);
    out
}

fn real_schur(m: &Mat) -> Result<(Mat, Mat)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GeoError::NonFinite("Schur input"));
    }
    Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .map(|s| s.unpack())
        .ok_or(GeoError::Numerical("real Schur decomposition did not converge"))
}

/// Eigenvalues of a real square matrix, in Schur order.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = real_schur(m)?;
    Ok(quasi_triangular_blocks(&t)
        .into_iter()
        .flat_map(|b| b.eigenvalues)
        .collect())
}

pub fn max_real_part(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone)]
struct SchurBlock {
    start: usize,
    size: usize,
    eigenvalues: Vec<Complex64>,
}

fn block_eigenvalues(t: &Mat, start: usize, size: usize) -> Vec<Complex64> {
    if size == 1 {
        return vec![Complex64::new(t[(start, start)], 0.0)];
    }
    let (a, b) = (t[(start, start)], t[(start, start + 1)]);
    let (c, d) = (t[(start + 1, start)], t[(start + 1, start + 1)]);
    let half_tr = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        vec![
            Complex64::new(half_tr + s, 0.0),
            Complex64::new(half_tr - s, 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        vec![Complex64::new(half_tr, s), Complex64::new(half_tr, -s)]
    }
}

fn quasi_triangular_blocks(t: &Mat) -> Vec<SchurBlock> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n && t[(i + 1, i)] != 0.0 { 2 } else { 1 };
        blocks.push(SchurBlock {
            start: i,
            size,
            eigenvalues: block_eigenvalues(t, i, size),
        });
        i += size;
    }
    blocks
}

/// Splits a 2×2 diagonal block with real eigenvalues into upper-triangular
/// form by a rotation applied to `t` and accumulated into `q`.
fn split_real_pair(t: &mut Mat, q: &mut Mat, start: usize) {
    let (a, b) = (t[(start, start)], t[(start, start + 1)]);
    let (c, d) = (t[(start + 1, start)], t[(start + 1, start + 1)]);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    let lambda = 0.5 * (a + d) + disc.max(0.0).sqrt();
    // Eigenvector of [[a,b],[c,d]] for lambda.
    let (x, y) = if (lambda - a).abs() + b.abs() >= (lambda - d).abs() + c.abs() {
        (b, lambda - a)
    } else {
        (lambda - d, c)
    };
    let r = x.hypot(y);
    if r == 0.0 {
        return;
    }
    let g = Mat::from_row_slice(2, 2, &[x / r, -y / r, y / r, x / r]);
    apply_local_similarity(t, q, start, &g);
    t[(start + 1, start)] = 0.0;
}

/// `t ← Gᵀ t G` and `q ← q G` on the index window `start..start+G.nrows()`.
fn apply_local_similarity(t: &mut Mat, q: &mut Mat, start: usize, g: &Mat) {
    let n = t.nrows();
    let s = g.nrows();
    let cols = t.columns(start, s) * g;
    t.view_mut((0, start), (n, s)).copy_from(&cols);
    let rows = g.transpose() * t.rows(start, s);
    t.view_mut((start, 0), (s, n)).copy_from(&rows);
    let qc = q.columns(start, s) * g;
    q.view_mut((0, start), (n, s)).copy_from(&qc);
}

/// Swaps the adjacent diagonal blocks of sizes `p` then `r` starting at `j`.
fn swap_blocks(t: &mut Mat, q: &mut Mat, j: usize, p: usize, r: usize) -> Result<()> {
    let a11 = t.view((j, j), (p, p)).into_owned();
    let a22 = t.view((j + p, j + p), (r, r)).into_owned();
    let a12 = t.view((j, j + p), (p, r)).into_owned();
    // A11 X - X A22 = A12
    let sylv = kron(&Mat::identity(r, r), &a11) - kron(&a22.transpose(), &Mat::identity(p, p));
    let x = sylv
        .lu()
        .solve(&vec_of(&a12))
        .ok_or(GeoError::Numerical("Schur block swap: blocks share eigenvalues"))?;
    let x = unvec(&x, p, r);
    let basis = vstack(&x, &(-Mat::identity(r, r)));
    let q1 = basis.qr().q();
    let g = complete_orthonormal(&q1);
    apply_local_similarity(t, q, j, &g);
    t.view_mut((j + r, j), (p, r)).fill(0.0);
    Ok(())
}

/// Real Schur form reordered so that blocks whose eigenvalues satisfy
/// `select` come first.
#[derive(Debug, Clone)]
pub struct OrderedSchur {
    pub q: Mat,
    pub t: Mat,
    /// Number of leading columns of `q` spanning the selected invariant subspace.
    pub leading: usize,
    pub eigenvalues: Vec<Complex64>,
}

pub fn ordered_schur(m: &Mat, select: impl Fn(Complex64) -> bool) -> Result<OrderedSchur> {
    let n = m.nrows();
    if n == 0 {
        return Ok(OrderedSchur {
            q: Mat::zeros(0, 0),
            t: Mat::zeros(0, 0),
            leading: 0,
            eigenvalues: Vec::new(),
        });
    }
    let (mut q, mut t) = real_schur(m)?;

    for i in 0..n.saturating_sub(1) {
        let sub = t[(i + 1, i)];
        if sub != 0.0 && sub.abs() <= f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs()) {
            t[(i + 1, i)] = 0.0;
        }
    }
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] != 0.0 {
            let eig = block_eigenvalues(&t, i, 2);
            if eig[0].im == 0.0 {
                split_real_pair(&mut t, &mut q, i);
                i += 1;
            } else {
                i += 2;
            }
        } else {
            i += 1;
        }
    }

    let mut blocks = quasi_triangular_blocks(&t);
    let chosen = |b: &SchurBlock| select(b.eigenvalues[0]);
    loop {
        let pos = blocks
            .windows(2)
            .position(|w| !chosen(&w[0]) && chosen(&w[1]));
        let Some(k) = pos else { break };
        let (j, p, r) = (blocks[k].start, blocks[k].size, blocks[k + 1].size);
        swap_blocks(&mut t, &mut q, j, p, r)?;
        let moved = blocks.remove(k + 1);
        blocks.insert(
            k,
            SchurBlock {
                start: j,
                size: r,
                eigenvalues: moved.eigenvalues,
            },
        );
        blocks[k + 1].start = j + r;
    }

    let leading = blocks.iter().filter(|b| chosen(b)).map(|b| b.size).sum();
    let eigenvalues = blocks.into_iter().flat_map(|b| b.eigenvalues).collect();
    Ok(OrderedSchur {
        q,
        t,
        leading,
        eigenvalues,
    })
}
