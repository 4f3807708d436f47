//! Subspace algebra on orthonormal bases.
//!
//! A [`Subspace`] of ℝⁿ is stored as an n×k matrix with orthonormal columns
//! obtained from singular-value factorizations. The zero subspace has k = 0
//! and the whole space has k = n; both are ordinary values.
//!
//! Quotients X/W are represented by the chart `P = basis(W^⊥)ᵀ`, so the
//! canonical projection has orthonormal rows and every induced map is the
//! plain matrix `P·A·Pᵀ`.

use crate::error::{GeoError, Result};
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    /// Singular values below `rel_rank_tol · scale · max_dim` count as zero.
    pub rel_rank_tol: f64,
    /// Bound for residual checks (containment, invariance, identities).
    pub abs_residual_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            rel_rank_tol: 1e-10,
            abs_residual_tol: 1e-9,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rel_rank_tol: f64, abs_residual_tol: f64) -> Result<Self> {
        if !(rel_rank_tol > 0.0 && abs_residual_tol > 0.0)
            || !rel_rank_tol.is_finite()
            || !abs_residual_tol.is_finite()
        {
            return Err(GeoError::InvalidInput(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        Ok(TolerancePolicy {
            rel_rank_tol,
            abs_residual_tol,
        })
    }

    /// Residual bound for a quantity produced by a map of norm `scale`.
    pub(crate) fn residual_bound(&self, scale: f64) -> f64 {
        self.abs_residual_tol * scale.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Mat,
    tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Mat::zeros(ambient_dim, 0),
            tol: TolerancePolicy::default().rel_rank_tol,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Mat::identity(ambient_dim, ambient_dim),
            tol: TolerancePolicy::default().rel_rank_tol,
        }
    }

    /// Span of the columns of `m`.
    pub fn span(m: &Mat, tol: &TolerancePolicy) -> Self {
        image(m, tol)
    }

    /// Wraps a basis that is already orthonormal. Checked in debug builds.
    pub(crate) fn from_orthonormal(basis: Mat, tol: f64) -> Self {
        debug_assert!(
            basis.ncols() == 0
                || (basis.transpose() * &basis - Mat::identity(basis.ncols(), basis.ncols())).norm()
                    < 1e-10
        );
        Subspace {
            ambient_dim: basis.nrows(),
            basis,
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    /// Distance of `v` from the subspace.
    pub fn residual(&self, v: &linalg::Vector) -> f64 {
        (v - &self.basis * (self.basis.transpose() * v)).norm()
    }
}

fn check_same_ambient(v: &Subspace, w: &Subspace, context: &'static str) -> Result<()> {
    if v.ambient_dim != w.ambient_dim {
        return Err(GeoError::DimensionMismatch {
            context,
            expected: v.ambient_dim,
            actual: w.ambient_dim,
        });
    }
    Ok(())
}

/// Column space of `m`, with rank decided relative to `scale`.
pub(crate) fn image_scaled(m: &Mat, scale: f64, tol: &TolerancePolicy) -> Subspace {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Subspace {
            ambient_dim: r,
            basis: Mat::zeros(r, 0),
            tol: tol.rel_rank_tol,
        };
    }
    let (u, sv, _) = linalg::svd_desc(m);
    let rank = linalg::numerical_rank(&sv, r.max(c), scale, tol);
    Subspace {
        ambient_dim: r,
        basis: u.columns(0, rank).into_owned(),
        tol: tol.rel_rank_tol,
    }
}

/// Numerical column space of `m`.
pub fn image(m: &Mat, tol: &TolerancePolicy) -> Subspace {
    let scale = linalg::spectral_norm(m);
    image_scaled(m, scale, tol)
}

/// Numerical null space of `m`.
pub fn kernel(m: &Mat, tol: &TolerancePolicy) -> Subspace {
    let scale = linalg::spectral_norm(m);
    kernel_scaled(m, scale, tol)
}

pub(crate) fn kernel_scaled(m: &Mat, scale: f64, tol: &TolerancePolicy) -> Subspace {
    let n = m.ncols();
    if m.nrows() == 0 || !(scale > 0.0) {
        return Subspace {
            ambient_dim: n,
            basis: Mat::identity(n, n),
            tol: tol.rel_rank_tol,
        };
    }
    orth_complement(&image_scaled(&m.transpose(), scale, tol))
}

/// Image of a subspace under a linear map.
pub fn map_subspace(m: &Mat, v: &Subspace, tol: &TolerancePolicy) -> Result<Subspace> {
    if m.ncols() != v.ambient_dim {
        return Err(GeoError::DimensionMismatch {
            context: "map_subspace",
            expected: m.ncols(),
            actual: v.ambient_dim,
        });
    }
    let scale = linalg::spectral_norm(m);
    Ok(image_scaled(&(m * &v.basis), scale, tol))
}

pub fn sum(v: &Subspace, w: &Subspace, tol: &TolerancePolicy) -> Result<Subspace> {
    check_same_ambient(v, w, "sum")?;
    if v.is_zero() {
        return Ok(w.clone());
    }
    if w.is_zero() {
        return Ok(v.clone());
    }
    Ok(image(&linalg::hstack(&v.basis, &w.basis), tol))
}

/// `V ∩ W`, computed as `(V^⊥ + W^⊥)^⊥`.
pub fn intersect(v: &Subspace, w: &Subspace, tol: &TolerancePolicy) -> Result<Subspace> {
    check_same_ambient(v, w, "intersect")?;
    if v.is_zero() || w.is_zero() {
        return Ok(Subspace::zero(v.ambient_dim));
    }
    if v.is_full() {
        return Ok(w.clone());
    }
    if w.is_full() {
        return Ok(v.clone());
    }
    let s = sum(&orth_complement(v), &orth_complement(w), tol)?;
    Ok(orth_complement(&s))
}

/// `{x : M x ∈ S}`, the kernel of `P_{S^⊥} M`.
pub fn preimage(m: &Mat, s: &Subspace, tol: &TolerancePolicy) -> Result<Subspace> {
    if m.nrows() != s.ambient_dim {
        return Err(GeoError::DimensionMismatch {
            context: "preimage",
            expected: m.nrows(),
            actual: s.ambient_dim,
        });
    }
    let n = m.ncols();
    if s.is_full() {
        return Ok(Subspace::full(n));
    }
    let scale = linalg::spectral_norm(m);
    let projected = canonical_projection(s) * m;
    Ok(kernel_scaled(&projected, scale, tol))
}

pub fn orth_complement(v: &Subspace) -> Subspace {
    let n = v.ambient_dim;
    let k = v.dim();
    let basis = if k == 0 {
        Mat::identity(n, n)
    } else if k == n {
        Mat::zeros(n, 0)
    } else {
        linalg::complete_orthonormal(&v.basis)
            .columns(k, n - k)
            .into_owned()
    };
    Subspace {
        ambient_dim: n,
        basis,
        tol: v.tol,
    }
}

/// Chart of X/W: `(n - dim W) × n` with orthonormal rows and kernel W.
pub fn canonical_projection(w: &Subspace) -> Mat {
    orth_complement(w).basis.transpose()
}

/// Matrix of the map induced by `a` on X/W in the chart `p`.
pub fn induced_map(a: &Mat, w: &Subspace, p: &Mat, tol: &TolerancePolicy) -> Result<Mat> {
    let n = a.nrows();
    if a.ncols() != n || w.ambient_dim != n || p.ncols() != n {
        return Err(GeoError::DimensionMismatch {
            context: "induced_map",
            expected: n,
            actual: w.ambient_dim.max(p.ncols()),
        });
    }
    let residual = (p * a * &w.basis).norm();
    if residual > tol.residual_bound(a.norm()) {
        return Err(GeoError::InvarianceViolated { residual });
    }
    Ok(p * a * p.transpose())
}

/// Whether `W ⊆ V` within the residual tolerance.
pub fn contains(v: &Subspace, w: &Subspace, tol: &TolerancePolicy) -> Result<bool> {
    check_same_ambient(v, w, "contains")?;
    if w.is_zero() || v.is_full() {
        return Ok(true);
    }
    if w.dim() > v.dim() {
        return Ok(false);
    }
    let off = &w.basis - &v.basis * (v.basis.transpose() * &w.basis);
    Ok(off
        .column_iter()
        .all(|c| c.norm() <= tol.abs_residual_tol))
}

pub fn equal(v: &Subspace, w: &Subspace, tol: &TolerancePolicy) -> Result<bool> {
    Ok(v.dim() == w.dim() && contains(v, w, tol)? && contains(w, v, tol)?)
}

/// Whether `a·V ⊆ V` within tolerance.
pub fn is_invariant(a: &Mat, v: &Subspace, tol: &TolerancePolicy) -> bool {
    invariance_residual(a, v) <= tol.residual_bound(a.norm())
}

/// `‖P_{V^⊥}·a·basis(V)‖_F`.
pub fn invariance_residual(a: &Mat, v: &Subspace) -> f64 {
    if v.is_zero() || v.is_full() {
        return 0.0;
    }
    (canonical_projection(v) * a * &v.basis).norm()
}

/// Unobservable subspace `⟨Ker C | A⟩ = Ker C ∩ A⁻¹Ker C ∩ … ∩ A^{-(n-1)}Ker C`.
pub fn unobservable_subspace(a: &Mat, c: &Mat, tol: &TolerancePolicy) -> Result<Subspace> {
    let n = a.nrows();
    let ker_c = kernel_scaled(c, linalg::spectral_norm(c), tol);
    let mut current = ker_c.clone();
    for _ in 0..n {
        let next = intersect(&ker_c, &preimage(a, &current, tol)?, tol)?;
        if next.dim() == current.dim() {
            return Ok(next);
        }
        current = next;
    }
    Ok(current)
}
