//! Conditioned-invariant geometry of a triple `(C, A, Im B̄)`.
//!
//! Pipeline: `W*` (infimal conditioned invariant) → `S*` (infimal
//! unobservability subspace) → common friend → good/bad split of the map
//! induced on `S*/W*` → `W_g*` → stabilizing friend on `X/W_g*`.

use num_complex::Complex64;

use crate::error::{GeoError, Result};
use crate::linalg::{self, Mat};
use crate::placement;
use crate::subspace::{
    canonical_projection, image, image_scaled, induced_map, intersect, invariance_residual,
    kernel, map_subspace, preimage, sum, unobservable_subspace, Subspace, TolerancePolicy,
};

/// Good region `Re λ < alpha`. Eigenvalues within `boundary_tol` of the
/// boundary are counted as bad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPartition {
    pub alpha: f64,
    pub boundary_tol: f64,
}

impl Default for SpectralPartition {
    fn default() -> Self {
        SpectralPartition {
            alpha: 0.0,
            boundary_tol: 1e-8,
        }
    }
}

impl SpectralPartition {
    pub fn with_alpha(alpha: f64) -> Self {
        SpectralPartition {
            alpha,
            ..Default::default()
        }
    }

    pub fn is_good(&self, lambda: Complex64) -> bool {
        lambda.re < self.alpha - self.boundary_tol
    }

    /// Like [`is_good`](Self::is_good), and feeds the distance to the
    /// boundary into the margin audit.
    pub fn classify_audited(&self, lambda: Complex64) -> bool {
        linalg::record_margin((lambda.re - self.alpha).abs() / (1.0 + lambda.norm()));
        self.is_good(lambda)
    }

    pub fn is_bad(&self, lambda: Complex64) -> bool {
        !self.is_good(lambda)
    }
}

/// Target spectrum for the assignable part of the quotient dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementConfig {
    /// Explicit real, distinct targets; `None` means `alpha-1, alpha-1.5, …`.
    pub targets: Option<Vec<f64>>,
    pub margin: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            targets: None,
            margin: 0.5,
        }
    }
}

impl PlacementConfig {
    pub fn targets_for(&self, count: usize, alpha: f64) -> Result<Vec<f64>> {
        match &self.targets {
            None => Ok((0..count).map(|k| alpha - 1.0 - 0.5 * k as f64).collect()),
            Some(t) if t.len() >= count => Ok(t[..count].to_vec()),
            Some(t) => Err(GeoError::InvalidInput(format!(
                "{} pole targets supplied, {count} needed",
                t.len()
            ))),
        }
    }
}

/// Everything a synthesis needs besides the plant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthesisSettings {
    pub spectral: SpectralPartition,
    pub placement: PlacementConfig,
    pub tol: TolerancePolicy,
}

/// Result of a monotone subspace recursion with the dimension at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Recursion {
    pub subspace: Subspace,
    pub dims: Vec<usize>,
}

impl Recursion {
    pub fn iterations(&self) -> usize {
        self.dims.len() - 1
    }
}

fn check_triple(a: &Mat, c: &Mat, ambient: usize) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(GeoError::DimensionMismatch {
            context: "A must be square",
            expected: n,
            actual: a.ncols(),
        });
    }
    if c.ncols() != n {
        return Err(GeoError::DimensionMismatch {
            context: "C columns",
            expected: n,
            actual: c.ncols(),
        });
    }
    if ambient != n {
        return Err(GeoError::DimensionMismatch {
            context: "subspace ambient dimension",
            expected: n,
            actual: ambient,
        });
    }
    if !linalg::is_finite(a) || !linalg::is_finite(c) {
        return Err(GeoError::NonFinite("system matrices"));
    }
    Ok(())
}

/// `W_{k+1} = B̄ + A(W_k ∩ Ker C)` from `W_0 = B̄`, iterated to its fixed point.
pub fn infimal_conditioned_invariant_traced(
    a: &Mat,
    c: &Mat,
    bbar: &Subspace,
    tol: &TolerancePolicy,
) -> Result<Recursion> {
    check_triple(a, c, bbar.ambient_dim())?;
    let n = a.nrows();
    let ker_c = kernel(c, tol);
    let mut current = bbar.clone();
    let mut dims = vec![current.dim()];
    for _ in 0..=n {
        let next = sum(bbar, &map_subspace(a, &intersect(&current, &ker_c, tol)?, tol)?, tol)?;
        let settled = next.dim() == current.dim();
        current = next;
        if settled {
            return Ok(Recursion { subspace: current, dims });
        }
        dims.push(current.dim());
    }
    Err(GeoError::Numerical("conditioned-invariant recursion did not settle"))
}

pub fn infimal_conditioned_invariant(
    a: &Mat,
    c: &Mat,
    bbar: &Subspace,
    tol: &TolerancePolicy,
) -> Result<Subspace> {
    infimal_conditioned_invariant_traced(a, c, bbar, tol).map(|r| r.subspace)
}

/// `S_{k+1} = W* + (A⁻¹S_k ∩ Ker C)` from `S_0 = ℝⁿ`, iterated to its fixed point.
pub fn infimal_unobservability_subspace_traced(
    a: &Mat,
    c: &Mat,
    w_star: &Subspace,
    tol: &TolerancePolicy,
) -> Result<Recursion> {
    check_triple(a, c, w_star.ambient_dim())?;
    let n = a.nrows();
    let ker_c = kernel(c, tol);
    let mut current = Subspace::full(n);
    let mut dims = vec![n];
    for _ in 0..=n {
        let next = sum(w_star, &intersect(&preimage(a, &current, tol)?, &ker_c, tol)?, tol)?;
        let settled = next.dim() == current.dim();
        current = next;
        if settled {
            return Ok(Recursion { subspace: current, dims });
        }
        dims.push(current.dim());
    }
    Err(GeoError::Numerical("unobservability-subspace recursion did not settle"))
}

pub fn infimal_unobservability_subspace(
    a: &Mat,
    c: &Mat,
    w_star: &Subspace,
    tol: &TolerancePolicy,
) -> Result<Subspace> {
    infimal_unobservability_subspace_traced(a, c, w_star, tol).map(|r| r.subspace)
}

/// `‖P_{W^⊥}·(A + L C)·basis(W)‖_F`.
pub fn friend_residual(a: &Mat, c: &Mat, l: &Mat, w: &Subspace) -> f64 {
    invariance_residual(&(a + l * c), w)
}

/// `‖P_{W^⊥}·A·basis(W ∩ Ker C)‖_F`: zero iff `W` is (C,A)-invariant.
pub fn conditioned_invariance_residual(
    a: &Mat,
    c: &Mat,
    w: &Subspace,
    tol: &TolerancePolicy,
) -> Result<f64> {
    let inner = intersect(w, &kernel(c, tol), tol)?;
    if inner.is_zero() || w.is_full() {
        return Ok(0.0);
    }
    Ok((canonical_projection(w) * a * inner.basis()).norm())
}

/// Minimum-norm `L` with `(A + L C) W ⊆ W`.
pub fn friend_gain(a: &Mat, c: &Mat, w: &Subspace, tol: &TolerancePolicy) -> Result<Mat> {
    check_triple(a, c, w.ambient_dim())?;
    let (n, p) = (a.nrows(), c.nrows());
    if w.is_zero() || w.is_full() {
        return Ok(Mat::zeros(n, p));
    }
    let proj = canonical_projection(w);
    let cw = c * w.basis();
    let l = -proj.transpose() * (&proj * a * w.basis()) * linalg::pinv_scaled(&cw, linalg::spectral_norm(c), tol);
    let residual = friend_residual(a, c, &l, w);
    if residual > tol.residual_bound(a.norm()) {
        return Err(GeoError::NotConditionedInvariant { residual });
    }
    Ok(l)
}

/// Minimum-norm `L` that is a friend of every subspace in `subspaces` at once.
///
/// Solves the stacked equations `P_k L (C W_k) = −P_k A W_k` through
/// `vec(P L G) = (Gᵀ ⊗ P) vec(L)`.
pub fn common_friend(
    a: &Mat,
    c: &Mat,
    subspaces: &[&Subspace],
    tol: &TolerancePolicy,
) -> Result<Mat> {
    let (n, p) = (a.nrows(), c.nrows());
    let mut lhs = Mat::zeros(0, n * p);
    let mut rhs = Mat::zeros(0, 1);
    for w in subspaces {
        check_triple(a, c, w.ambient_dim())?;
        if w.is_zero() || w.is_full() {
            continue;
        }
        let proj = canonical_projection(w);
        let g = c * w.basis();
        lhs = linalg::vstack(&lhs, &linalg::kron(&g.transpose(), &proj));
        let target = -(&proj * a * w.basis());
        rhs = linalg::vstack(&rhs, &Mat::from_column_slice(target.len(), 1, target.as_slice()));
    }
    if lhs.nrows() == 0 {
        return Ok(Mat::zeros(n, p));
    }
    let sol = linalg::pinv_scaled(&lhs, linalg::spectral_norm(c), tol) * rhs;
    let l = Mat::from_column_slice(n, p, sol.as_slice());
    let bound = tol.residual_bound(a.norm());
    for w in subspaces {
        let residual = friend_residual(a, c, &l, w);
        if residual > bound {
            return Err(GeoError::NotConditionedInvariant { residual });
        }
    }
    Ok(l)
}

/// Good and bad invariant subspaces of the map induced on `S*/W*`, expressed
/// in the chart of `X/W*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub xbar_g: Subspace,
    pub xbar_b: Subspace,
    /// Spectrum of the induced map on `S*/W*` (invariant zeros).
    pub zeros: Vec<Complex64>,
}

pub fn spectral_split(
    a: &Mat,
    c: &Mat,
    w_star: &Subspace,
    s_star: &Subspace,
    friend: &Mat,
    part: &SpectralPartition,
    tol: &TolerancePolicy,
) -> Result<SpectralSplit> {
    check_triple(a, c, w_star.ambient_dim())?;
    let a_l = a + friend * c;
    let bound = tol.residual_bound(a_l.norm());
    let residual = invariance_residual(&a_l, s_star);
    if residual > bound {
        return Err(GeoError::InvarianceViolated { residual });
    }
    let p_w = canonical_projection(w_star);
    let induced = induced_map(&a_l, w_star, &p_w, tol)?;
    let chart_dim = p_w.nrows();
    let quotient = image_scaled(&(&p_w * s_star.basis()), 1.0, tol);
    if quotient.is_zero() {
        return Ok(SpectralSplit {
            xbar_g: Subspace::zero(chart_dim),
            xbar_b: Subspace::zero(chart_dim),
            zeros: Vec::new(),
        });
    }
    let t = quotient.basis();
    let restricted = t.transpose() * &induced * t;
    let bad_first = linalg::ordered_schur(&restricted, |z| part.is_bad(z))?;
    for &z in &bad_first.eigenvalues {
        part.classify_audited(z);
    }
    let good_first = linalg::ordered_schur(&restricted, |z| part.is_good(z))?;
    let lift = |q: &Mat, k: usize| {
        Subspace::from_orthonormal(t * q.columns(0, k), tol.rel_rank_tol)
    };
    Ok(SpectralSplit {
        xbar_b: lift(&bad_first.q, bad_first.leading),
        xbar_g: lift(&good_first.q, good_first.leading),
        zeros: bad_first.eigenvalues,
    })
}

/// `W_g* = P_{W*}⁻¹(X̄_b*)`.
pub fn compute_wg_star(
    w_star: &Subspace,
    xbar_b: &Subspace,
    p_wstar: &Mat,
    tol: &TolerancePolicy,
) -> Result<Subspace> {
    if p_wstar.ncols() != w_star.ambient_dim() {
        return Err(GeoError::DimensionMismatch {
            context: "compute_wg_star",
            expected: w_star.ambient_dim(),
            actual: p_wstar.ncols(),
        });
    }
    preimage(p_wstar, xbar_b, tol)
}

/// Output injection `L` keeping `W_g*` invariant and its quotient map stable.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizingFriend {
    pub gain: Mat,
    /// Matrix of `(A + L C)` on `X/W_g*` in the chart `P_{W_g*}`.
    pub quotient_map: Mat,
    /// Quotient eigenvalues no output injection preserving `W_g*` can move.
    pub fixed: Vec<Complex64>,
}

/// Starts from `base`, a friend of `W_g*`, and adds `K = P_gᵀ G Y` where the
/// rows of `Y` annihilate `C·W_g*`, so every subspace of `W_g*` that `base`
/// keeps invariant stays invariant.
pub fn stabilizing_friend(
    a: &Mat,
    c: &Mat,
    wg_star: &Subspace,
    base: &Mat,
    settings: &SynthesisSettings,
) -> Result<StabilizingFriend> {
    check_triple(a, c, wg_star.ambient_dim())?;
    let tol = &settings.tol;
    let part = &settings.spectral;
    let p_g = canonical_projection(wg_star);
    let a0 = induced_map(&(a + base * c), wg_star, &p_g, tol)?;
    let r = a0.nrows();
    if r == 0 {
        return Ok(StabilizingFriend {
            gain: base.clone(),
            quotient_map: a0,
            fixed: Vec::new(),
        });
    }

    let cw = c * wg_star.basis();
    let left_null = if wg_star.is_zero() {
        Subspace::full(c.nrows())
    } else {
        kernel(&cw.transpose(), tol)
    };
    let y = left_null.basis().transpose();
    let c_reduced = &y * c * p_g.transpose();

    let unobservable = unobservable_subspace(&a0, &c_reduced, tol)?;
    let observable = crate::subspace::orth_complement(&unobservable);
    let fixed_block = unobservable.basis().transpose() * &a0 * unobservable.basis();
    let fixed = linalg::eigenvalues(&fixed_block)?;
    if fixed.iter().any(|&z| !part.classify_audited(z)) {
        return Err(GeoError::SpectrumUnassignable { eigenvalues: fixed });
    }

    let to = observable.basis();
    let g = if to.ncols() == 0 {
        Mat::zeros(r, y.nrows())
    } else {
        let a11 = to.transpose() * &a0 * to;
        let c1 = &c_reduced * to;
        let targets = settings.placement.targets_for(to.ncols(), part.alpha)?;
        let kd = placement::assign_real_eigenvalues(&a11.transpose(), &c1.transpose(), &targets)?;
        let placed = linalg::eigenvalues(&(&a11 + kd.transpose() * &c1))?;
        if linalg::max_real_part(&placed) > part.alpha - settings.placement.margin {
            return Err(GeoError::SpectrumUnassignable { eigenvalues: placed });
        }
        to * kd.transpose()
    };

    let gain = base + p_g.transpose() * &g * &y;
    let quotient_map = &a0 + &g * &c_reduced;
    let residual = friend_residual(a, c, &gain, wg_star);
    if residual > tol.residual_bound(a.norm()) {
        return Err(GeoError::InvarianceViolated { residual });
    }
    let eigs = linalg::eigenvalues(&quotient_map)?;
    if eigs.iter().any(|&z| !part.is_good(z)) {
        return Err(GeoError::SpectrumUnassignable { eigenvalues: eigs });
    }
    Ok(StabilizingFriend {
        gain,
        quotient_map,
        fixed,
    })
}

/// Geometric data of one `(C, A, Im B̄)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricDecomposition {
    pub w_star: Subspace,
    pub s_star: Subspace,
    /// Common friend of `W*`, `S*` and `W_g*`.
    pub friend: Mat,
    /// Good part of `S*/W*`, in the chart of `X/W*`.
    pub xbar_g: Subspace,
    /// Bad part of `S*/W*`, in the chart of `X/W*`.
    pub xbar_b: Subspace,
    pub wg_star: Subspace,
    /// Ambient orthonormal basis of `W_g* ⊖ W*`.
    pub v: Mat,
    pub p_wstar: Mat,
    pub p_wg: Mat,
    pub zeros: Vec<Complex64>,
    pub w_dims: Vec<usize>,
    pub s_dims: Vec<usize>,
}

pub fn decompose(
    a: &Mat,
    c: &Mat,
    bbar: &Mat,
    settings: &SynthesisSettings,
) -> Result<GeometricDecomposition> {
    let tol = &settings.tol;
    if bbar.nrows() != a.nrows() {
        return Err(GeoError::DimensionMismatch {
            context: "unknown-input matrix rows",
            expected: a.nrows(),
            actual: bbar.nrows(),
        });
    }
    let bsub = image(bbar, tol);
    let w_rec = infimal_conditioned_invariant_traced(a, c, &bsub, tol)?;
    let w_star = w_rec.subspace;
    let s_rec = infimal_unobservability_subspace_traced(a, c, &w_star, tol)?;
    let s_star = s_rec.subspace;

    let friend = common_friend(a, c, &[&w_star, &s_star], tol)
        .or_else(|_| friend_gain(a, c, &w_star, tol))?;
    let split = spectral_split(a, c, &w_star, &s_star, &friend, &settings.spectral, tol)?;
    let p_wstar = canonical_projection(&w_star);
    let wg_star = compute_wg_star(&w_star, &split.xbar_b, &p_wstar, tol)?;
    let v = p_wstar.transpose() * split.xbar_b.basis();
    let p_wg = canonical_projection(&wg_star);
    Ok(GeometricDecomposition {
        w_star,
        s_star,
        friend,
        xbar_g: split.xbar_g,
        xbar_b: split.xbar_b,
        wg_star,
        v,
        p_wstar,
        p_wg,
        zeros: split.zeros,
        w_dims: w_rec.dims,
        s_dims: s_rec.dims,
    })
}
