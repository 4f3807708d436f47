//! Centralized unknown-input observer
//!
//! ```text
//! ż = Ā̄_L z + P_g B́ ú − P_g L y,    x̂ = E z + F y
//! ```
//!
//! where `P_g` is the chart of `X/W_g*` and `E P_g + F C = I`.

use num_complex::Complex64;

use crate::error::{ExistenceFailure, GeoError, Result};
use crate::geometry::{
    decompose, friend_residual, stabilizing_friend, GeometricDecomposition, SpectralPartition,
    SynthesisSettings,
};
use crate::linalg::{self, Mat, Vector};
use crate::subspace::{intersect, kernel, Subspace, TolerancePolicy};
use crate::system::{InputPartition, LinSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedObserver {
    /// `Ā̄_L`, the quotient map of `A + L C` on `X/W_g*`.
    pub abar_l: Mat,
    pub p_wg: Mat,
    pub l: Mat,
    pub e: Mat,
    pub f: Mat,
    /// `P_g B́`.
    pub known_input_map: Mat,
    /// `P_g L`.
    pub output_injection: Mat,
    pub decomp: GeometricDecomposition,
}

/// Residuals of the defining identities of a synthesized observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverResiduals {
    /// `‖E P + F C − I‖_F`.
    pub reconstruction: f64,
    /// `‖P_g B̄‖_F`.
    pub unknown_input_leak: f64,
    /// `‖P_{W_g*^⊥} (A + L C) W_g*‖_F`.
    pub friend: f64,
    /// `‖Ā̄_L P_g − P_g (A + L C)‖_F`.
    pub commutation: f64,
    pub max_real_eigenvalue: f64,
    /// `dim X̄_g + dim X̄_b == dim S* − dim W*`.
    pub dimension_identity: bool,
}

impl CentralizedObserver {
    pub fn z_dim(&self) -> usize {
        self.abar_l.nrows()
    }

    pub fn rhs(&self, z: &Vector, y: &Vector, u_known: &Vector) -> Vector {
        &self.abar_l * z + &self.known_input_map * u_known - &self.output_injection * y
    }

    pub fn estimate(&self, z: &Vector, y: &Vector) -> Vector {
        &self.e * z + &self.f * y
    }

    /// `ζ = P_g x − z`.
    pub fn quotient_error(&self, x: &Vector, z: &Vector) -> Vector {
        &self.p_wg * x - z
    }

    pub fn residuals(&self, sys: &LinSystem, part: &InputPartition) -> Result<ObserverResiduals> {
        let n = sys.n();
        let a_l = &sys.a + &self.l * &sys.c;
        let eigs = linalg::eigenvalues(&self.abar_l)?;
        let d = &self.decomp;
        Ok(ObserverResiduals {
            reconstruction: (&self.e * &self.p_wg + &self.f * &sys.c - Mat::identity(n, n)).norm(),
            unknown_input_leak: (&self.p_wg * &part.b_unknown).norm(),
            friend: friend_residual(&sys.a, &sys.c, &self.l, &d.wg_star),
            commutation: (&self.abar_l * &self.p_wg - &self.p_wg * a_l).norm(),
            max_real_eigenvalue: linalg::max_real_part(&eigs),
            dimension_identity: d.xbar_g.dim() + d.xbar_b.dim() == d.s_star.dim() - d.w_star.dim(),
        })
    }
}

/// `W_g* ∩ Ker C`.
pub fn uio_obstruction(decomp: &GeometricDecomposition, c: &Mat, tol: &TolerancePolicy) -> Result<Subspace> {
    intersect(&decomp.wg_star, &kernel(c, tol), tol)
}

/// Whether `W_g* ∩ Ker C = 0`.
pub fn check_uio_condition(decomp: &GeometricDecomposition, c: &Mat, tol: &TolerancePolicy) -> Result<bool> {
    Ok(uio_obstruction(decomp, c, tol)?.is_zero())
}

/// Outcome of the classical rank test: `rank(C B̄) = rank(B̄)` and
/// detectability of `(C, A₁)` with `A₁ = (I − B̄ (C B̄)† C) A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankConditions {
    pub rank_matched: bool,
    pub detectable: bool,
}

impl RankConditions {
    pub fn holds(&self) -> bool {
        self.rank_matched && self.detectable
    }
}

pub fn classical_rank_condition(
    a: &Mat,
    c: &Mat,
    bbar: &Mat,
    part: &SpectralPartition,
    tol: &TolerancePolicy,
) -> Result<RankConditions> {
    let n = a.nrows();
    let cb = c * bbar;
    let b_norm = linalg::spectral_norm(bbar);
    let rank_b = rank_scaled(bbar, b_norm, tol);
    let rank_cb = rank_scaled(&cb, linalg::spectral_norm(c) * b_norm, tol);

    let cb_pinv = linalg::pinv_scaled(&cb, linalg::spectral_norm(c) * b_norm, tol);
    let a1 = (Mat::identity(n, n) - bbar * cb_pinv * c) * a;
    let mut detectable = true;
    for lambda in linalg::eigenvalues(&a1)? {
        if part.is_good(lambda) {
            continue;
        }
        if pbh_rank(&a1, c, lambda, tol) < n {
            detectable = false;
        }
    }
    Ok(RankConditions {
        rank_matched: rank_cb == rank_b,
        detectable,
    })
}

fn rank_scaled(m: &Mat, scale: f64, tol: &TolerancePolicy) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let (_, sv, _) = linalg::svd_desc(m);
    linalg::numerical_rank(&sv, m.nrows().max(m.ncols()), scale, tol)
}

/// Rank of `[λI − A; C]` over ℂ, read off its real embedding
/// `[[X, −Y], [Y, X]]`, whose singular values are those of `X + iY`
/// each repeated twice.
fn pbh_rank(a: &Mat, c: &Mat, lambda: Complex64, tol: &TolerancePolicy) -> usize {
    let n = a.nrows();
    let p = c.nrows();
    let re = Mat::from_fn(n + p, n, |i, j| {
        if i < n {
            let diag = if i == j { lambda.re } else { 0.0 };
            diag - a[(i, j)]
        } else {
            c[(i - n, j)]
        }
    });
    let im = Mat::from_fn(n + p, n, |i, j| if i < n && i == j { lambda.im } else { 0.0 });
    let embedded = linalg::vstack(&linalg::hstack(&re, &(-&im)), &linalg::hstack(&im, &re));
    let (_, sv, _) = linalg::svd_desc(&embedded);
    let paired: Vec<f64> = sv.iter().step_by(2).copied().collect();
    let scale = paired.first().copied().unwrap_or(0.0);
    linalg::numerical_rank(&paired, n + p, scale, tol)
}

/// Minimum-norm `(E, F)` with `E P + F C = I`.
pub fn solve_output_reconstruction(p_wg: &Mat, c: &Mat, tol: &TolerancePolicy) -> Result<(Mat, Mat)> {
    let n = p_wg.ncols();
    if c.ncols() != n {
        return Err(GeoError::DimensionMismatch {
            context: "solve_output_reconstruction",
            expected: n,
            actual: c.ncols(),
        });
    }
    let stacked = linalg::vstack(p_wg, c);
    let rank = rank_scaled(&stacked, linalg::spectral_norm(&stacked), tol);
    if rank < n {
        return Err(GeoError::NotSolvable { rank, n });
    }
    let sol = linalg::pinv(&stacked, tol);
    let r = p_wg.nrows();
    let e = sol.columns(0, r).into_owned();
    let f = sol.columns(r, c.nrows()).into_owned();
    let residual = (&e * p_wg + &f * c - Mat::identity(n, n)).norm();
    if residual > tol.abs_residual_tol {
        return Err(GeoError::NotSolvable { rank, n });
    }
    Ok((e, f))
}

pub fn synthesize_centralized_uio(
    sys: &LinSystem,
    part: &InputPartition,
    settings: &SynthesisSettings,
) -> Result<CentralizedObserver> {
    let tol = &settings.tol;
    let decomp = decompose(&sys.a, &sys.c, &part.b_unknown, settings)?;
    let obstruction = uio_obstruction(&decomp, &sys.c, tol)?;
    if !obstruction.is_zero() {
        let basis = obstruction
            .basis()
            .column_iter()
            .map(|col| col.iter().copied().collect())
            .collect();
        return Err(GeoError::ExistenceFailed(ExistenceFailure::Intersection { basis }));
    }
    let sf = stabilizing_friend(&sys.a, &sys.c, &decomp.wg_star, &decomp.friend, settings)
        .map_err(|e| match e {
            GeoError::SpectrumUnassignable { eigenvalues } => {
                GeoError::ExistenceFailed(ExistenceFailure::Spectrum { eigenvalues })
            }
            other => other,
        })?;
    let (e, f) = solve_output_reconstruction(&decomp.p_wg, &sys.c, tol)?;
    let p_wg = decomp.p_wg.clone();
    Ok(CentralizedObserver {
        known_input_map: &p_wg * &part.b_known,
        output_injection: &p_wg * &sf.gain,
        abar_l: sf.quotient_map,
        l: sf.gain,
        e,
        f,
        p_wg,
        decomp,
    })
}
