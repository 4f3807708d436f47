mod common;

use common::{matrix, triple};
use geo_uio::central::{classical_rank_condition, synthesize_centralized_uio};
use geo_uio::geometry::*;
use geo_uio::subspace::*;
use geo_uio::{linalg, InputPartition, LinSystem, Mat, SynthesisSettings};
use proptest::prelude::*;

fn settings() -> SynthesisSettings {
    SynthesisSettings::default()
}

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

/// Eigenvalues of the map `a` induces on `outer / inner` (`inner ⊆ outer`,
/// both invariant under `a`).
fn quotient_eigs(a: &Mat, outer: &Subspace, inner: &Subspace) -> Vec<(f64, f64)> {
    let t = if inner.is_zero() {
        outer.basis().clone()
    } else {
        let rel = intersect(outer, &orth_complement(inner), &tol()).unwrap();
        rel.basis().clone()
    };
    common::sorted_eigs(&(t.transpose() * a * &t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn conditioned_invariant_recursion_is_monotone((a, c, bbar) in triple(5)) {
        let b = image(&bbar, &tol());
        let rec = infimal_conditioned_invariant_traced(&a, &c, &b, &tol()).unwrap();
        let n = a.nrows();
        prop_assert!(rec.dims.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(rec.iterations() <= n);
        prop_assert_eq!(rec.dims[0], b.dim());
        prop_assert!(contains(&rec.subspace, &b, &tol()).unwrap());
        let res = conditioned_invariance_residual(&a, &c, &rec.subspace, &tol()).unwrap();
        prop_assert!(res <= 1e-8, "A(W ∩ Ker C) leaves W by {res:e}");
    }

    #[test]
    fn unobservability_recursion_is_monotone((a, c, bbar) in triple(5)) {
        let w = infimal_conditioned_invariant(&a, &c, &image(&bbar, &tol()), &tol()).unwrap();
        let rec = infimal_unobservability_subspace_traced(&a, &c, &w, &tol()).unwrap();
        prop_assert!(rec.dims.windows(2).all(|d| d[0] >= d[1]));
        prop_assert!(rec.iterations() <= a.nrows());
        prop_assert!(contains(&rec.subspace, &w, &tol()).unwrap());
        let hidden = unobservable_subspace(&a, &c, &tol()).unwrap();
        prop_assert!(contains(&rec.subspace, &hidden, &tol()).unwrap());
    }

    #[test]
    fn rank_condition_collapses_w_star_to_disturbance_image((a, c, bbar) in triple(5)) {
        let b = image(&bbar, &tol());
        let cb = image(&(&c * &bbar), &tol());
        prop_assume!(cb.dim() == b.dim());
        let w = infimal_conditioned_invariant(&a, &c, &b, &tol()).unwrap();
        prop_assert!(equal(&w, &b, &tol()).unwrap());
    }

    #[test]
    fn decomposition_invariants((a, c, bbar) in triple(5)) {
        let Ok(d) = decompose(&a, &c, &bbar, &settings()) else {
            return Ok(());
        };
        let t = tol();
        prop_assert!(contains(&d.wg_star, &d.w_star, &t).unwrap());
        prop_assert!(contains(&d.s_star, &d.wg_star, &t).unwrap());
        prop_assert_eq!(d.xbar_g.dim() + d.xbar_b.dim(), d.s_star.dim() - d.w_star.dim());
        prop_assert_eq!(d.wg_star.dim(), d.w_star.dim() + d.xbar_b.dim());
        prop_assert_eq!(d.zeros.len(), d.s_star.dim() - d.w_star.dim());
        let a_l = &a + &d.friend * &c;
        for s in [&d.w_star, &d.s_star, &d.wg_star] {
            prop_assert!(is_invariant(&a_l, s, &t));
        }
        let bad = d.zeros.iter().filter(|&&z| settings().spectral.is_bad(z)).count();
        prop_assert_eq!(bad, d.xbar_b.dim());
        let k = d.p_wg.nrows();
        prop_assert!((&d.p_wg * d.p_wg.transpose() - Mat::identity(k, k)).norm() <= 1e-10);
        prop_assert!((&d.p_wg * d.wg_star.basis()).norm() <= 1e-10);
        prop_assert!((d.v.transpose() * d.w_star.basis()).norm() <= 1e-9);
    }

    #[test]
    fn zeros_do_not_depend_on_the_friend((a, c, bbar) in triple(5), mix in matrix(5, 3)) {
        let t = tol();
        let w = infimal_conditioned_invariant(&a, &c, &image(&bbar, &t), &t).unwrap();
        let s = infimal_unobservability_subspace(&a, &c, &w, &t).unwrap();
        let Ok(l0) = common_friend(&a, &c, &[&w, &s], &t) else {
            return Ok(());
        };
        let cs = &c * s.basis();
        let y = if s.is_zero() { Mat::identity(c.nrows(), c.nrows()) } else { kernel(&cs.transpose(), &t).basis().transpose() };
        let n = a.nrows();
        let m = mix.view((0, 0), (n, y.nrows().min(3))).into_owned();
        let l1 = &l0 + &m * y.rows(0, m.ncols());
        let z0 = quotient_eigs(&(&a + &l0 * &c), &s, &w);
        let z1 = quotient_eigs(&(&a + &l1 * &c), &s, &w);
        prop_assert_eq!(z0.len(), z1.len());
        for (p, q) in z0.iter().zip(&z1) {
            prop_assert!((p.0 - q.0).abs() <= 1e-6 && (p.1 - q.1).abs() <= 1e-6, "{z0:?} vs {z1:?}");
        }
    }

    #[test]
    fn decomposition_is_deterministic((a, c, bbar) in triple(5)) {
        let first = decompose(&a, &c, &bbar, &settings());
        let second = decompose(&a, &c, &bbar, &settings());
        prop_assert_eq!(first.is_ok(), second.is_ok());
        if let (Ok(x), Ok(y)) = (first, second) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn synthesized_observers_are_stable_and_decoupled((a, c, bbar) in triple(5), known in matrix(5, 1)) {
        let n = a.nrows();
        let b_known = known.rows(0, n).into_owned();
        let b = linalg::hstack(&b_known, &bbar);
        let q = bbar.ncols();
        let sys = LinSystem::new(a.clone(), b.clone(), c.clone()).unwrap();
        let part = InputPartition::new(&b, vec![0], (1..=q).collect()).unwrap();
        let geometric = synthesize_centralized_uio(&sys, &part, &settings());
        let classical = classical_rank_condition(&a, &c, &bbar, &settings().spectral, &tol()).unwrap();
        if let Ok(obs) = geometric {
            let r = obs.residuals(&sys, &part).unwrap();
            prop_assert!(r.reconstruction <= 1e-8);
            prop_assert!(r.unknown_input_leak <= 1e-8);
            prop_assert!(r.friend <= 1e-7);
            prop_assert!(r.commutation <= 1e-7);
            prop_assert!(r.max_real_eigenvalue < 0.0);
            prop_assert!(r.dimension_identity);
            prop_assert!(classical.holds());
        }
    }
}

#[test]
fn sandwich_on_a_chain() {
    // Integrator chain x1' = x2, x2' = x3 + d, x3' = -x3, output x1.
    let a = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0]);
    let c = Mat::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
    let bbar = Mat::from_row_slice(3, 1, &[0.0, 1.0, 0.0]);
    let d = decompose(&a, &c, &bbar, &settings()).unwrap();
    assert!(contains(&d.s_star, &d.wg_star, &tol()).unwrap());
    assert!(contains(&d.wg_star, &d.w_star, &tol()).unwrap());
    assert_eq!(d.w_dims.first(), Some(&1));
    assert!(d.s_dims.windows(2).all(|w| w[0] >= w[1]));
}
