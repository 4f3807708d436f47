#![allow(dead_code)]

use geo_uio::Mat;
use proptest::prelude::*;

pub fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |v| Mat::from_vec(rows, cols, v))
}

/// `(n, A, C, B̄)` with `n ≤ max_n`, up to 3 outputs and 2 unknown inputs.
pub fn triple(max_n: usize) -> impl Strategy<Value = (Mat, Mat, Mat)> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), 1..=n.min(3), 1..=n.min(2)))
        .prop_flat_map(|(n, p, q)| (matrix(n, n), matrix(p, n), matrix(n, q)))
}

pub fn sorted_eigs(m: &Mat) -> Vec<(f64, f64)> {
    let mut e: Vec<(f64, f64)> = geo_uio::linalg::eigenvalues(m)
        .unwrap()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    e.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    e
}
