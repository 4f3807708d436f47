use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::linalg::{self, Mat};

/// Continuous-time plant `ẋ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinSystem {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

impl LinSystem {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(GeoError::DimensionMismatch {
                context: "A must be square",
                expected: n,
                actual: a.ncols(),
            });
        }
        if b.nrows() != n {
            return Err(GeoError::DimensionMismatch {
                context: "B rows",
                expected: n,
                actual: b.nrows(),
            });
        }
        if c.ncols() != n {
            return Err(GeoError::DimensionMismatch {
                context: "C columns",
                expected: n,
                actual: c.ncols(),
            });
        }
        if ![&a, &b, &c].into_iter().all(linalg::is_finite) {
            return Err(GeoError::NonFinite("system matrices"));
        }
        Ok(LinSystem { a, b, c })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }
}

/// Split of the input columns into known (`B́`) and unknown (`B̄`) parts.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPartition {
    pub known_cols: Vec<usize>,
    pub unknown_cols: Vec<usize>,
    pub b_known: Mat,
    pub b_unknown: Mat,
}

impl InputPartition {
    /// Every column of `B` must appear in exactly one of the two lists.
    pub fn new(b: &Mat, known_cols: Vec<usize>, unknown_cols: Vec<usize>) -> Result<Self> {
        let m = b.ncols();
        let mut seen = vec![false; m];
        for &j in known_cols.iter().chain(&unknown_cols) {
            if j >= m {
                return Err(GeoError::InvalidInput(format!(
                    "input column {j} out of range (B has {m} columns)"
                )));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(GeoError::InvalidInput(format!(
                    "input column {j} listed twice"
                )));
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(GeoError::InvalidInput(format!(
                "input column {j} is neither known nor unknown"
            )));
        }
        Ok(InputPartition {
            b_known: linalg::select_columns(b, &known_cols),
            b_unknown: linalg::select_columns(b, &unknown_cols),
            known_cols,
            unknown_cols,
        })
    }

    /// Known inputs picked out of a full input vector.
    pub fn known_part(&self, u: &linalg::Vector) -> linalg::Vector {
        linalg::Vector::from_iterator(self.known_cols.len(), self.known_cols.iter().map(|&j| u[j]))
    }

    pub fn unknown_part(&self, u: &linalg::Vector) -> linalg::Vector {
        linalg::Vector::from_iterator(
            self.unknown_cols.len(),
            self.unknown_cols.iter().map(|&j| u[j]),
        )
    }

    /// `m − l ≤ p ≤ n`.
    pub fn within_output_budget(&self, p: usize, n: usize) -> bool {
        self.unknown_cols.len() <= p && p <= n
    }
}
