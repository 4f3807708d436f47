use num_complex::Complex64;
use thiserror::Error;

/// Which existence condition a centralized synthesis failed.
#[derive(Debug, Clone, PartialEq)]
pub enum ExistenceFailure {
    /// `W_g* ∩ Ker C` is nontrivial. Carries an orthonormal basis of the
    /// intersection, one column per irrecoverable direction.
    Intersection { basis: Vec<Vec<f64>> },
    /// The quotient dynamics could not be placed inside the good region.
    Spectrum { eigenvalues: Vec<Complex64> },
}

/// Which standing assumption of the distributed design is violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Communication graph is connected.
    Connected = 1,
    /// Unknown inputs of `N2` nodes are bounded by a known `ū_max`.
    BoundedInput = 2,
    /// Joint recoverability of the locally unrecoverable directions.
    JointDetectability = 3,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("subspace is not invariant under the map (residual {residual:.3e})")]
    InvarianceViolated { residual: f64 },

    #[error("subspace is not (C,A)-invariant (residual {residual:.3e})")]
    NotConditionedInvariant { residual: f64 },

    #[error("spectrum could not be assigned; offending eigenvalues {eigenvalues:?}")]
    SpectrumUnassignable { eigenvalues: Vec<Complex64> },

    #[error("output reconstruction E·P + F·C = I is not solvable (stacked rank {rank} < {n})")]
    NotSolvable { rank: usize, n: usize },

    #[error("{}", describe_existence(.0))]
    ExistenceFailed(ExistenceFailure),

    #[error("assumption {} violated: {detail}", *.assumption as u8)]
    AssumptionViolated {
        assumption: Assumption,
        detail: String,
    },

    #[error("consensus matrix Q is singular (sigma_min = {sigma_min:.3e})")]
    SingularQ { sigma_min: f64 },

    #[error("simulation diverged at t = {time}: {detail}")]
    NonFiniteState { time: f64, detail: String },

    #[error("numerical routine failed: {0}")]
    Numerical(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn describe_existence(f: &ExistenceFailure) -> String {
    match f {
        ExistenceFailure::Intersection { basis } => format!(
            "UIO existence condition W_g* ∩ Ker C = 0 fails: intersection has dimension {}",
            basis.len()
        ),
        ExistenceFailure::Spectrum { eigenvalues } => format!(
            "UIO existence fails: quotient spectrum not assignable, fixed eigenvalues {eigenvalues:?}"
        ),
    }
}

pub type Result<T> = std::result::Result<T, GeoError>;
