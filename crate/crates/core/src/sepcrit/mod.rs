//! Separability criteria: the partial-transpose test and the range
//! criterion, with the product-vector solver that powers the latter.

mod range;
pub mod refine;
mod report;
mod solver;

use serde::Serialize;

use crate::matkit::{eig_hermitian, CMatrix, SubspaceBasis, C64};
use crate::statefab::BipartiteState;

pub use range::{range_criterion, RangeOutcome, WitnessRange};
pub use report::{analyze, Direction, ProductVectorCounts, SeparabilityReport, Verdict};
pub use solver::{matricization_singular_values, product_vectors_in_subspace, ChartKind, ChartRecord, ProductVectorSet};

/// Numerical thresholds shared by the criteria.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// A partial-transpose eigenvalue below `-tol_eig` counts as negative.
    pub tol_eig: f64,
    /// Eigenvalues with `|λ| > tol_rank` contribute to a range.
    pub tol_rank: f64,
    /// Relative residual for subspace membership.
    pub tol_member: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_eig: 1e-9, tol_rank: 1e-8, tol_member: 1e-7 }
    }
}

/// Sampling configuration for the product-vector searches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingBudget {
    /// Random complex values per free chart parameter (besides 0 and 1).
    pub samples_per_param: usize,
    pub seed: u64,
    /// Cap on emitted samples per solver call; hitting it flags the result partial.
    pub max_samples: usize,
    /// Random starting points for the admissible-vector search.
    pub admissible_starts: usize,
}

impl Default for SamplingBudget {
    fn default() -> Self {
        Self { samples_per_param: 25, seed: 42, max_samples: 20_000, admissible_starts: 100 }
    }
}

impl SamplingBudget {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Twice the sampling effort, on an independent seed.
    pub fn doubled(self) -> Self {
        Self {
            samples_per_param: 2 * self.samples_per_param,
            seed: self.seed ^ 0xD1B5_4A32_D192_ED03,
            max_samples: 2 * self.max_samples,
            admissible_starts: 2 * self.admissible_starts,
        }
    }
}

/// Result of the partial-transpose test.
#[derive(Clone, Debug, PartialEq)]
pub struct PptCheck {
    pub is_ppt: bool,
    pub min_eig: f64,
    /// Unit eigenvector of `ρ^{T₂}` for `min_eig`.
    pub eigvec: Vec<C64>,
}

pub fn ppt_check(s: &BipartiteState, tol_eig: f64) -> PptCheck {
    let e = eig_hermitian(&s.partial_transpose()).expect("partial transpose of a Hermitian matrix is Hermitian");
    let min_eig = e.values[0];
    PptCheck { is_ppt: min_eig >= -tol_eig, min_eig, eigvec: e.vector(0) }
}

/// Span of the eigenvectors with `|λ| > tol_rank`.
pub fn range_of(m: &CMatrix, tol_rank: f64) -> SubspaceBasis {
    let e = eig_hermitian(m).expect("range_of needs a Hermitian matrix");
    let keep: Vec<Vec<C64>> =
        (0..e.values.len()).rev().filter(|&k| e.values[k].abs() > tol_rank).map(|k| e.vector(k)).collect();
    SubspaceBasis::from_orthonormal(m.rows(), keep).expect("eigenvectors are orthonormal")
}
