//! Bipartite density matrices, the named state families and partial
//! transposition.

mod families;
pub(crate) mod io;

use crate::error::{Error, Result};
use crate::matkit::{conj_vec, eig_hermitian, kron_vec, norm, CMatrix, C64};

pub use families::{eps_mix, state_family, Family, FAMILY_NAMES};
pub use io::{read_state, write_state, StateFile};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// Density matrix on `C^dim_a ⊗ C^dim_b`, composite index `m·dim_b + μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    rho: CMatrix,
    label: Option<String>,
}

impl BipartiteState {
    /// Validates shape, hermiticity, unit trace and positivity.
    pub fn new(dim_a: usize, dim_b: usize, rho: CMatrix) -> Result<Self> {
        let n = dim_a * dim_b;
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::DimensionMismatch("factor dimensions must be positive".into()));
        }
        if rho.rows() != n || rho.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "dims {dim_a}x{dim_b} need a {n}x{n} matrix, got {}x{}",
                rho.rows(),
                rho.cols()
            )));
        }
        let defect = rho.hermitian_defect();
        if defect > crate::matkit::HERMITIAN_TOL {
            let (i, j) = worst_hermitian_entry(&rho);
            return Err(Error::Invariant {
                invariant: "hermitian",
                detail: format!("max |ρ - ρ†| = {defect:.3e} at entry ({i}, {j})"),
            });
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Invariant {
                invariant: "trace",
                detail: format!("trace is {:.12} (must be 1)", tr.re),
            });
        }
        let min_eig = eig_hermitian(&rho)?.values[0];
        if min_eig < -PSD_TOL {
            return Err(Error::Invariant {
                invariant: "psd",
                detail: format!("minimum eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(Self { dim_a, dim_b, rho, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// `ρ^{T₂}` as a matrix.
    pub fn partial_transpose(&self) -> CMatrix {
        partial_transpose(self)
    }

    /// The partially transposed operator as a state, when it is one.
    pub fn pt_dual(&self) -> Result<Self> {
        let s = Self::new(self.dim_a, self.dim_b, self.partial_transpose())?;
        Ok(match &self.label {
            Some(l) => s.with_label(format!("{l}^T2")),
            None => s,
        })
    }
}

fn worst_hermitian_entry(m: &CMatrix) -> (usize, usize) {
    let mut best = (0, 0, -1.0);
    for i in 0..m.rows() {
        for j in i..m.cols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    (best.0, best.1)
}

/// Partial transposition on the second factor:
/// `out[(m,μ),(n,ν)] = ρ[(m,ν),(n,μ)]`.
pub fn partial_transpose(s: &BipartiteState) -> CMatrix {
    partial_transpose_matrix(s.rho(), s.dim_a, s.dim_b)
}

pub fn partial_transpose_matrix(m: &CMatrix, dim_a: usize, dim_b: usize) -> CMatrix {
    let n = dim_a * dim_b;
    assert_eq!((m.rows(), m.cols()), (n, n), "operator does not match the dimensions");
    CMatrix::from_fn(n, n, |i, j| {
        let (ma, mu) = (i / dim_b, i % dim_b);
        let (na, nu) = (j / dim_b, j % dim_b);
        m[(ma * dim_b + nu, na * dim_b + mu)]
    })
}

/// Partial transposition on the first factor.
pub fn partial_transpose_first(m: &CMatrix, dim_a: usize, dim_b: usize) -> CMatrix {
    let n = dim_a * dim_b;
    assert_eq!((m.rows(), m.cols()), (n, n), "operator does not match the dimensions");
    CMatrix::from_fn(n, n, |i, j| {
        let (ma, mu) = (i / dim_b, i % dim_b);
        let (na, nu) = (j / dim_b, j % dim_b);
        m[(na * dim_b + mu, ma * dim_b + nu)]
    })
}

/// Product vector `φ ⊗ χ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductVector {
    pub phi: Vec<C64>,
    pub chi: Vec<C64>,
}

impl ProductVector {
    pub fn new(phi: Vec<C64>, chi: Vec<C64>) -> Result<Self> {
        if norm(&phi) == 0.0 || norm(&chi) == 0.0 {
            return Err(Error::Contract("product vector factors must be nonzero".into()));
        }
        Ok(Self { phi, chi })
    }

    /// Composite-space column vector `kron(φ, χ)`.
    pub fn embed(&self) -> Vec<C64> {
        kron_vec(&self.phi, &self.chi)
    }

    /// `φ ⊗ χ*`.
    pub fn partial_conjugate(&self) -> Self {
        Self { phi: self.phi.clone(), chi: conj_vec(&self.chi) }
    }

    /// Both factors scaled to unit norm.
    pub fn normalized(&self) -> Self {
        let (np, nc) = (norm(&self.phi), norm(&self.chi));
        Self {
            phi: self.phi.iter().map(|z| z / np).collect(),
            chi: self.chi.iter().map(|z| z / nc).collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.phi.len(), self.chi.len())
    }
}

/// Partial complex conjugation of a product vector.
pub fn partial_conjugate(v: &ProductVector) -> ProductVector {
    v.partial_conjugate()
}
