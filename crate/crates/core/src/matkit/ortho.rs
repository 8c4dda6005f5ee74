use super::{dot, eig_hermitian, norm, svd_jacobi, CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Orthonormal spanning set of a subspace of `C^dim_ambient`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    dim_ambient: usize,
    vectors: Vec<Vec<C64>>,
}

impl SubspaceBasis {
    pub fn empty(dim_ambient: usize) -> Self {
        Self { dim_ambient, vectors: Vec::new() }
    }

    pub fn full(dim_ambient: usize) -> Self {
        Self {
            dim_ambient,
            vectors: (0..dim_ambient).map(|k| super::basis_vector(dim_ambient, k)).collect(),
        }
    }

    /// Wraps vectors that are already orthonormal; checks that they are.
    pub fn from_orthonormal(dim_ambient: usize, vectors: Vec<Vec<C64>>) -> Result<Self> {
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim_ambient {
                return Err(Error::DimensionMismatch(format!(
                    "vector {i} has length {} in ambient dimension {dim_ambient}",
                    v.len()
                )));
            }
            for (j, w) in vectors.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                let g = dot(w, v);
                if (g - C64::new(target, 0.0)).norm() > 1e-10 {
                    return Err(Error::Invariant {
                        invariant: "orthonormal",
                        detail: format!("⟨v{j}, v{i}⟩ = {g}"),
                    });
                }
            }
        }
        Ok(Self { dim_ambient, vectors })
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim_ambient];
        for b in &self.vectors {
            let c = dot(b, v);
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }

    /// `‖(I − P) v‖`.
    pub fn residual(&self, v: &[C64]) -> f64 {
        let p = self.project(v);
        v.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Relative membership test: `‖(I − P) v‖ ≤ tol · ‖v‖`.
    pub fn contains(&self, v: &[C64], tol: f64) -> bool {
        self.residual(v) <= tol * norm(v)
    }

    pub fn projector(&self) -> CMatrix {
        let n = self.dim_ambient;
        CMatrix::from_fn(n, n, |i, j| self.vectors.iter().map(|b| b[i] * b[j].conj()).sum())
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> SubspaceBasis {
        if self.vectors.is_empty() {
            return Self::full(self.dim_ambient);
        }
        let rows = CMatrix::from_fn(self.dim(), self.dim_ambient, |i, j| self.vectors[i][j].conj());
        // rows are orthonormal, so the Gram eigenvalues are 0 or 1
        nullspace(&rows, 0.5)
    }

    /// Part of `self` orthogonal to `other` (which need not be a subspace of
    /// `self`). Directions whose component outside `other` is shorter than
    /// `tol` are treated as covered.
    pub fn minus(&self, other: &SubspaceBasis, tol: f64) -> SubspaceBasis {
        if self.is_empty() {
            return self.clone();
        }
        // eigenvectors of P_self (I - P_other) P_self with eigenvalue near 1
        let ps = self.projector();
        let po = other.projector();
        let id = CMatrix::identity(self.dim_ambient);
        let m = &(&ps * &(&id - &po)) * &ps;
        let m = (&m + &m.adjoint()).scale(0.5);
        let e = eig_hermitian(&m).expect("projector product is Hermitian");
        let keep: Vec<Vec<C64>> = (0..e.values.len())
            .rev()
            .filter(|&k| e.values[k] > tol * tol)
            .map(|k| e.vector(k))
            .collect();
        orthonormalize(&keep, 1e-6)
    }
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass. A vector whose
/// residual after projection is at most `tol` times its original norm is
/// dropped, so the output size reveals the numerical rank.
pub fn orthonormalize(vectors: &[Vec<C64>], tol: f64) -> SubspaceBasis {
    let Some(dim) = vectors.first().map(|v| v.len()) else {
        return SubspaceBasis::empty(0);
    };
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        assert_eq!(v.len(), dim, "vectors must share one ambient dimension");
        let n0 = norm(v);
        if n0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let n = norm(&w);
        if n > tol * n0 {
            basis.push(w.into_iter().map(|z| z / n).collect());
        }
        if basis.len() == dim {
            break;
        }
    }
    SubspaceBasis { dim_ambient: dim, vectors: basis }
}

/// Kernel of `m`: right singular vectors with singular value at most
/// `tol · max(1, ‖m‖₂)`.
pub fn nullspace(m: &CMatrix, tol: f64) -> SubspaceBasis {
    let n = m.cols();
    if m.rows() == 0 {
        return SubspaceBasis::full(n);
    }
    let s = svd_jacobi(m);
    let cut = tol * s.values.first().copied().unwrap_or(0.0).max(1.0);
    let vectors = (0..n).filter(|&k| s.values[k] <= cut).map(|k| s.right.col(k)).collect();
    SubspaceBasis { dim_ambient: n, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::{real_vec, rng::SeededRng};

    #[test]
    fn collinear_pair_has_rank_one() {
        let b = orthonormalize(&[real_vec(&[1.0, 0.0]), real_vec(&[2.0, 0.0])], 1e-10);
        assert_eq!(b.dim(), 1);
        assert!((b.vectors()[0][0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_pair_unchanged() {
        let b = orthonormalize(&[real_vec(&[1.0, 0.0]), real_vec(&[0.0, 1.0])], 1e-10);
        assert_eq!(b.dim(), 2);
        assert_eq!(b.vectors()[0], real_vec(&[1.0, 0.0]));
        assert_eq!(b.vectors()[1], real_vec(&[0.0, 1.0]));
    }

    #[test]
    fn empty_input_is_valid() {
        assert_eq!(orthonormalize(&[], 1e-10).dim(), 0);
    }

    #[test]
    fn general_t2_range_form_has_rank_six() {
        // u = (A,B,C; B,D,E; C+F,E,xF) with one parameter set to 1 at a time
        let x = 3f64.sqrt();
        let cols = [
            [1.0, 0., 0., 0., 0., 0., 0., 0., 0.],
            [0., 1., 0., 1., 0., 0., 0., 0., 0.],
            [0., 0., 1., 0., 0., 0., 1., 0., 0.],
            [0., 0., 0., 0., 1., 0., 0., 0., 0.],
            [0., 0., 0., 0., 0., 1., 0., 1., 0.],
            [0., 0., 0., 0., 0., 0., 1., 0., x],
        ];
        let vs: Vec<_> = cols.iter().map(|c| real_vec(c)).collect();
        assert_eq!(orthonormalize(&vs, 1e-10).dim(), 6);
    }

    #[test]
    fn nullspace_of_zero_matrix_is_everything() {
        assert_eq!(nullspace(&CMatrix::zeros(2, 3), 1e-10).dim(), 3);
    }

    #[test]
    fn nullspace_of_identity_is_empty() {
        assert_eq!(nullspace(&CMatrix::identity(2), 1e-10).dim(), 0);
    }

    #[test]
    fn nullspace_single_constraint() {
        let s = 0.5f64.sqrt();
        let m = CMatrix::from_real_rows(&[&[s, 0.0, -s]]);
        let k = nullspace(&m, 1e-10);
        assert_eq!(k.dim(), 2);
        for v in k.vectors() {
            assert!(m.mul_vec(v)[0].norm() < 1e-12);
        }
    }

    #[test]
    fn complement_and_minus() {
        let mut rng = SeededRng::new(11);
        let b = orthonormalize(&[rng.complex_vec(5), rng.complex_vec(5)], 1e-10);
        let c = b.complement();
        assert_eq!(c.dim(), 3);
        for v in c.vectors() {
            assert!(b.residual(v) > 1.0 - 1e-10);
        }
        let sub = orthonormalize(&[b.vectors()[0].clone()], 1e-10);
        let rest = b.minus(&sub, 1e-6);
        assert_eq!(rest.dim(), 1);
        assert!(sub.residual(&rest.vectors()[0]) > 1.0 - 1e-10);
        assert!(b.contains(&rest.vectors()[0], 1e-10));
    }
}
