//! Dense complex linear algebra for the small matrices that show up in
//! bipartite problems (composite dimension up to ~16).
//!
//! Everything is row-major `Complex64`. The module carries its own Hermitian
//! eigensolver (cyclic Jacobi), a one-sided Jacobi SVD, Gram-Schmidt orthonormalisation, kernel
//! computation and a Durand-Kerner polynomial root finder.

mod eig;
mod ortho;
mod poly;
pub mod rng;
mod svd;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eig::{eig_hermitian, Eigen};
pub use ortho::{nullspace, orthonormalize, SubspaceBasis};
pub use poly::{poly_roots, Polynomial};
pub use svd::{svd_jacobi, Svd};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance used by Hermitian-flagged operations.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Contract(format!(
                "{} entries supplied for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn<F>(rows: usize, cols: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> C64,
    {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from real entries, row by row. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| {
            assert_eq!(rows[i].len(), c, "ragged rows");
            C64::new(rows[i][j], 0.0)
        })
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(d[i], 0.0) } else { ZERO })
    }

    /// Single-column matrix.
    pub fn column(v: &[C64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>], rows: usize) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    /// `|v⟩⟨v|`, unnormalised.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    /// Projector onto the ray of `v`.
    pub fn projector(v: &[C64]) -> Self {
        let n2 = norm_sqr(v);
        Self::outer(v).scale(1.0 / n2)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |a_ij - b_ij|`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A - A†|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && self.hermitian_defect() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Contract(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨v, A v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        dot(v, &self.mul_vec(v))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("conformable matrices")
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = f.precision().unwrap_or(4);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self[(i, j)];
                if j > 0 {
                    write!(f, "  ")?;
                }
                if z.im.abs() < 0.5 * 10f64.powi(-(prec as i32)) {
                    write!(f, "{:>w$.p$}", z.re, w = prec + 3, p = prec)?;
                } else {
                    write!(f, "{:.p$}{:+.p$}i", z.re, z.im, p = prec)?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Determinant by LU factorisation with partial pivoting.
pub fn det(m: &CMatrix) -> C64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut d = ONE;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
            .expect("nonempty");
        if a[(p, k)] == ZERO {
            return ZERO;
        }
        if p != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = t;
            }
            d = -d;
        }
        let piv = a[(k, k)];
        d *= piv;
        for i in (k + 1)..n {
            let f = a[(i, k)] / piv;
            if f != ZERO {
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }
    }
    d
}

/// Kronecker product, first factor major: entry `((m,μ),(n,ν))` sits at
/// row `m·rows_b + μ`, column `n·cols_b + ν`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (br, bc) = (b.rows, b.cols);
    CMatrix::from_fn(a.rows * br, a.cols * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Kronecker product of two vectors (column convention).
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// `⟨a, b⟩`, conjugate-linear in the first argument.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    norm_sqr(v).sqrt()
}

/// Returns `v / ‖v‖`, or `None` for the zero vector.
pub fn normalized(v: &[C64]) -> Option<Vec<C64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|z| z / n).collect())
}

pub fn conj_vec(v: &[C64]) -> Vec<C64> {
    v.iter().map(|z| z.conj()).collect()
}

/// Standard basis vector `e_k` of dimension `n` (0-based `k`).
pub fn basis_vector(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[k] = ONE;
    v
}

pub fn real_vec(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// `|⟨a,b⟩| / (‖a‖‖b‖)`; 0 if either vector vanishes.
pub fn projective_overlap(a: &[C64], b: &[C64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        return 0.0;
    }
    (dot(a, b).norm() / d).min(1.0)
}

/// Sine of the angle between the rays of `a` and `b`.
pub fn projective_distance(a: &[C64], b: &[C64]) -> f64 {
    let o = projective_overlap(a, b);
    (1.0 - o * o).max(0.0).sqrt()
}

/// Rescales `v` so that its largest-magnitude component (first one on ties)
/// is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let k = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
    let phase = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}
