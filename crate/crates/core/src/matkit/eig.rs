use super::{fix_phase, CMatrix, C64, HERMITIAN_TOL, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` belongs to `values[k]`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.col(k)
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.vectors;
        let n = v.rows();
        CMatrix::from_fn(n, n, |i, j| {
            (0..self.values.len())
                .map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

/// Cyclic Jacobi diagonalisation of a complex Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// the classical real Jacobi rotation, so the iteration never leaves the
/// Hermitian manifold. Eigenvalues come back ascending; every eigenvector has
/// its largest-magnitude component real and positive.
pub fn eig_hermitian(m: &CMatrix) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::Contract(format!(
            "eig_hermitian needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.max_abs().max(1.0);
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (max |A - A†| = {defect:.3e})"
        )));
    }

    let n = m.rows();
    // symmetrise so roundoff in the input cannot bias the result
    let mut a = CMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);

    let total = a.frobenius();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut cols: Vec<Vec<C64>> = order.iter().map(|&k| v.col(k)).collect();
    for c in cols.iter_mut() {
        fix_phase(c);
    }
    Ok(Eigen { values, vectors: CMatrix::from_columns(&cols, n) })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if g == 0.0 || g <= 1e-300 + f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let e = apq / g;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = diag-phase · real rotation; only rows/cols p, q are touched.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -e.conj() * s;
    let jqq = e.conj() * c;

    let n = a.rows();
    // A <- A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A <- J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // V <- V J
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}
