use super::{CMatrix, C64};

const MAX_SWEEPS: usize = 60;
const ORTHO_TOL: f64 = 1e-15;

/// Singular values with their right singular vectors.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Descending, one per column of the input.
    pub values: Vec<f64>,
    /// Column `k` belongs to `values[k]`.
    pub right: CMatrix,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Works on the columns of `m` directly instead of on `m†m`, so singular
/// values far below `‖m‖` keep their absolute accuracy of about `ε‖m‖`.
pub fn svd_jacobi(m: &CMatrix) -> Svd {
    let n = m.cols();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n).map(|j| super::basis_vector(n, j)).collect();
    // columns this small are zero to working precision; rotating them further
    // only drives them into subnormals
    let floor = (1e-3 * f64::EPSILON * m.frobenius()).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = super::norm_sqr(&cols[p]);
                let beta = super::norm_sqr(&cols[q]);
                let gamma = super::dot(&cols[p], &cols[q]);
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for vecs in [&mut cols, &mut v] {
                    let len = vecs[p].len();
                    for k in 0..len {
                        let a = vecs[p][k];
                        let b = vecs[q][k] * phase.conj();
                        vecs[p][k] = c * a - s * b;
                        vecs[q][k] = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols.iter().enumerate().map(|(j, c)| (super::norm(c), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let right = CMatrix::from_fn(n, n, |i, k| v[order[k].1][i]);
    Svd { values: order.iter().map(|o| o.0).collect(), right }
}
