//! Local refinement of product vectors against linear constraints.
//!
//! The residual is `r(φ, χ) = [K_X†(φ⊗χ); K_Y†(φ⊗χ*)]`, where the columns of
//! `K_X`, `K_Y` span the kernels of the two ranges. The first block is
//! complex-bilinear; the second is antilinear in `χ`, so the problem is
//! solved in real coordinates `(Re φ, Im φ, Re χ, Im χ)`. A few sweeps of
//! alternating minimisation pull a random start into a basin, then
//! Levenberg-Marquardt converges quadratically onto zero-residual points.

use crate::matkit::{eig_hermitian, norm, normalized, CMatrix, SubspaceBasis, C64, ZERO};

const ALS_SWEEPS: usize = 30;
const LM_ITERS: usize = 120;
const CONVERGED: f64 = 1e-26;

/// Kernel constraints in matricised form: `coeff[m]` is the `κ × dB`
/// matrix with `coeff[m][j][n] = conj(k_j[(m, n)])`, so that
/// `K†(φ⊗χ) = Σ_m φ_m · coeff[m] · χ`.
#[derive(Clone, Debug)]
pub struct Constraints {
    pub dim_a: usize,
    pub dim_b: usize,
    coeff: Vec<CMatrix>,
}

impl Constraints {
    pub fn from_kernel(kernel: &SubspaceBasis, dim_a: usize, dim_b: usize) -> Self {
        let kappa = kernel.dim();
        let coeff = (0..dim_a)
            .map(|m| CMatrix::from_fn(kappa, dim_b, |j, n| kernel.vectors()[j][m * dim_b + n].conj()))
            .collect();
        Self { dim_a, dim_b, coeff }
    }

    pub fn count(&self) -> usize {
        self.coeff.first().map_or(0, |c| c.rows())
    }

    /// `R(φ) = Σ_m φ_m coeff[m]`, a `κ × dB` matrix.
    pub fn row_matrix(&self, phi: &[C64]) -> CMatrix {
        let mut r = CMatrix::zeros(self.count(), self.dim_b);
        for (m, c) in self.coeff.iter().enumerate() {
            if phi[m] != ZERO {
                r = &r + &c.scale_c(phi[m]);
            }
        }
        r
    }

    /// `χ ↦ coefficients of φ`: `L(χ)[j][m] = (coeff[m] χ)_j`.
    fn phi_rows(&self, chi: &[C64]) -> Vec<Vec<C64>> {
        let per_m: Vec<Vec<C64>> = self.coeff.iter().map(|c| c.mul_vec(chi)).collect();
        (0..self.count()).map(|j| (0..self.dim_a).map(|m| per_m[m][j]).collect()).collect()
    }

    fn residual(&self, phi: &[C64], chi: &[C64]) -> Vec<C64> {
        self.row_matrix(phi).mul_vec(chi)
    }
}

/// Outcome of one refinement run; factors are unit vectors.
#[derive(Clone, Debug)]
pub struct Refined {
    pub phi: Vec<C64>,
    pub chi: Vec<C64>,
    /// `‖r(φ, χ)‖` at unit-norm factors.
    pub residual: f64,
}

/// Refines `(φ, χ)` towards `K_X†(φ⊗χ) = 0` and, when `conj` is given,
/// `K_Y†(φ⊗χ*) = 0`.
pub fn refine(x: &Constraints, conj: Option<&Constraints>, phi: &[C64], chi: &[C64]) -> Option<Refined> {
    let mut phi = normalized(phi)?;
    let mut chi = normalized(chi)?;
    let mut cost = total_cost(x, conj, &phi, &chi);
    if cost > CONVERGED {
        for _ in 0..ALS_SWEEPS {
            phi = als_phi(x, conj, &chi);
            chi = als_chi(x, conj, &phi);
            let c = total_cost(x, conj, &phi, &chi);
            let done = c <= CONVERGED || (cost - c).abs() <= 1e-3 * cost;
            cost = c;
            if done {
                break;
            }
        }
    }
    if cost > CONVERGED {
        (phi, chi, cost) = levenberg_marquardt(x, conj, phi, chi, cost);
    }
    Some(Refined { phi, chi, residual: cost.sqrt() })
}

fn total_cost(x: &Constraints, conj: Option<&Constraints>, phi: &[C64], chi: &[C64]) -> f64 {
    let mut c: f64 = x.residual(phi, chi).iter().map(|z| z.norm_sqr()).sum();
    if let Some(y) = conj {
        let cc: Vec<C64> = chi.iter().map(|z| z.conj()).collect();
        c += y.residual(phi, &cc).iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    c
}

/// Minimises over unit `φ` with `χ` fixed: smallest eigenvector of a
/// Hermitian form.
fn als_phi(x: &Constraints, conj: Option<&Constraints>, chi: &[C64]) -> Vec<C64> {
    let da = x.dim_a;
    let mut h = CMatrix::zeros(da, da);
    let mut add = |rows: Vec<Vec<C64>>| {
        for a in rows {
            for i in 0..da {
                for k in 0..da {
                    h[(i, k)] += a[i].conj() * a[k];
                }
            }
        }
    };
    add(x.phi_rows(chi));
    if let Some(y) = conj {
        let cc: Vec<C64> = chi.iter().map(|z| z.conj()).collect();
        add(y.phi_rows(&cc));
    }
    eig_hermitian(&h).expect("Hermitian by construction").vector(0)
}

/// Minimises over unit `χ` with `φ` fixed. The conjugated block makes this
/// a real quadratic form in `(Re χ, Im χ)`.
fn als_chi(x: &Constraints, conj: Option<&Constraints>, phi: &[C64]) -> Vec<C64> {
    let db = x.dim_b;
    let mut q = CMatrix::zeros(2 * db, 2 * db);
    let mut add_row = |u: &[f64]| {
        for i in 0..2 * db {
            for k in 0..2 * db {
                q[(i, k)] += C64::new(u[i] * u[k], 0.0);
            }
        }
    };
    let mut u = vec![0.0; 2 * db];
    let rx = x.row_matrix(phi);
    for j in 0..rx.rows() {
        // b·χ with χ = a + ib: Re = b_r·a − b_i·b, Im = b_i·a + b_r·b
        let b = rx.row(j);
        for n in 0..db {
            u[n] = b[n].re;
            u[db + n] = -b[n].im;
        }
        add_row(&u);
        for n in 0..db {
            u[n] = b[n].im;
            u[db + n] = b[n].re;
        }
        add_row(&u);
    }
    if let Some(y) = conj {
        let ry = y.row_matrix(phi);
        for j in 0..ry.rows() {
            // c·χ* : Re = c_r·a + c_i·b, Im = c_i·a − c_r·b
            let c = ry.row(j);
            for n in 0..db {
                u[n] = c[n].re;
                u[db + n] = c[n].im;
            }
            add_row(&u);
            for n in 0..db {
                u[n] = c[n].im;
                u[db + n] = -c[n].re;
            }
            add_row(&u);
        }
    }
    let v = eig_hermitian(&q).expect("real symmetric").vector(0);
    let chi: Vec<C64> = (0..db).map(|n| C64::new(v[n].re, v[db + n].re)).collect();
    normalized(&chi).unwrap_or(chi)
}

/// Real residual vector `[Re r; Im r]` and its Jacobian with respect to
/// `(Re φ, Im φ, Re χ, Im χ)`. The residual is linear in each factor, so
/// every Jacobian column is a residual evaluated at a unit direction.
fn residual_and_jacobian(
    x: &Constraints,
    conj: Option<&Constraints>,
    phi: &[C64],
    chi: &[C64],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (da, db) = (x.dim_a, x.dim_b);
    let stack = |p: &[C64], c: &[C64]| -> Vec<C64> {
        let mut r = x.residual(p, c);
        if let Some(y) = conj {
            let cc: Vec<C64> = c.iter().map(|z| z.conj()).collect();
            r.extend(y.residual(p, &cc));
        }
        r
    };
    let realify = |r: Vec<C64>| -> Vec<f64> { r.iter().map(|z| z.re).chain(r.iter().map(|z| z.im)).collect() };

    let r = realify(stack(phi, chi));
    let mut cols = Vec::with_capacity(2 * (da + db));
    let unit = |n: usize, k: usize, z: C64| {
        let mut e = vec![ZERO; n];
        e[k] = z;
        e
    };
    for part in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        for m in 0..da {
            cols.push(realify(stack(&unit(da, m, part), chi)));
        }
    }
    // χ-derivatives: the X block is linear in χ, the Y block antilinear.
    let x_only = |c: &[C64]| x.residual(phi, c);
    let y_only = |c: &[C64]| conj.map(|y| y.residual(phi, c)).unwrap_or_default();
    for part in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        for n in 0..db {
            let mut col = x_only(&unit(db, n, part));
            col.extend(y_only(&unit(db, n, part.conj())));
            cols.push(realify(col));
        }
    }
    (r, cols)
}

fn levenberg_marquardt(
    x: &Constraints,
    conj: Option<&Constraints>,
    mut phi: Vec<C64>,
    mut chi: Vec<C64>,
    mut cost: f64,
) -> (Vec<C64>, Vec<C64>, f64) {
    let (da, db) = (x.dim_a, x.dim_b);
    let nv = 2 * (da + db);
    let mut lambda = 1e-3;
    for _ in 0..LM_ITERS {
        if cost <= CONVERGED {
            break;
        }
        let (r, cols) = residual_and_jacobian(x, conj, &phi, &chi);
        let mut jtj = vec![vec![0.0; nv]; nv];
        let mut jtr = vec![0.0; nv];
        for i in 0..nv {
            jtr[i] = cols[i].iter().zip(&r).map(|(a, b)| a * b).sum();
            for k in i..nv {
                let v: f64 = cols[i].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                jtj[i][k] = v;
                jtj[k][i] = v;
            }
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * (1.0 + jtj[i][i]);
            }
            let Some(step) = cholesky_solve(a, jtr.iter().map(|v| -v).collect()) else {
                lambda *= 10.0;
                continue;
            };
            let mut p: Vec<C64> = (0..da).map(|m| phi[m] + C64::new(step[m], step[da + m])).collect();
            let mut c: Vec<C64> = (0..db).map(|n| chi[n] + C64::new(step[2 * da + n], step[2 * da + db + n])).collect();
            if let (Some(pn), Some(cn)) = (normalized(&p), normalized(&c)) {
                p = pn;
                c = cn;
                let trial = total_cost(x, conj, &p, &c);
                if trial < cost {
                    // stalled well away from a solution: a local minimum
                    if cost - trial < 1e-9 * cost && trial > 1e-12 {
                        return (p, c, trial);
                    }
                    phi = p;
                    chi = c;
                    cost = trial;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (phi, chi, cost)
}

/// Solves `A x = b` for symmetric positive definite `A`.
fn cholesky_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in (j + 1)..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i][k] * b[k];
        }
        b[i] = s / a[i][i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k][i] * b[k];
        }
        b[i] = s / a[i][i];
    }
    Some(b)
}

/// `‖K†v‖ / ‖v‖` for an arbitrary composite vector.
pub fn kernel_residual(kernel: &SubspaceBasis, v: &[C64]) -> f64 {
    let r: f64 = kernel.vectors().iter().map(|k| crate::matkit::dot(k, v).norm_sqr()).sum();
    r.sqrt() / norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::{kron_vec, orthonormalize, rng::SeededRng};

    #[test]
    fn cholesky_small_system() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = cholesky_solve(a, vec![2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recovers_isolated_admissible_vectors() {
        // span of three random product vectors and of their partial conjugates
        let mut rng = SeededRng::new(9);
        let pairs: Vec<_> = (0..3).map(|_| rng.product_pair(3, 3)).collect();
        let span_x = orthonormalize(&pairs.iter().map(|(p, c)| kron_vec(p, c)).collect::<Vec<_>>(), 1e-10);
        let span_y = orthonormalize(
            &pairs.iter().map(|(p, c)| kron_vec(p, &crate::matkit::conj_vec(c))).collect::<Vec<_>>(),
            1e-10,
        );
        let kx = Constraints::from_kernel(&span_x.complement(), 3, 3);
        let ky = Constraints::from_kernel(&span_y.complement(), 3, 3);
        let mut hits = 0;
        for _ in 0..30 {
            let r = refine(&kx, Some(&ky), &rng.unit_vec(3), &rng.unit_vec(3)).unwrap();
            if r.residual < 1e-12 {
                hits += 1;
                let v = kron_vec(&r.phi, &r.chi);
                assert!(span_x.contains(&v, 1e-10));
                let best = pairs
                    .iter()
                    .map(|(p, c)| crate::matkit::projective_overlap(&v, &kron_vec(p, c)))
                    .fold(0.0, f64::max);
                assert!(best > 1.0 - 1e-10);
            }
        }
        assert!(hits > 10, "only {hits} converged");
    }
}
