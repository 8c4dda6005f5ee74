//! Product vectors `φ⊗χ` inside a subspace `V`.
//!
//! Each kernel vector `k_j` of `V` gives one bilinear equation
//! `row_j(φ)·χ = 0`. For a fixed `φ` the admissible `χ` form the nullspace of
//! the stacked `κ × dB` matrix `R(φ)`, which is nontrivial exactly when all
//! `dB × dB` minors of `R(φ)` vanish. `φ` is scanned chart by chart; inside a
//! chart every free coordinate but the last is pinned to a sampled value, so
//! the minors become univariate polynomials whose common roots are solved
//! for directly.

use itertools::Itertools;
use serde::Serialize;

use super::refine::{refine, Constraints};
use super::SamplingBudget;
use crate::error::{Error, Result};
use crate::matkit::rng::SeededRng;
use crate::matkit::{
    basis_vector, det, dot, kron_vec, norm, nullspace, poly_roots, svd_jacobi, CMatrix, Polynomial, SubspaceBasis,
    C64, ONE, ZERO,
};
use crate::statefab::ProductVector;

const ZERO_MINOR: f64 = 1e-10;
const COMMON_ROOT: f64 = 1e-7;
const ROOT_CLUSTER: f64 = 1e-5;
const CHI_NULL: f64 = 1e-6;
const MEMBER: f64 = 1e-7;
const RANK_ONE: f64 = 1e-7;
const DUPLICATE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    /// Fewer constraints than `dB`: every `φ` in the chart has a partner.
    Underdetermined,
    /// The chart has no free parameter; `φ` is a basis vector.
    Point,
    /// Finitely many parameter values solve the minor system.
    Isolated,
    /// All minors vanish identically: a one-parameter family.
    CurveFamily,
}

/// How one pinned slice of a chart was solved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartRecord {
    /// Index of the leading `φ` coordinate (fixed to 1; earlier ones are 0).
    pub chart: usize,
    /// Values pinned for the free coordinates before the last one.
    pub fixed: Vec<C64>,
    pub kind: ChartKind,
    /// Roots found or parameter values sampled for the last coordinate.
    pub params: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductVectorSet {
    pub dim_a: usize,
    pub dim_b: usize,
    pub samples: Vec<ProductVector>,
    pub chart_log: Vec<ChartRecord>,
    /// `V` is the whole space, so every product vector lies in it.
    pub unconstrained: bool,
    /// The sample cap was reached before all charts were scanned.
    pub partial: bool,
}

impl ProductVectorSet {
    pub fn embeddings(&self) -> Vec<Vec<C64>> {
        self.samples.iter().map(ProductVector::embed).collect()
    }

    pub fn curve_families(&self) -> usize {
        self.chart_log.iter().filter(|r| r.kind == ChartKind::CurveFamily).count()
    }
}

/// Singular values of the `dA × dB` matricization of `v`, descending.
pub fn matricization_singular_values(v: &[C64], dim_a: usize, dim_b: usize) -> Vec<f64> {
    let m = if dim_a >= dim_b {
        CMatrix::from_fn(dim_a, dim_b, |i, j| v[i * dim_b + j])
    } else {
        CMatrix::from_fn(dim_b, dim_a, |j, i| v[i * dim_b + j])
    };
    svd_jacobi(&m).values
}

/// True when `v` is numerically a product vector.
pub fn is_rank_one(v: &[C64], dim_a: usize, dim_b: usize, tol: f64) -> bool {
    let s = matricization_singular_values(v, dim_a, dim_b);
    s.len() < 2 || s[1] <= tol * s[0]
}

pub fn product_vectors_in_subspace(
    v: &SubspaceBasis,
    dim_a: usize,
    dim_b: usize,
    budget: &SamplingBudget,
) -> Result<ProductVectorSet> {
    if dim_a * dim_b != v.dim_ambient() {
        return Err(Error::DimensionMismatch(format!(
            "subspace of C^{} does not split as {dim_a}x{dim_b}",
            v.dim_ambient()
        )));
    }
    if dim_a.min(dim_b) > 3 {
        return Err(Error::Unsupported(format!(
            "product-vector search needs a factor of dimension at most 3, got {dim_a}x{dim_b}"
        )));
    }
    if dim_a <= 3 {
        return Ok(Solver::new(v, dim_a, dim_b, budget).run());
    }
    let swapped: Vec<Vec<C64>> = v.vectors().iter().map(|x| swap_factors(x, dim_a, dim_b)).collect();
    let w = SubspaceBasis::from_orthonormal(v.dim_ambient(), swapped)?;
    let mut out = Solver::new(&w, dim_b, dim_a, budget).run();
    for s in &mut out.samples {
        std::mem::swap(&mut s.phi, &mut s.chi);
    }
    out.dim_a = dim_a;
    out.dim_b = dim_b;
    Ok(out)
}

/// Reorders a composite vector from `(m, μ)` to `(μ, m)`.
fn swap_factors(x: &[C64], dim_a: usize, dim_b: usize) -> Vec<C64> {
    let mut y = vec![ZERO; x.len()];
    for m in 0..dim_a {
        for mu in 0..dim_b {
            y[mu * dim_a + m] = x[m * dim_b + mu];
        }
    }
    y
}

enum Univariate {
    Curve,
    Roots(Vec<C64>),
}

struct Solver<'a> {
    space: &'a SubspaceBasis,
    da: usize,
    db: usize,
    budget: SamplingBudget,
    constraints: Constraints,
    out: ProductVectorSet,
}

impl<'a> Solver<'a> {
    fn new(space: &'a SubspaceBasis, da: usize, db: usize, budget: &SamplingBudget) -> Self {
        let kernel = space.complement();
        Self {
            space,
            da,
            db,
            budget: *budget,
            constraints: Constraints::from_kernel(&kernel, da, db),
            out: ProductVectorSet {
                dim_a: da,
                dim_b: db,
                samples: Vec::new(),
                chart_log: Vec::new(),
                unconstrained: kernel.dim() == 0,
                partial: false,
            },
        }
    }

    fn run(mut self) -> ProductVectorSet {
        if self.out.unconstrained {
            for m in 0..self.da {
                for n in 0..self.db {
                    self.out.samples.push(ProductVector {
                        phi: basis_vector(self.da, m),
                        chi: basis_vector(self.db, n),
                    });
                }
            }
            return self.out;
        }
        if self.space.dim() == 0 {
            return self.out;
        }
        for chart in 0..self.da {
            let mut rng = SeededRng::derived(self.budget.seed, chart as u64 + 1);
            if self.constraints.count() < self.db {
                self.scan_underdetermined(chart, &mut rng);
            } else {
                self.scan_chart(chart, &mut rng);
            }
            if self.out.partial {
                break;
            }
        }
        self.out
    }

    fn chart_phi(&self, chart: usize, free: &[C64]) -> Vec<C64> {
        let mut phi = vec![ZERO; self.da];
        phi[chart] = ONE;
        phi[chart + 1..].copy_from_slice(free);
        phi
    }

    fn pinned_values(&self, rng: &mut SeededRng) -> Vec<C64> {
        let mut vals = vec![ZERO, ONE];
        vals.extend((0..self.budget.samples_per_param).map(|_| rng.complex()));
        vals
    }

    fn scan_underdetermined(&mut self, chart: usize, rng: &mut SeededRng) {
        let free = self.da - 1 - chart;
        let mut points: Vec<Vec<C64>> =
            (0..free).map(|_| [ZERO, ONE]).multi_cartesian_product().collect();
        if free == 0 {
            points = vec![Vec::new()];
        } else {
            points.extend((0..self.budget.samples_per_param).map(|_| rng.complex_vec(free)));
        }
        for p in &points {
            let phi = self.chart_phi(chart, p);
            self.emit(&phi, rng);
        }
        self.out.chart_log.push(ChartRecord {
            chart,
            fixed: Vec::new(),
            kind: ChartKind::Underdetermined,
            params: points.into_iter().flatten().collect(),
        });
    }

    fn scan_chart(&mut self, chart: usize, rng: &mut SeededRng) {
        let free = self.da - 1 - chart;
        if free == 0 {
            let phi = self.chart_phi(chart, &[]);
            let found = self.emit(&phi, rng);
            self.out.chart_log.push(ChartRecord {
                chart,
                fixed: Vec::new(),
                kind: ChartKind::Point,
                params: if found { vec![ONE] } else { Vec::new() },
            });
            return;
        }
        let pinned: Vec<Vec<C64>> = if free == 1 {
            vec![Vec::new()]
        } else {
            let vals = self.pinned_values(rng);
            (0..free - 1).map(|_| vals.iter().copied()).multi_cartesian_product().collect()
        };
        let last = self.constraints.row_matrix(&basis_vector(self.da, self.da - 1));
        for fixed in pinned {
            let mut free_vals = fixed.clone();
            free_vals.push(ZERO);
            let base_phi = self.chart_phi(chart, &free_vals);
            let base = self.constraints.row_matrix(&base_phi);
            let da = self.da;
            let at = |t: C64| {
                let mut phi = base_phi.clone();
                phi[da - 1] = t;
                phi
            };
            let (kind, params) = match univariate(&base, &last, self.db) {
                Univariate::Curve => {
                    let n = 2 * self.da * self.db + 1;
                    let mut ts = vec![ZERO, ONE];
                    ts.extend((2..n).map(|_| rng.complex()));
                    (ChartKind::CurveFamily, ts)
                }
                Univariate::Roots(r) => (ChartKind::Isolated, r),
            };
            for &t in &params {
                self.emit(&at(t), rng);
            }
            self.out.chart_log.push(ChartRecord { chart, fixed, kind, params });
            if self.out.partial {
                return;
            }
        }
    }

    /// Emits product vectors `φ⊗χ` for `χ` near the nullspace of `R(φ)`.
    fn emit(&mut self, phi: &[C64], rng: &mut SeededRng) -> bool {
        let r = self.constraints.row_matrix(phi);
        let mut chis: Vec<Vec<C64>> = if r.rows() == 0 {
            SubspaceBasis::full(self.db).vectors().to_vec()
        } else {
            let ns = nullspace(&r, CHI_NULL);
            if ns.dim() > 0 {
                ns.vectors().to_vec()
            } else {
                // a root may be a little off; let refinement decide
                let s = svd_jacobi(&r);
                vec![s.right.col(self.db - 1)]
            }
        };
        if chis.len() > 1 {
            let basis = chis.clone();
            for _ in 0..2 {
                let c = rng.complex_vec(basis.len());
                let mix = (0..self.db).map(|n| basis.iter().zip(&c).map(|(b, w)| b[n] * w).sum()).collect();
                chis.push(mix);
            }
        }
        let mut any = false;
        for chi in chis {
            if self.try_push(phi, &chi) {
                any = true;
            }
            if self.out.partial {
                break;
            }
        }
        any
    }

    fn try_push(&mut self, phi: &[C64], chi: &[C64]) -> bool {
        let Some(fit) = refine(&self.constraints, None, phi, chi) else {
            return false;
        };
        let v = kron_vec(&fit.phi, &fit.chi);
        if !self.space.contains(&v, MEMBER) || !is_rank_one(&v, self.da, self.db, RANK_ONE) {
            return false;
        }
        let pv = ProductVector { phi: fit.phi, chi: fit.chi };
        if self.out.samples.iter().any(|s| product_overlap(s, &pv) > 1.0 - DUPLICATE) {
            return true;
        }
        if self.out.samples.len() >= self.budget.max_samples {
            self.out.partial = true;
            return false;
        }
        self.out.samples.push(pv);
        true
    }
}

/// `|⟨v, w⟩| / (‖v‖‖w‖)` for product vectors, computed factorwise.
pub(crate) fn product_overlap(v: &ProductVector, w: &ProductVector) -> f64 {
    let a = dot(&v.phi, &w.phi).norm() / (norm(&v.phi) * norm(&w.phi));
    let b = dot(&v.chi, &w.chi).norm() / (norm(&v.chi) * norm(&w.chi));
    a * b
}

fn submatrix_det(m0: &CMatrix, m1: &CMatrix, rows: &[usize], t: C64) -> C64 {
    let k = rows.len();
    det(&CMatrix::from_fn(k, k, |i, j| m0[(rows[i], j)] + t * m1[(rows[i], j)]))
}

/// Solves "all `dB × dB` minors of `r0 + t·r1` vanish" for `t`.
fn univariate(r0: &CMatrix, r1: &CMatrix, db: usize) -> Univariate {
    let scale = (r0.frobenius() + r1.frobenius()).powi(db as i32);
    if scale == 0.0 {
        return Univariate::Curve;
    }
    let minors: Vec<Polynomial> = (0..r0.rows())
        .combinations(db)
        .map(|rows| Polynomial::interpolate(db, |t| submatrix_det(r0, r1, &rows, t)))
        .filter(|p| !p.is_negligible(ZERO_MINOR, scale))
        .collect();
    let Some(best) = minors.iter().max_by(|a, b| a.max_coeff().total_cmp(&b.max_coeff())) else {
        return Univariate::Curve;
    };
    let p = best.trimmed_abs(ZERO_MINOR * scale);
    if p.degree().unwrap_or(0) == 0 {
        return Univariate::Roots(Vec::new());
    }
    let roots = poly_roots(&p).unwrap_or_default();
    let common: Vec<C64> = roots
        .into_iter()
        .filter(|&t| {
            let cut = COMMON_ROOT * scale * t.norm().max(1.0).powi(db as i32);
            minors.iter().all(|m| m.eval(t).norm() <= cut)
        })
        .collect();
    Univariate::Roots(cluster(common))
}

/// Averages roots closer than the cluster radius.
fn cluster(roots: Vec<C64>) -> Vec<C64> {
    let mut groups: Vec<(C64, usize)> = Vec::new();
    for r in roots {
        match groups.iter_mut().find(|(c, n)| (*c / *n as f64 - r).norm() <= ROOT_CLUSTER * r.norm().max(1.0)) {
            Some((c, n)) => {
                *c += r;
                *n += 1;
            }
            None => groups.push((r, 1)),
        }
    }
    groups.into_iter().map(|(c, n)| c / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::{orthonormalize, real_vec};
    use crate::sepcrit::{range_of, Tolerances};
    use crate::statefab::state_family;

    fn budget() -> SamplingBudget {
        SamplingBudget::default()
    }

    #[test]
    fn full_space_is_unconstrained() {
        let out = product_vectors_in_subspace(&SubspaceBasis::full(4), 2, 2, &budget()).unwrap();
        assert!(out.unconstrained);
        assert_eq!(out.samples.len(), 4);
    }

    #[test]
    fn entangled_line_has_no_product_vectors() {
        let s = 0.5f64.sqrt();
        let v = orthonormalize(&[real_vec(&[s, 0.0, 0.0, s])], 1e-12);
        let out = product_vectors_in_subspace(&v, 2, 2, &budget()).unwrap();
        assert!(!out.unconstrained);
        assert!(out.samples.is_empty());
    }

    #[test]
    fn large_factors_are_unsupported() {
        let v = SubspaceBasis::empty(16);
        assert!(matches!(product_vectors_in_subspace(&v, 4, 4, &budget()), Err(Error::Unsupported(_))));
        assert!(matches!(product_vectors_in_subspace(&v, 2, 3, &budget()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn samples_are_certified_and_distinct() {
        let s = state_family("rho_a", Some(0.5)).unwrap();
        let v = range_of(&s.partial_transpose(), Tolerances::default().tol_rank);
        let out = product_vectors_in_subspace(&v, 3, 3, &budget()).unwrap();
        assert!(!out.samples.is_empty());
        assert!(out.curve_families() > 0);
        for (i, p) in out.samples.iter().enumerate() {
            let e = p.embed();
            assert!(v.residual(&e) <= 1e-7 * norm(&e));
            let sv = matricization_singular_values(&e, 3, 3);
            assert!(sv[1] <= 1e-7 * sv[0]);
            for q in &out.samples[..i] {
                assert!(product_overlap(p, q) <= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn swapped_factors_match_direct_solution() {
        // 4x2 is solved through its 2x4 transpose
        let mut rng = SeededRng::new(5);
        let pairs: Vec<_> = (0..3).map(|_| rng.product_pair(4, 2)).collect();
        let v = orthonormalize(&pairs.iter().map(|(a, b)| kron_vec(a, b)).collect::<Vec<_>>(), 1e-10);
        let out = product_vectors_in_subspace(&v, 4, 2, &budget()).unwrap();
        assert_eq!((out.dim_a, out.dim_b), (4, 2));
        for (a, b) in &pairs {
            let target = ProductVector { phi: a.clone(), chi: b.clone() };
            assert!(out.samples.iter().any(|s| product_overlap(s, &target) > 1.0 - 1e-8));
        }
        for s in &out.samples {
            assert!(v.contains(&s.embed(), 1e-7));
        }
    }

    #[test]
    fn cluster_merges_close_roots() {
        let r = cluster(vec![C64::new(1.0, 0.0), C64::new(1.0 + 1e-7, 0.0), C64::new(2.0, 0.0)]);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn rank_one_certificate() {
        let v = kron_vec(&real_vec(&[1.0, 2.0]), &real_vec(&[3.0, 0.0, 1.0]));
        assert!(is_rank_one(&v, 2, 3, 1e-12));
        assert!(!is_rank_one(&real_vec(&[1.0, 0.0, 0.0, 1.0]), 2, 2, 1e-7));
    }
}
