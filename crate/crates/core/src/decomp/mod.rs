//! Finite separable decompositions `ρ = Σ w_i P_{φ_i} ⊗ P_{χ_i}`: checking
//! them against a state, and the two exact Fourier families.

mod io;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matkit::{conj_vec, kron, kron_vec, norm, CMatrix, C64, ONE};
use crate::sepcrit::range_of;
use crate::statefab::{partial_transpose_matrix, BipartiteState, ProductVector};

pub use io::{read_decomposition, write_decomposition};

pub const WEIGHT_SUM_TOL: f64 = 1e-12;
pub const FACTOR_NORM_TOL: f64 = 1e-12;
pub const MEMBER_TOL: f64 = 1e-7;
const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub phi: Vec<C64>,
    pub chi: Vec<C64>,
}

impl Term {
    pub fn product_vector(&self) -> ProductVector {
        ProductVector { phi: self.phi.clone(), chi: self.chi.clone() }
    }
}

/// Weighted product projectors. Construction checks shapes only; the
/// convexity, normalisation and term-count conditions are reported by
/// [`SeparableDecomposition::violations`] so that broken inputs can still
/// be examined.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableDecomposition {
    dim_a: usize,
    dim_b: usize,
    terms: Vec<Term>,
}

impl SeparableDecomposition {
    pub fn new(dim_a: usize, dim_b: usize, terms: Vec<Term>) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::DimensionMismatch("factor dimensions must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::Contract("a decomposition needs at least one term".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.phi.len() != dim_a || t.chi.len() != dim_b {
                return Err(Error::DimensionMismatch(format!(
                    "term {i} has factors of length {}x{}, expected {dim_a}x{dim_b}",
                    t.phi.len(),
                    t.chi.len()
                )));
            }
        }
        Ok(Self { dim_a, dim_b, terms })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Upper bound `(dA·dB)²` on the number of terms a decomposition needs.
    pub fn term_bound(&self) -> usize {
        (self.dim_a * self.dim_b).pow(2)
    }

    /// Broken invariants, empty when the decomposition is well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let sum: f64 = self.terms.iter().map(|t| t.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            out.push(format!("weights sum to {sum:.15}"));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.weight > 0.0) {
                out.push(format!("term {i} has non-positive weight {}", t.weight));
            }
            for (name, v) in [("phi", &t.phi), ("chi", &t.chi)] {
                let n = norm(v);
                if (n - 1.0).abs() > FACTOR_NORM_TOL {
                    out.push(format!("term {i}: |{name}| = {n:.15}"));
                }
            }
        }
        if self.len() > self.term_bound() {
            out.push(format!("{} terms exceed the bound {}", self.len(), self.term_bound()));
        }
        out
    }

    /// `Σ w_i P_{φ_i} ⊗ P_{χ_i}`.
    pub fn operator(&self) -> CMatrix {
        self.sum_with(|t| t.chi.clone())
    }

    /// `Σ w_i P_{φ_i} ⊗ P_{χ_i*}`, which equals the partial transpose of
    /// [`Self::operator`].
    pub fn conjugated_operator(&self) -> CMatrix {
        self.sum_with(|t| conj_vec(&t.chi))
    }

    fn sum_with(&self, chi: impl Fn(&Term) -> Vec<C64>) -> CMatrix {
        let n = self.dim_a * self.dim_b;
        let mut acc = CMatrix::zeros(n, n);
        for t in &self.terms {
            let p = kron(&CMatrix::projector(&t.phi), &CMatrix::projector(&chi(t)));
            acc = &acc + &p.scale(t.weight);
        }
        acc
    }

    pub fn product_vectors(&self) -> Vec<Vec<C64>> {
        self.terms.iter().map(|t| kron_vec(&t.phi, &t.chi)).collect()
    }

    pub fn partial_conjugates(&self) -> Vec<Vec<C64>> {
        self.terms.iter().map(|t| kron_vec(&t.phi, &conj_vec(&t.chi))).collect()
    }
}

/// Outcome of [`verify_decomposition`].
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub verified: bool,
    /// `max |Σ w P⊗P − ρ|` over entries.
    pub deviation: f64,
    pub violations: Vec<String>,
}

/// Checks `ρ = Σ w_i P_{φ_i} ⊗ P_{χ_i}` entrywise within `tol`, together
/// with the decomposition's own invariants.
pub fn verify_decomposition(s: &BipartiteState, d: &SeparableDecomposition, tol: f64) -> Result<Verification> {
    if s.dims() != d.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, decomposition is {}x{}",
            s.dim_a(),
            s.dim_b(),
            d.dim_a,
            d.dim_b
        )));
    }
    let deviation = d.operator().max_abs_diff(s.rho());
    let violations = d.violations();
    Ok(Verification { verified: deviation <= tol && violations.is_empty(), deviation, violations })
}

/// The two states with closed-form separable integral representations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierFamily {
    RhoSymmetric,
    SigmaSymmetric,
}

impl FourierFamily {
    pub fn name(self) -> &'static str {
        match self {
            FourierFamily::RhoSymmetric => "rho_symmetric",
            FourierFamily::SigmaSymmetric => "sigma_symmetric",
        }
    }

    /// Smallest point count for which the uniform sum equals the integral:
    /// one more than the largest frequency in the integrand.
    pub fn min_points(self) -> usize {
        match self {
            FourierFamily::RhoSymmetric => 7,
            FourierFamily::SigmaSymmetric => 5,
        }
    }

    pub fn dims(self) -> (usize, usize) {
        match self {
            FourierFamily::RhoSymmetric => (3, 3),
            FourierFamily::SigmaSymmetric => (2, 4),
        }
    }

    /// The pair `(φ, χ)` at angle `t`.
    pub fn factors(self, t: f64) -> (Vec<C64>, Vec<C64>) {
        let e = |k: f64| C64::from_polar(1.0, k * t);
        match self {
            FourierFamily::RhoSymmetric => {
                let phi: Vec<C64> = [ONE, e(1.0), e(-2.0)].iter().map(|z| z / 3f64.sqrt()).collect();
                let chi = conj_vec(&phi);
                (phi, chi)
            }
            FourierFamily::SigmaSymmetric => {
                let phi = [ONE, e(1.0)].iter().map(|z| z / 2f64.sqrt()).collect();
                let chi = [ONE, e(-1.0), e(-2.0), e(-3.0)].iter().map(|z| z / 2.0).collect();
                (phi, chi)
            }
        }
    }
}

impl fmt::Display for FourierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FourierFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho_symmetric" => Ok(FourierFamily::RhoSymmetric),
            "sigma_symmetric" => Ok(FourierFamily::SigmaSymmetric),
            other => Err(Error::UnknownFamily(format!("{other} (expected rho_symmetric or sigma_symmetric)"))),
        }
    }
}

/// Uniform `n_points` sample of the family's angle, weights `1/n_points`.
pub fn fourier_decomposition(which: FourierFamily, n_points: usize) -> Result<SeparableDecomposition> {
    if n_points < which.min_points() {
        return Err(Error::Precondition(format!(
            "{which} needs at least {} points for the sum to be exact, got {n_points}",
            which.min_points()
        )));
    }
    let (da, db) = which.dims();
    let w = 1.0 / n_points as f64;
    let terms = (0..n_points)
        .map(|k| {
            let (phi, chi) = which.factors(2.0 * PI * k as f64 / n_points as f64);
            Term { weight: w, phi, chi }
        })
        .collect();
    SeparableDecomposition::new(da, db, terms)
}

/// Membership of each vector in `Ran ρ` (relative residual ≤ 1e-7).
pub fn ensemble_in_range(s: &BipartiteState, vectors: &[Vec<C64>]) -> Vec<bool> {
    let r = range_of(s.rho(), RANK_TOL);
    vectors.iter().map(|v| r.contains(v, MEMBER_TOL)).collect()
}

/// Membership of each vector in `Ran ρ^{T₂}`.
pub fn ensemble_in_pt_range(s: &BipartiteState, vectors: &[Vec<C64>]) -> Vec<bool> {
    let r = range_of(&s.partial_transpose(), RANK_TOL);
    vectors.iter().map(|v| r.contains(v, MEMBER_TOL)).collect()
}

/// `max |Σ w P_φ ⊗ P_{χ*} − ρ^{T₂}|`.
pub fn conjugated_deviation(s: &BipartiteState, d: &SeparableDecomposition) -> f64 {
    let (da, db) = s.dims();
    d.conjugated_operator().max_abs_diff(&partial_transpose_matrix(s.rho(), da, db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::eig_hermitian;
    use crate::statefab::state_family;

    fn target(which: FourierFamily) -> BipartiteState {
        state_family(which.name(), None).unwrap()
    }

    #[test]
    fn thresholds_are_exact() {
        for (which, n) in [(FourierFamily::RhoSymmetric, 7), (FourierFamily::SigmaSymmetric, 9)] {
            let d = fourier_decomposition(which, n).unwrap();
            let v = verify_decomposition(&target(which), &d, 1e-12).unwrap();
            assert!(v.verified, "{which}: {v:?}");
            assert!(d.len() <= d.term_bound());
        }
    }

    #[test]
    fn below_threshold_is_refused() {
        assert!(matches!(fourier_decomposition(FourierFamily::RhoSymmetric, 3), Err(Error::Precondition(_))));
        assert!(matches!(fourier_decomposition(FourierFamily::SigmaSymmetric, 4), Err(Error::Precondition(_))));
    }

    #[test]
    fn aliasing_breaks_just_below_threshold() {
        // build the 6- and 4-point sums by hand: they do not reproduce the states
        for (which, n) in [(FourierFamily::RhoSymmetric, 6), (FourierFamily::SigmaSymmetric, 4)] {
            let (da, db) = which.dims();
            let terms = (0..n)
                .map(|k| {
                    let (phi, chi) = which.factors(2.0 * PI * k as f64 / n as f64);
                    Term { weight: 1.0 / n as f64, phi, chi }
                })
                .collect();
            let d = SeparableDecomposition::new(da, db, terms).unwrap();
            assert!(d.operator().max_abs_diff(target(which).rho()) > 1e-3, "{which} at {n}");
        }
    }

    #[test]
    fn unconjugated_rho_average_misses_coherences() {
        let terms = (0..7)
            .map(|k| {
                let (phi, _) = FourierFamily::RhoSymmetric.factors(2.0 * PI * k as f64 / 7.0);
                Term { weight: 1.0 / 7.0, phi: phi.clone(), chi: phi }
            })
            .collect();
        let d = SeparableDecomposition::new(3, 3, terms).unwrap();
        assert!(d.operator().max_abs_diff(target(FourierFamily::RhoSymmetric).rho()) > 0.1);
    }

    #[test]
    fn perturbed_weight_fails() {
        let mut d = fourier_decomposition(FourierFamily::RhoSymmetric, 7).unwrap();
        d.terms[0].weight += 1e-3;
        let v = verify_decomposition(&target(FourierFamily::RhoSymmetric), &d, 1e-10).unwrap();
        assert!(!v.verified);
        assert!(v.deviation > 1e-5);
        assert!(!v.violations.is_empty());
    }

    #[test]
    fn dimension_mismatch() {
        let d = fourier_decomposition(FourierFamily::SigmaSymmetric, 5).unwrap();
        let e = verify_decomposition(&target(FourierFamily::RhoSymmetric), &d, 1e-10).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch(_)));
    }

    #[test]
    fn monotone_in_points() {
        for which in [FourierFamily::RhoSymmetric, FourierFamily::SigmaSymmetric] {
            let s = target(which);
            for n in which.min_points()..=50 {
                let d = fourier_decomposition(which, n).unwrap();
                assert!(verify_decomposition(&s, &d, 1e-12).unwrap().verified, "{which} n={n}");
            }
        }
    }

    #[test]
    fn lemma_one_on_fourier_ensembles() {
        for which in [FourierFamily::RhoSymmetric, FourierFamily::SigmaSymmetric] {
            let s = target(which);
            let d = fourier_decomposition(which, 11).unwrap();
            assert!(ensemble_in_range(&s, &d.product_vectors()).iter().all(|&b| b));
            assert!(ensemble_in_pt_range(&s, &d.partial_conjugates()).iter().all(|&b| b));
            assert!(conjugated_deviation(&s, &d) < 1e-10);
        }
    }

    #[test]
    fn eigen_ensemble_and_kernel_vectors() {
        let s = state_family("rho_a", Some(0.5)).unwrap();
        let e = eig_hermitian(s.rho()).unwrap();
        let eigvecs: Vec<_> = (0..9).filter(|&k| e.values[k] > 1e-8).map(|k| e.vector(k)).collect();
        assert!(ensemble_in_range(&s, &eigvecs).iter().all(|&b| b));
        let mut k = vec![C64::new(0.0, 0.0); 9];
        k[0] = ONE;
        k[4] = -ONE;
        assert_eq!(ensemble_in_range(&s, &[k]), vec![false]);
    }
}
