//! The range criterion.
//!
//! A product vector `v` is admissible when `v ∈ Ran ρ` and its partial
//! conjugate `v^{*2} ∈ Ran ρ^{T₂}`. For a separable state the admissible
//! vectors span `Ran ρ` and their conjugates span `Ran ρ^{T₂}`. The
//! conditions read the same from either side, so one admissible set (kept
//! in the `ρ` frame) serves both directions.

use serde::Serialize;

use super::refine::{refine, Constraints};
use super::report::{Direction, ProductVectorCounts};
use super::solver::{product_overlap, product_vectors_in_subspace};
use super::{range_of, SamplingBudget, Tolerances};
use crate::error::Result;
use crate::matkit::rng::SeededRng;
use crate::matkit::{conj_vec, dot, fix_phase, normalized, orthonormalize, SubspaceBasis, C64};
use crate::statefab::{BipartiteState, ProductVector};

const SPAN_TOL: f64 = 1e-6;
/// A direction counts as uncovered when its distance to the covered span
/// exceeds this (true gaps sit at distance 1).
const GAP_TOL: f64 = 0.7;
const ORTHOGONAL: f64 = 1e-6;
const DUPLICATE: f64 = 1e-9;
const ADMISSIBLE_STREAM: u64 = 0xA5;

/// Which range a witness lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessRange {
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "rho_T2")]
    RhoT2,
}

/// Result of the range criterion alone.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeOutcome {
    pub violated: bool,
    pub direction: Option<Direction>,
    /// Unit vector in the uncovered part of `witness_range`.
    pub witness: Option<Vec<C64>>,
    pub witness_range: Option<WitnessRange>,
    pub witness_is_product: bool,
    pub rank_rho: usize,
    pub rank_pt: usize,
    /// Dimensions of the uncovered parts of `Ran ρ` and `Ran ρ^{T₂}`.
    pub uncovered_rho: usize,
    pub uncovered_pt: usize,
    pub counts: ProductVectorCounts,
    pub curve_families: usize,
    pub partial: bool,
    pub notes: Vec<String>,
}

struct Search {
    admissible: Vec<ProductVector>,
    in_rho: Vec<ProductVector>,
    in_pt: Vec<ProductVector>,
    range_rho: usize,
    range_pt: usize,
    curve_families: usize,
    partial: bool,
}

struct Gaps {
    rho: SubspaceBasis,
    pt: SubspaceBasis,
}

impl Gaps {
    fn new(ran_rho: &SubspaceBasis, ran_pt: &SubspaceBasis, admissible: &[ProductVector]) -> Self {
        let n = ran_rho.dim_ambient();
        let span = |vs: Vec<Vec<C64>>| if vs.is_empty() { SubspaceBasis::empty(n) } else { orthonormalize(&vs, SPAN_TOL) };
        let covered_rho = span(admissible.iter().map(ProductVector::embed).collect());
        let covered_pt = span(admissible.iter().map(|v| v.partial_conjugate().embed()).collect());
        Self { rho: ran_rho.minus(&covered_rho, GAP_TOL), pt: ran_pt.minus(&covered_pt, GAP_TOL) }
    }

    fn violated(&self) -> bool {
        self.rho.dim() > 0 || self.pt.dim() > 0
    }
}

pub fn range_criterion(s: &BipartiteState, tol: &Tolerances, budget: &SamplingBudget) -> Result<RangeOutcome> {
    let (da, db) = s.dims();
    let ran_rho = range_of(s.rho(), tol.tol_rank);
    let ran_pt = range_of(&s.partial_transpose(), tol.tol_rank);

    let first = admissible_search(&ran_rho, &ran_pt, da, db, budget, tol)?;
    let mut out = RangeOutcome {
        violated: false,
        direction: None,
        witness: None,
        witness_range: None,
        witness_is_product: false,
        rank_rho: ran_rho.dim(),
        rank_pt: ran_pt.dim(),
        uncovered_rho: 0,
        uncovered_pt: 0,
        counts: ProductVectorCounts {
            range_rho: first.range_rho,
            range_pt: first.range_pt,
            admissible: first.admissible.len(),
            admissible_rerun: None,
        },
        curve_families: first.curve_families,
        partial: first.partial,
        notes: Vec::new(),
    };
    if !Gaps::new(&ran_rho, &ran_pt, &first.admissible).violated() {
        return Ok(out);
    }

    // re-certify on an independent, larger sample before committing
    let rerun_budget = budget.doubled();
    let second = admissible_search(&ran_rho, &ran_pt, da, db, &rerun_budget, tol)?;
    out.counts.admissible_rerun = Some(second.admissible.len());
    out.partial |= second.partial;
    let mut merged = first.admissible;
    push_distinct(&mut merged, second.admissible.iter().cloned());
    let gaps = Gaps::new(&ran_rho, &ran_pt, &merged);
    out.uncovered_rho = gaps.rho.dim();
    out.uncovered_pt = gaps.pt.dim();
    if !gaps.violated() {
        out.notes.push("range gap closed by the doubled-budget rerun".into());
        return Ok(out);
    }

    // Witness candidates, strongest first: directions of Ran ρ orthogonal to
    // the conjugates of every product vector in Ran ρ^T2 (and vice versa),
    // then the plain gaps left by the admissible vectors.
    let conj_span = |a: &[ProductVector], b: &[ProductVector]| {
        let vs: Vec<Vec<C64>> = a.iter().chain(b).map(|v| v.partial_conjugate().embed()).collect();
        if vs.is_empty() { SubspaceBasis::empty(ran_rho.dim_ambient()) } else { orthonormalize(&vs, SPAN_TOL) }
    };
    let strong_rho = ran_rho.minus(&conj_span(&first.in_pt, &second.in_pt), GAP_TOL);
    let strong_pt = ran_pt.minus(&conj_span(&first.in_rho, &second.in_rho), GAP_TOL);
    let (side, gap, range) = [
        (WitnessRange::Rho, &strong_rho, &ran_rho),
        (WitnessRange::RhoT2, &strong_pt, &ran_pt),
        (WitnessRange::Rho, &gaps.rho, &ran_rho),
        (WitnessRange::RhoT2, &gaps.pt, &ran_pt),
    ]
    .into_iter()
    .find(|(_, g, _)| g.dim() > 0)
    .expect("a violated criterion leaves a gap");
    let (witness, is_product) = choose_witness(gap, da, db, budget)?;
    let in_range = range.contains(&witness, tol.tol_member);
    let orthogonal = second.admissible.iter().all(|v| {
        let e = match side {
            WitnessRange::Rho => v.embed(),
            WitnessRange::RhoT2 => v.partial_conjugate().embed(),
        };
        dot(&witness, &e).norm() <= ORTHOGONAL * crate::matkit::norm(&e)
    });
    if !(in_range && orthogonal) {
        out.notes.push("witness failed re-certification".into());
        return Ok(out);
    }
    out.violated = true;
    out.direction = Some(Direction::OnRhoT2);
    out.witness = Some(witness);
    out.witness_range = Some(side);
    out.witness_is_product = is_product;
    Ok(out)
}

fn push_distinct(into: &mut Vec<ProductVector>, from: impl IntoIterator<Item = ProductVector>) {
    for v in from {
        if !into.iter().any(|w| product_overlap(&v, w) > 1.0 - DUPLICATE) {
            into.push(v);
        }
    }
}

/// Collects product vectors `v ∈ Ran ρ` with `v^{*2} ∈ Ran ρ^{T₂}`.
fn admissible_search(
    ran_rho: &SubspaceBasis,
    ran_pt: &SubspaceBasis,
    da: usize,
    db: usize,
    budget: &SamplingBudget,
    tol: &Tolerances,
) -> Result<Search> {
    let in_rho = product_vectors_in_subspace(ran_rho, da, db, budget)?;
    let in_pt = product_vectors_in_subspace(ran_pt, da, db, &budget.with_seed(budget.seed.wrapping_add(1)))?;
    let kx = Constraints::from_kernel(&ran_rho.complement(), da, db);
    let ky = Constraints::from_kernel(&ran_pt.complement(), da, db);

    let mut seeds: Vec<(Vec<C64>, Vec<C64>)> = in_rho.samples.iter().map(|v| (v.phi.clone(), v.chi.clone())).collect();
    seeds.extend(in_pt.samples.iter().map(|v| (v.phi.clone(), conj_vec(&v.chi))));
    let mut rng = SeededRng::derived(budget.seed, ADMISSIBLE_STREAM);
    seeds.extend((0..budget.admissible_starts).map(|_| rng.product_pair(da, db)));

    let mut admissible: Vec<ProductVector> = Vec::new();
    for (phi, chi) in seeds {
        let Some(fit) = refine(&kx, Some(&ky), &phi, &chi) else { continue };
        let v = ProductVector { phi: fit.phi, chi: fit.chi };
        if ran_rho.contains(&v.embed(), tol.tol_member) && ran_pt.contains(&v.partial_conjugate().embed(), tol.tol_member)
        {
            push_distinct(&mut admissible, [v]);
        }
    }
    Ok(Search {
        admissible,
        range_rho: in_rho.samples.len(),
        range_pt: in_pt.samples.len(),
        curve_families: in_rho.curve_families() + in_pt.curve_families(),
        partial: in_rho.partial || in_pt.partial,
        in_rho: in_rho.samples,
        in_pt: in_pt.samples,
    })
}

/// Picks a unit witness in `gap`, preferring product vectors; among those
/// the one whose largest entry sits at the highest composite index.
fn choose_witness(gap: &SubspaceBasis, da: usize, db: usize, budget: &SamplingBudget) -> Result<(Vec<C64>, bool)> {
    let pick = |mut v: Vec<C64>, product: bool| {
        v = normalized(&v).expect("nonzero witness");
        fix_phase(&mut v);
        (v, product)
    };
    if gap.dim() == 1 {
        let v = gap.vectors()[0].clone();
        let product = super::solver::is_rank_one(&v, da, db, 1e-7);
        return Ok(pick(v, product));
    }
    let found = product_vectors_in_subspace(gap, da, db, budget)?;
    let best = found.embeddings().into_iter().max_by(|a, b| dominant(a).partial_cmp(&dominant(b)).expect("finite"));
    Ok(match best {
        Some(v) => pick(v, true),
        None => pick(gap.vectors()[0].clone(), false),
    })
}

/// `(index of the largest entry, its modulus)`, comparing moduli with a
/// small tolerance so exact ties go to the higher index.
fn dominant(v: &[C64]) -> (usize, f64) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let idx = (0..v.len()).rev().find(|&i| v[i].norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
    (idx, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::{basis_vector, projective_overlap};
    use crate::statefab::{eps_mix, state_family};

    fn run(s: &BipartiteState) -> RangeOutcome {
        range_criterion(s, &Tolerances::default(), &SamplingBudget::default()).unwrap()
    }

    #[test]
    fn rho_a_witness_is_e3_e2() {
        let out = run(&state_family("rho_a", Some(0.5)).unwrap());
        assert!(out.violated);
        assert_eq!(out.direction, Some(Direction::OnRhoT2));
        assert_eq!(out.witness_range, Some(WitnessRange::Rho));
        let target = basis_vector(9, 7);
        assert!(projective_overlap(out.witness.as_ref().unwrap(), &target) > 1.0 - 1e-6);
    }

    #[test]
    fn sigma_b_is_detected() {
        let out = run(&state_family("sigma_b", Some(0.5)).unwrap());
        assert!(out.violated);
        assert_eq!(out.counts.admissible, 0);
    }

    #[test]
    fn full_rank_states_are_inconclusive() {
        assert!(!run(&state_family("werner2x2", Some(0.9)).unwrap()).violated);
        let a = state_family("rho_a", Some(0.5)).unwrap();
        assert!(!run(&eps_mix(&a, 0.05).unwrap()).violated);
    }

    #[test]
    fn dominant_prefers_later_ties() {
        let v = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.5, 0.0)];
        assert_eq!(dominant(&v).0, 1);
    }
}
