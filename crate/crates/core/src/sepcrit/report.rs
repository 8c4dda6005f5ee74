use std::fmt;

use serde::Serialize;

use super::range::{range_criterion, WitnessRange};
use super::{ppt_check, range_of, SamplingBudget, Tolerances};
use crate::error::Result;
use crate::matkit::C64;
use crate::statefab::BipartiteState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "NPT_INSEPARABLE")]
    NptInseparable,
    #[serde(rename = "RANGE_INSEPARABLE")]
    RangeInseparable,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NptInseparable => "NPT_INSEPARABLE",
            Verdict::RangeInseparable => "RANGE_INSEPARABLE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn is_inseparable(self) -> bool {
        self != Verdict::Inconclusive
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Side of the range criterion that failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "on_rho")]
    OnRho,
    #[serde(rename = "on_rho_T2")]
    OnRhoT2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProductVectorCounts {
    pub range_rho: usize,
    pub range_pt: usize,
    pub admissible: usize,
    pub admissible_rerun: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub tolerances: Tolerances,
    pub budget: SamplingBudget,
    pub range_checked: bool,
    pub uncovered_rho: usize,
    pub uncovered_pt: usize,
    pub curve_families: usize,
    pub partial_sampling: bool,
    pub witness_is_product: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparabilityReport {
    pub label: Option<String>,
    pub dims: [usize; 2],
    pub verdict: Verdict,
    pub min_eig_pt: f64,
    pub rank_rho: usize,
    pub rank_pt: usize,
    pub witness: Option<Vec<C64>>,
    pub witness_range: Option<WitnessRange>,
    pub certificate_direction: Option<Direction>,
    pub product_vector_counts: Option<ProductVectorCounts>,
    pub diagnostics: Diagnostics,
}

/// Partial-transpose test first; the range criterion only for PPT states.
pub fn analyze(s: &BipartiteState, tol: &Tolerances, budget: &SamplingBudget) -> Result<SeparabilityReport> {
    let ppt = ppt_check(s, tol.tol_eig);
    let mut report = SeparabilityReport {
        label: s.label().map(str::to_owned),
        dims: [s.dim_a(), s.dim_b()],
        verdict: Verdict::Inconclusive,
        min_eig_pt: ppt.min_eig,
        rank_rho: range_of(s.rho(), tol.tol_rank).dim(),
        rank_pt: range_of(&s.partial_transpose(), tol.tol_rank).dim(),
        witness: None,
        witness_range: None,
        certificate_direction: None,
        product_vector_counts: None,
        diagnostics: Diagnostics {
            tolerances: *tol,
            budget: *budget,
            range_checked: false,
            uncovered_rho: 0,
            uncovered_pt: 0,
            curve_families: 0,
            partial_sampling: false,
            witness_is_product: false,
            notes: Vec::new(),
        },
    };
    if !ppt.is_ppt {
        report.verdict = Verdict::NptInseparable;
        report.witness = Some(ppt.eigvec);
        report.witness_range = Some(WitnessRange::RhoT2);
        return Ok(report);
    }

    let range = range_criterion(s, tol, budget)?;
    let d = &mut report.diagnostics;
    d.range_checked = true;
    d.uncovered_rho = range.uncovered_rho;
    d.uncovered_pt = range.uncovered_pt;
    d.curve_families = range.curve_families;
    d.partial_sampling = range.partial;
    d.witness_is_product = range.witness_is_product;
    d.notes = range.notes;
    report.product_vector_counts = Some(range.counts);
    if range.violated {
        report.verdict = Verdict::RangeInseparable;
        report.witness = range.witness;
        report.witness_range = range.witness_range;
        report.certificate_direction = range.direction;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statefab::state_family;

    fn verdict(name: &str, p: Option<f64>) -> Verdict {
        let s = state_family(name, p).unwrap();
        analyze(&s, &Tolerances::default(), &SamplingBudget::default()).unwrap().verdict
    }

    #[test]
    fn paper_verdicts() {
        assert_eq!(verdict("rho_insep", None), Verdict::NptInseparable);
        assert_eq!(verdict("rho_a", Some(0.5)), Verdict::RangeInseparable);
        assert_eq!(verdict("rho_a", Some(1.0)), Verdict::Inconclusive);
        assert_eq!(verdict("werner2x2", Some(0.2)), Verdict::Inconclusive);
    }

    #[test]
    fn npt_witness_has_negative_expectation() {
        let s = state_family("werner2x2", Some(0.9)).unwrap();
        let r = analyze(&s, &Tolerances::default(), &SamplingBudget::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NptInseparable);
        let w = r.witness.unwrap();
        assert!(s.partial_transpose().expectation(&w).re < 0.0);
        assert!(!r.diagnostics.range_checked);
    }

    #[test]
    fn verdict_serialises_by_name() {
        assert_eq!(serde_json::to_string(&Verdict::RangeInseparable).unwrap(), "\"RANGE_INSEPARABLE\"");
        assert_eq!(serde_json::to_string(&Direction::OnRhoT2).unwrap(), "\"on_rho_T2\"");
    }
}
