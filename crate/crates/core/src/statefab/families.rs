use std::fmt;
use std::str::FromStr;

use super::BipartiteState;
use crate::error::{Error, Result};
use crate::matkit::{basis_vector, kron_vec, real_vec, CMatrix, C64};

pub const FAMILY_NAMES: &[&str] = &[
    "psi_me3",
    "q_proj",
    "rho_insep",
    "rho_a",
    "sigma_insep",
    "sigma_b",
    "werner2x2",
    "rho_symmetric",
    "sigma_symmetric",
];

/// A named state, with its parameter where it has one.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    PsiMe3,
    QProj,
    RhoInsep,
    RhoA(f64),
    SigmaInsep,
    SigmaB(f64),
    Werner2x2(f64),
    RhoSymmetric,
    SigmaSymmetric,
    EpsMix(Box<Family>, f64),
}

impl Family {
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| {
            p.ok_or_else(|| Error::Precondition(format!("family `{name}` needs a parameter")))
        };
        Ok(match name {
            "psi_me3" => Family::PsiMe3,
            "q_proj" => Family::QProj,
            "rho_insep" => Family::RhoInsep,
            "rho_a" => Family::RhoA(need(param)?),
            "sigma_insep" => Family::SigmaInsep,
            "sigma_b" => Family::SigmaB(need(param)?),
            "werner2x2" => Family::Werner2x2(need(param)?),
            "rho_symmetric" => Family::RhoSymmetric,
            "sigma_symmetric" => Family::SigmaSymmetric,
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::PsiMe3 => "psi_me3",
            Family::QProj => "q_proj",
            Family::RhoInsep => "rho_insep",
            Family::RhoA(_) => "rho_a",
            Family::SigmaInsep => "sigma_insep",
            Family::SigmaB(_) => "sigma_b",
            Family::Werner2x2(_) => "werner2x2",
            Family::RhoSymmetric => "rho_symmetric",
            Family::SigmaSymmetric => "sigma_symmetric",
            Family::EpsMix(..) => "eps_mix",
        }
    }

    pub fn has_param(name: &str) -> bool {
        matches!(name, "rho_a" | "sigma_b" | "werner2x2")
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Family::PsiMe3 | Family::QProj | Family::RhoInsep | Family::RhoA(_) | Family::RhoSymmetric => (3, 3),
            Family::SigmaInsep | Family::SigmaB(_) | Family::SigmaSymmetric => (2, 4),
            Family::Werner2x2(_) => (2, 2),
            Family::EpsMix(base, _) => base.dims(),
        }
    }

    /// Remarks attached to parameter values where the family degenerates.
    pub fn note(&self) -> Option<&'static str> {
        match self {
            Family::RhoA(a) if *a == 1.0 => {
                Some("rho_a(1) coincides with rho_symmetric (sometimes quoted as the a=0 limit)")
            }
            Family::RhoA(a) if *a == 0.0 => Some("rho_a(0) is the product state P_{Phi_0}"),
            Family::SigmaB(b) if *b == 1.0 => {
                Some("sigma_b(1) coincides with sigma_symmetric (sometimes quoted as the b=0 limit)")
            }
            Family::SigmaB(b) if *b == 0.0 => Some("sigma_b(0) is the product state P_{Phi_b=0}"),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<BipartiteState> {
        let (da, db) = self.dims();
        let rho = match self {
            Family::PsiMe3 => CMatrix::projector(&psi_me3()),
            Family::QProj => q_operator(),
            Family::RhoInsep => rho_insep(),
            Family::RhoA(a) => {
                check_unit("a", *a)?;
                let w = 8.0 * a;
                &rho_insep().scale(w / (w + 1.0)) + &CMatrix::projector(&phi_a(*a)).scale(1.0 / (w + 1.0))
            }
            Family::SigmaInsep => sigma_insep(),
            Family::SigmaB(b) => {
                check_unit("b", *b)?;
                let w = 7.0 * b;
                &sigma_insep().scale(w / (w + 1.0)) + &CMatrix::projector(&phi_b(*b)).scale(1.0 / (w + 1.0))
            }
            Family::Werner2x2(p) => {
                check_unit("p", *p)?;
                let s = 0.5f64.sqrt();
                let singlet = real_vec(&[0.0, s, -s, 0.0]);
                &CMatrix::projector(&singlet).scale(*p) + &CMatrix::identity(4).scale((1.0 - p) / 4.0)
            }
            Family::RhoSymmetric => {
                let mut off = CMatrix::identity(9);
                for i in 0..3 {
                    off = &off - &product_projector(3, i, 3, i);
                }
                &CMatrix::projector(&psi_me3()).scale(3.0) + &off
            }
            Family::SigmaSymmetric => {
                let mut m = CMatrix::zeros(8, 8);
                for i in 0..3 {
                    m = &m + &CMatrix::projector(&psi_i(i)).scale(2.0);
                }
                &(&m + &product_projector(2, 0, 4, 3)) + &product_projector(2, 1, 4, 0)
            }
            Family::EpsMix(base, eps) => {
                check_unit("eps", *eps)?;
                return eps_mix(&base.build()?, *eps).map(|s| s.with_label(self.to_string()));
            }
        };
        let tr = rho.trace().re;
        Ok(BipartiteState::new(da, db, rho.scale(1.0 / tr))?.with_label(self.to_string()))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::RhoA(x) | Family::SigmaB(x) | Family::Werner2x2(x) => write!(f, "{}({x})", self.name()),
            Family::EpsMix(base, e) => write!(f, "eps_mix({base},{e})"),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Accepts `name`, `name(param)` and `eps_mix(<family>,eps)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some(open) = s.find('(') else {
            return Family::from_name(s, None);
        };
        if !s.ends_with(')') {
            return Err(Error::Parse { location: s.to_string(), message: "missing `)`".into() });
        }
        let name = &s[..open];
        let inner = &s[open + 1..s.len() - 1];
        let num = |t: &str| {
            t.trim().parse::<f64>().map_err(|e| Error::Parse { location: t.to_string(), message: e.to_string() })
        };
        if name == "eps_mix" {
            let comma = inner
                .rfind(',')
                .ok_or_else(|| Error::Parse { location: s.to_string(), message: "eps_mix(base,eps)".into() })?;
            let base: Family = inner[..comma].parse()?;
            return Ok(Family::EpsMix(Box::new(base), num(&inner[comma + 1..])?));
        }
        Family::from_name(name, Some(num(inner)?))
    }
}

/// Builds a named family; `param` is required exactly for the parametrised
/// ones (`rho_a`, `sigma_b`, `werner2x2`).
pub fn state_family(name: &str, param: Option<f64>) -> Result<BipartiteState> {
    if name == "eps_mix" {
        return Err(Error::Precondition("eps_mix needs a base state; use `eps_mix` directly".into()));
    }
    if !Family::has_param(name) && param.is_some() && FAMILY_NAMES.contains(&name) {
        return Err(Error::Precondition(format!("family `{name}` takes no parameter")));
    }
    Family::from_name(name, param)?.build()
}

/// `(1 − ε)·ρ + ε·I/(dA·dB)`.
pub fn eps_mix(base: &BipartiteState, eps: f64) -> Result<BipartiteState> {
    check_unit("eps", eps)?;
    let n = base.dim();
    let rho = &base.rho().scale(1.0 - eps) + &CMatrix::identity(n).scale(eps / n as f64);
    let s = BipartiteState::new(base.dim_a(), base.dim_b(), rho)?;
    Ok(match base.label() {
        Some(l) => s.with_label(format!("eps_mix({l},{eps})")),
        None => s,
    })
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ParamOutOfRange { name, value: x, lo: 0.0, hi: 1.0 });
    }
    Ok(())
}

fn product_projector(da: usize, i: usize, db: usize, j: usize) -> CMatrix {
    CMatrix::projector(&kron_vec(&basis_vector(da, i), &basis_vector(db, j)))
}

/// `(e1⊗e1 + e2⊗e2 + e3⊗e3)/√3`.
pub(crate) fn psi_me3() -> Vec<C64> {
    let s = 1.0 / 3f64.sqrt();
    let mut v = vec![C64::new(0.0, 0.0); 9];
    for i in 0..3 {
        v[4 * i] = C64::new(s, 0.0);
    }
    v
}

/// `I⊗I − Σ P_{e_i}⊗P_{e_i} − P_{e3}⊗P_{e1}` (unnormalised, trace 5).
fn q_operator() -> CMatrix {
    let mut q = CMatrix::identity(9);
    for i in 0..3 {
        q = &q - &product_projector(3, i, 3, i);
    }
    &q - &product_projector(3, 2, 3, 0)
}

fn rho_insep() -> CMatrix {
    &CMatrix::projector(&psi_me3()).scale(3.0 / 8.0) + &q_operator().scale(1.0 / 8.0)
}

/// `e3 ⊗ (√((1+a)/2) e1 + √((1−a)/2) e3)`.
pub(crate) fn phi_a(a: f64) -> Vec<C64> {
    let chi = real_vec(&[((1.0 + a) / 2.0).sqrt(), 0.0, ((1.0 - a) / 2.0).sqrt()]);
    kron_vec(&basis_vector(3, 2), &chi)
}

/// `(e1⊗e_{i+1} + e2⊗e_{i+2})/√2` in `C²⊗C⁴`, `i = 0, 1, 2`.
pub(crate) fn psi_i(i: usize) -> Vec<C64> {
    let s = 0.5f64.sqrt();
    let mut v = vec![C64::new(0.0, 0.0); 8];
    v[i] = C64::new(s, 0.0);
    v[4 + i + 1] = C64::new(s, 0.0);
    v
}

fn sigma_insep() -> CMatrix {
    let mut m = CMatrix::zeros(8, 8);
    for i in 0..3 {
        m = &m + &CMatrix::projector(&psi_i(i)).scale(2.0 / 7.0);
    }
    &m + &product_projector(2, 0, 4, 3).scale(1.0 / 7.0)
}

/// `e2 ⊗ (√((1+b)/2) e1 + √((1−b)/2) e4)` in `C²⊗C⁴`; the coherence sits
/// between `e2⊗e1` and `e2⊗e4`.
pub(crate) fn phi_b(b: f64) -> Vec<C64> {
    let chi = real_vec(&[((1.0 + b) / 2.0).sqrt(), 0.0, 0.0, ((1.0 - b) / 2.0).sqrt()]);
    kron_vec(&basis_vector(2, 1), &chi)
}
