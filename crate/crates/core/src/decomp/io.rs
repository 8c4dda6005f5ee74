//! Decomposition file format:
//! `{"dims": [dA, dB], "terms": [{"w": .., "phi": [[re, im], ..], "chi": [[re, im], ..]}, ..]}`.

use std::fmt::Write as _;

use serde::Deserialize;

use super::{SeparableDecomposition, Term};
use crate::error::Result;
use crate::matkit::C64;
use crate::statefab::io::{fmt17, json_error};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecompositionFile {
    dims: [usize; 2],
    terms: Vec<TermFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    w: f64,
    phi: Vec<[f64; 2]>,
    chi: Vec<[f64; 2]>,
}

fn complex(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

pub fn read_decomposition(text: &str) -> Result<SeparableDecomposition> {
    let f: DecompositionFile = serde_json::from_str(text).map_err(json_error)?;
    let terms = f.terms.iter().map(|t| Term { weight: t.w, phi: complex(&t.phi), chi: complex(&t.chi) }).collect();
    SeparableDecomposition::new(f.dims[0], f.dims[1], terms)
}

pub fn write_decomposition(d: &SeparableDecomposition) -> String {
    let pairs = |v: &[C64]| v.iter().map(|z| format!("[{}, {}]", fmt17(z.re), fmt17(z.im))).collect::<Vec<_>>().join(", ");
    let (da, db) = d.dims();
    let mut out = format!("{{\n  \"dims\": [{da}, {db}],\n  \"terms\": [\n");
    for (k, t) in d.terms().iter().enumerate() {
        let sep = if k + 1 == d.len() { "" } else { "," };
        let _ = writeln!(
            out,
            "    {{\"w\": {}, \"phi\": [{}], \"chi\": [{}]}}{sep}",
            fmt17(t.weight),
            pairs(&t.phi),
            pairs(&t.chi)
        );
    }
    out.push_str("  ]\n}\n");
    out
}
