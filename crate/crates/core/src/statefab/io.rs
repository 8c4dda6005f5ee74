//! State file format: a JSON object with `dims: [dA, dB]`, `matrix`: the
//! `(dA·dB)²` entries as `[re, im]` pairs in row-major first-factor-major
//! order, and an optional `label`. Unknown fields are rejected.

use std::fmt::Write as _;

use serde::Deserialize;

use super::BipartiteState;
use crate::error::{Error, Result};
use crate::matkit::{CMatrix, C64};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: [usize; 2],
    pub matrix: Vec<[f64; 2]>,
    #[serde(default)]
    pub label: Option<String>,
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    Error::Parse { location: format!("line {}, column {}", e.line(), e.column()), message: e.to_string() }
}

/// Parses and validates a state file.
pub fn read_state(text: &str) -> Result<BipartiteState> {
    let file: StateFile = serde_json::from_str(text).map_err(json_error)?;
    let [da, db] = file.dims;
    let n = da * db;
    if file.matrix.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "`matrix` has {} entries, dims {da}x{db} need {}",
            file.matrix.len(),
            n * n
        )));
    }
    let data = file.matrix.iter().map(|&[re, im]| C64::new(re, im)).collect();
    let rho = CMatrix::new(n, n, data)?;
    let s = BipartiteState::new(da, db, rho)?;
    Ok(match file.label {
        Some(l) => s.with_label(l),
        None => s,
    })
}

/// Canonical serialisation: 17 significant digits per number, one entry per
/// line, fields in the order `dims`, `label`, `matrix`.
pub fn write_state(s: &BipartiteState) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"dims\": [{}, {}],", s.dim_a(), s.dim_b());
    if let Some(l) = s.label() {
        let _ = writeln!(out, "  \"label\": {},", serde_json::to_string(l).expect("string"));
    }
    out.push_str("  \"matrix\": [\n");
    let entries = s.rho().as_slice();
    for (k, z) in entries.iter().enumerate() {
        let sep = if k + 1 == entries.len() { "" } else { "," };
        let _ = writeln!(out, "    [{}, {}]{sep}", fmt17(z.re), fmt17(z.im));
    }
    out.push_str("  ]\n}\n");
    out
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statefab::state_family;

    #[test]
    fn maximally_mixed_file() {
        let mut m = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                m.push(if i == j { "[0.25, 0]" } else { "[0, 0]" });
            }
        }
        let text = format!("{{\"dims\": [2, 2], \"matrix\": [{}]}}", m.join(","));
        let s = read_state(&text).unwrap();
        assert_eq!(s.dims(), (2, 2));
    }

    #[test]
    fn trace_error_is_reported() {
        let mut m = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                m.push(if i == j { "[0.225, 0]" } else { "[0, 0]" });
            }
        }
        let text = format!("{{\"dims\": [2, 2], \"matrix\": [{}]}}", m.join(","));
        assert!(matches!(read_state(&text), Err(Error::Invariant { invariant: "trace", .. })));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = state_family("rho_a", Some(0.3)).unwrap();
        let text = write_state(&s);
        let back = read_state(&text).unwrap();
        assert_eq!(back.rho().as_slice(), s.rho().as_slice());
        assert_eq!(back.label(), Some("rho_a(0.3)"));
        assert_eq!(write_state(&back), text);
    }

    #[test]
    fn syntax_dims_and_unknown_fields() {
        assert!(matches!(read_state("{\"dims\": [2, 2], \"matrix\": ["), Err(Error::Parse { .. })));
        assert!(matches!(
            read_state("{\"dims\": [2, 2], \"matrix\": [[1, 0]]}"),
            Err(Error::DimensionMismatch(_))
        ));
        let e = read_state("{\"dims\": [1, 1], \"matrix\": [[1, 0]], \"extra\": 1}").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }), "{e}");
        assert!(read_state("{\"dims\": [1, 1], \"matrix\": [[1, 0]]}").is_ok());
    }
}
