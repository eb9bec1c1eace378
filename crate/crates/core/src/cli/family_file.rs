//! JSON family files.
//!
//! ```json
//! {"ambient": 3, "kind": "vectors", "entries": [["1", "0", "0"], ["1/2", "0.25", "-3"]]}
//! {"ambient": 3, "kind": "subspaces", "entries": [[["1", "0", "0"], ["0", "1", "0"]], [["1", "1", "1"]]]}
//! ```
//!
//! Scalars are strings holding an integer, a fraction `p/q`, or a decimal,
//! or plain JSON numbers. Decimals and non-integer numbers are read as the
//! nearest double and then converted exactly. Files are written with
//! `p/q` strings only, so a write/read cycle preserves every entry.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::frames::VectorFamily;
use crate::linalg::exact::{format_rational, from_f64, parse_rational};
use crate::linalg::{RMatrix, Rational};
use crate::projection::ProjectionFamily;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Vectors(VectorFamily),
    Subspaces(ProjectionFamily),
}

impl Family {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Family::Vectors(v) => v.ambient_dim(),
            Family::Subspaces(f) => f.ambient_dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Family::Vectors(_) => "vectors",
            Family::Subspaces(_) => "subspaces",
        }
    }
}

fn perr(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn scalar(v: &Value, at: &str) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|m| perr(at, m)),
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(Rational::from_integer(i.into()))
            } else {
                let f = num.as_f64().ok_or_else(|| perr(at, "number out of range"))?;
                from_f64(f).map_err(|e| perr(at, e.to_string()))
            }
        }
        other => Err(perr(at, format!("expected a number or rational string, found {}", type_name(other)))),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| perr(at, format!("expected an array, found {}", type_name(v))))
}

fn vector(v: &Value, n: usize, at: &str) -> Result<Vec<Rational>> {
    let items = array(v, at)?;
    if items.len() != n {
        return Err(perr(at, format!("expected {n} coordinates, found {}", items.len())));
    }
    items.iter().enumerate().map(|(j, x)| scalar(x, &format!("{at}[{j}]"))).collect()
}

/// Parses a family document; errors name the JSON line/column or the field.
pub fn parse_family(text: &str) -> Result<Family> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| perr(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let obj = doc.as_object().ok_or_else(|| perr("document", "expected a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "ambient" | "kind" | "entries")) {
        return Err(perr(k.clone(), "unknown field"));
    }
    let n = obj
        .get("ambient")
        .ok_or_else(|| perr("ambient", "missing field"))?
        .as_u64()
        .filter(|&n| n > 0)
        .ok_or_else(|| perr("ambient", "expected a positive integer"))? as usize;
    let kind = obj.get("kind").ok_or_else(|| perr("kind", "missing field"))?;
    let entries = array(obj.get("entries").ok_or_else(|| perr("entries", "missing field"))?, "entries")?;
    match kind.as_str() {
        Some("vectors") => {
            let vs = entries
                .iter()
                .enumerate()
                .map(|(i, e)| vector(e, n, &format!("entries[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Family::Vectors(VectorFamily::new(n, vs).map_err(|e| perr("entries", e.to_string()))?))
        }
        Some("subspaces") => {
            let mut bases = Vec::with_capacity(entries.len());
            for (i, e) in entries.iter().enumerate() {
                let at = format!("entries[{i}]");
                let rows = array(e, &at)?
                    .iter()
                    .enumerate()
                    .map(|(r, row)| vector(row, n, &format!("{at}[{r}]")))
                    .collect::<Result<Vec<_>>>()?;
                if rows.is_empty() {
                    return Err(perr(at, "a subspace needs at least one basis row"));
                }
                bases.push(RMatrix::from_rows(n, rows).map_err(|e| perr(&at, e.to_string()))?);
            }
            let subspaces = bases
                .into_iter()
                .enumerate()
                .map(|(i, b)| {
                    crate::projection::Subspace::new(b).map_err(|e| perr(format!("entries[{i}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Family::Subspaces(ProjectionFamily::new(n, subspaces).map_err(|e| perr("entries", e.to_string()))?))
        }
        _ => Err(perr("kind", "expected \"vectors\" or \"subspaces\"")),
    }
}

fn strings(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(|q| Value::String(format_rational(q))).collect())
}

pub fn family_json(family: &Family) -> Value {
    let entries: Vec<Value> = match family {
        Family::Vectors(v) => v.vectors().iter().map(|x| strings(x)).collect(),
        Family::Subspaces(f) => {
            f.subspaces().iter().map(|w| Value::Array(w.basis().row_iter().map(strings).collect())).collect()
        }
    };
    json!({ "ambient": family.ambient_dim(), "kind": family.kind(), "entries": entries })
}

pub fn write_family(family: &Family) -> String {
    let mut s = serde_json::to_string_pretty(&family_json(family)).expect("json values serialize");
    s.push('\n');
    s
}

pub fn read_family_file(path: &std::path::Path) -> Result<Family> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_family(&text)
}

pub fn family_from_json(v: &Value) -> Result<Family> {
    parse_family(&v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_scalars() {
        let f = parse_family(r#"{"ambient": 2, "kind": "vectors", "entries": [["3/7", 2], ["0.5", -1.25]]}"#).unwrap();
        let Family::Vectors(v) = f else { panic!() };
        assert_eq!(v.vectors()[0][0], crate::linalg::exact::ratio(3, 7));
        assert_eq!(v.vectors()[1][1], crate::linalg::exact::ratio(-5, 4));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err =
            parse_family(r#"{"ambient": 2, "kind": "vectors", "entries": [["1", "0"], ["1", "x"]]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location == "entries[1][1]"), "{err}");
        let err = parse_family(r#"{"ambient": 3, "kind": "subspaces", "entries": [[["1", "0"]]]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location == "entries[0][0]"), "{err}");
        let err = parse_family("{\"ambient\": 2,\n \"kind\": }").unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location.starts_with("line 2")), "{err}");
        let err = parse_family(r#"{"ambient": 2, "kind": "planes", "entries": []}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location == "kind"));
    }

    #[test]
    fn dependent_basis_is_a_parse_error() {
        let err =
            parse_family(r#"{"ambient": 3, "kind": "subspaces", "entries": [[["1", "2", "3"], ["2", "4", "6"]]]}"#)
                .unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location == "entries[0]"));
    }

    #[test]
    fn round_trip_is_exact() {
        let text = r#"{"ambient": 3, "kind": "subspaces", "entries": [[["1/3", "0", "0.1"]], [["1", "1", "0"], ["0", "-2/9", "1"]]]}"#;
        let f = parse_family(text).unwrap();
        assert_eq!(parse_family(&write_family(&f)).unwrap(), f);
    }
}
