//! JSON reports and certificate re-verification.
//!
//! Indices in reports are 1-based. Exact vectors are `p/q` strings. The
//! `timings_ms` object is the only part of a report that changes between
//! runs with the same flags and seed.

use serde_json::{json, Map, Value};

use crate::certify::{replay, CertifiedCover, CoverBox, MinorRecord};
use crate::error::{Error, Result};
use crate::frames::{ambiguous_pair, measurements, AmbiguousPair, ComplementViolation};
use crate::linalg::exact::{format_rational, parse_rational};
use crate::linalg::{Interval, Rational, Signal};
use crate::projection::{
    basis_union, margin_with, Certificate, Decision, MarginOptions, NecessaryTest, ProjectionFamily, RobustnessMargin,
    SpanDeficiencyWitness,
};

use super::family_file::Family;

pub const TOOL: &str = "prframes";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn one_based(idx: &[usize]) -> Value {
    json!(idx.iter().map(|i| i + 1).collect::<Vec<_>>())
}

fn strings(v: &[Rational]) -> Value {
    json!(v.iter().map(format_rational).collect::<Vec<_>>())
}

pub fn witness_json(w: &SpanDeficiencyWitness) -> Value {
    json!({
        "type": "span_deficiency",
        "x": strings(w.x.coords()),
        "span_dim": w.span_dim,
        "subspaces": w.deficient_indices.as_deref().map(one_based),
    })
}

pub fn violation_json(v: &ComplementViolation, pair: &AmbiguousPair) -> Value {
    json!({
        "type": "complement_violation",
        "subset": one_based(&v.subset),
        "rank_subset": v.rank_i,
        "rank_complement": v.rank_ic,
        "x": strings(pair.x.coords()),
        "y": strings(pair.y.coords()),
    })
}

pub fn margin_json(m: &RobustnessMargin) -> Value {
    json!({
        "type": "margin",
        "value": m.value,
        "argmin_x": m.argmin_x,
        "samples": m.samples,
        "starts": m.starts,
        "seed": m.seed,
    })
}

pub fn cover_json(c: &CertifiedCover) -> Value {
    let records: Vec<Value> = c
        .records
        .iter()
        .map(|r| {
            json!({
                "face": r.cover_box.face + 1,
                "ranges": r.cover_box.ranges.iter().map(|i| [i.lo(), i.hi()]).collect::<Vec<_>>(),
                "rows": one_based(&r.rows),
                "cols": one_based(&r.cols),
            })
        })
        .collect();
    json!({
        "type": "cover",
        "ambient": c.ambient_dim,
        "subspaces": c.subspaces,
        "boxes": c.boxes_certified,
        "max_depth": c.max_depth,
        "records": records,
    })
}

pub fn certificate_json(c: &Certificate) -> Value {
    match c {
        Certificate::Witness(w) => witness_json(w),
        Certificate::UnionViolation { violation, witness } => json!({
            "type": "union_violation",
            "union_subset": one_based(&violation.subset),
            "witness": witness_json(witness),
        }),
        Certificate::Margin(m) => margin_json(m),
        Certificate::Cover(c) => cover_json(c),
        Certificate::Unresolved { remaining, processed, budget_exceeded } => json!({
            "type": "unresolved",
            "remaining_boxes": remaining.len(),
            "processed_boxes": processed,
            "budget_exceeded": budget_exceeded,
        }),
        Certificate::None => json!({ "type": "none" }),
    }
}

fn necessary_json(t: &NecessaryTest) -> Value {
    match t {
        NecessaryTest::Passed => json!({ "status": "passed", "scope": "necessary-only" }),
        NecessaryTest::Violated(v) => json!({ "status": "violated", "union_subset": one_based(&v.subset) }),
        NecessaryTest::Skipped(reason) => json!({ "status": "skipped", "reason": reason }),
    }
}

/// Builder for the report object; keys keep insertion order.
pub struct Report {
    fields: Map<String, Value>,
    timings: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("tool".into(), json!(TOOL));
        fields.insert("version".into(), json!(VERSION));
        fields.insert("command".into(), json!(command));
        Report { fields, timings: Map::new() }
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        self.fields.insert(key.into(), value);
        self
    }

    pub fn timing(&mut self, key: &str, elapsed: std::time::Duration) -> &mut Self {
        self.timings.insert(key.into(), json!((elapsed.as_secs_f64() * 1e3 * 1000.0).round() / 1000.0));
        self
    }

    pub fn decision(&mut self, d: &Decision) -> &mut Self {
        self.set("tier", json!(d.tier));
        self.set("verdict", json!(d.verdict));
        self.set("certificate", certificate_json(&d.certificate));
        self.set("necessary_test", necessary_json(&d.necessary_test));
        self.set("random_points_tested", json!(d.random_points_tested));
        if let Some(m) = &d.margin {
            self.set("margin", json!(m.value));
        }
        self.set("notes", json!(d.notes));
        self
    }

    pub fn to_value(&self, with_timings: bool) -> Value {
        let mut out = self.fields.clone();
        if with_timings {
            out.insert("timings_ms".into(), Value::Object(self.timings.clone()));
        }
        Value::Object(out)
    }

    pub fn to_json(&self, with_timings: bool) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value(with_timings)).expect("json values serialize");
        s.push('\n');
        s
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.get(key)
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::BadCertificate(format!("missing field {key:?}")))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadCertificate(msg.into())
}

fn rational_vec(v: &Value, key: &str) -> Result<Vec<Rational>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| bad(format!("{key} is not an array")))?
        .iter()
        .map(|s| {
            s.as_str()
                .ok_or_else(|| bad(format!("{key} entries must be strings")))
                .and_then(|s| parse_rational(s).map_err(bad))
        })
        .collect()
}

fn index_vec(v: &Value, key: &str, bound: usize) -> Result<Vec<usize>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| bad(format!("{key} is not an array")))?
        .iter()
        .map(|i| match i.as_u64() {
            Some(k) if k >= 1 && (k as usize) <= bound => Ok(k as usize - 1),
            _ => Err(bad(format!("{key} has an index outside 1..={bound}"))),
        })
        .collect()
}

/// Outcome of re-checking a certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum Recheck {
    /// The certificate is an exact proof and it checks out.
    Proof(String),
    /// A reproducible numeric estimate that recomputes to the same value.
    Reproduced(String),
    /// Nothing to verify (unknown verdicts).
    Nothing(String),
}

/// Re-verifies the `certificate` object of a report against `family`.
pub fn verify_certificate(family: &Family, cert: &Value) -> Result<Recheck> {
    let ty = field(cert, "type")?.as_str().unwrap_or_default();
    match (family, ty) {
        (Family::Vectors(vf), "complement_violation") => {
            let subset = index_vec(cert, "subset", vf.len())?;
            let violation = ComplementViolation {
                subset,
                rank_i: field(cert, "rank_subset")?.as_u64().unwrap_or(0) as usize,
                rank_ic: field(cert, "rank_complement")?.as_u64().unwrap_or(0) as usize,
            };
            if !violation.holds_for(vf) {
                return Err(bad("the subset does not violate the complement property"));
            }
            let x = Signal::new(rational_vec(cert, "x")?)?;
            let y = Signal::new(rational_vec(cert, "y")?)?;
            if x == y || x == y.neg() {
                return Err(bad("x and y agree up to sign"));
            }
            let (mx, my) = (measurements(vf, &x)?, measurements(vf, &y)?);
            if mx.iter().zip(&my).any(|(a, b)| crate::linalg::exact::abs(a) != crate::linalg::exact::abs(b)) {
                return Err(bad("|<x, v_i>| and |<y, v_i>| differ"));
            }
            Ok(Recheck::Proof("x and y have identical magnitudes and differ beyond sign".into()))
        }
        (Family::Vectors(_), "complement_property") => {
            Ok(Recheck::Nothing("pass verdicts for vectors come from exhaustive enumeration; rerun check".into()))
        }
        (Family::Subspaces(f), "span_deficiency") => verify_witness(f, cert),
        (Family::Subspaces(f), "union_violation") => {
            // the witness is the proof; the subset only records where it came from
            let (union, _) = basis_union(f);
            index_vec(cert, "union_subset", union.len())?;
            verify_witness(f, field(cert, "witness")?)
        }
        (Family::Subspaces(f), "cover") => {
            let cover = cover_from_json(cert)?;
            let r = replay(f, &cover)?;
            Ok(Recheck::Proof(format!("{} boxes replayed over {} faces", r.records, r.faces)))
        }
        (Family::Subspaces(f), "margin") => {
            let value = field(cert, "value")?.as_f64().ok_or_else(|| bad("value is not a number"))?;
            let opts = MarginOptions {
                samples: field(cert, "samples")?.as_u64().ok_or_else(|| bad("samples"))? as usize,
                starts: Some(field(cert, "starts")?.as_u64().ok_or_else(|| bad("starts"))? as usize),
                seed: field(cert, "seed")?.as_u64().ok_or_else(|| bad("seed"))?,
                ..Default::default()
            };
            let again = margin_with(f, &opts).value;
            if again != value {
                return Err(bad(format!("margin recomputes to {again}, report says {value}")));
            }
            Ok(Recheck::Reproduced(format!("margin {value} reproduced (numeric evidence, not a proof)")))
        }
        (_, "unresolved" | "none") => Ok(Recheck::Nothing(format!("certificate type {ty:?} carries no claim"))),
        _ => Err(bad(format!("certificate type {ty:?} does not apply to a {} family", family.kind()))),
    }
}

fn verify_witness(f: &ProjectionFamily, cert: &Value) -> Result<Recheck> {
    let x = Signal::new(rational_vec(cert, "x")?)?;
    let claimed = field(cert, "span_dim")?.as_u64().ok_or_else(|| bad("span_dim"))? as usize;
    let w = SpanDeficiencyWitness { x, span_dim: claimed, deficient_indices: None };
    if !w.verify(f) {
        return Err(bad("span{P_i x} is not of the claimed deficient dimension"));
    }
    Ok(Recheck::Proof(format!("span{{P_i x}} has dimension {claimed} < {}", f.ambient_dim())))
}

pub fn cover_from_json(cert: &Value) -> Result<CertifiedCover> {
    let ambient_dim = field(cert, "ambient")?.as_u64().ok_or_else(|| bad("ambient"))? as usize;
    let subspaces = field(cert, "subspaces")?.as_u64().ok_or_else(|| bad("subspaces"))? as usize;
    let records = field(cert, "records")?
        .as_array()
        .ok_or_else(|| bad("records is not an array"))?
        .iter()
        .map(|r| {
            let face = index_vec(&json!({ "f": [field(r, "face")?] }), "f", ambient_dim)?[0];
            let ranges = field(r, "ranges")?
                .as_array()
                .ok_or_else(|| bad("ranges"))?
                .iter()
                .map(|pair| {
                    match pair.as_array().map(|p| (p.first().and_then(Value::as_f64), p.get(1).and_then(Value::as_f64)))
                    {
                        Some((Some(lo), Some(hi))) => Interval::new(lo, hi).map_err(|e| bad(e.to_string())),
                        _ => Err(bad("range must be [lo, hi]")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MinorRecord {
                cover_box: CoverBox { face, ranges },
                rows: index_vec(r, "rows", subspaces)?,
                cols: index_vec(r, "cols", ambient_dim)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CertifiedCover { ambient_dim, subspaces, boxes_certified: records.len(), max_depth: 0, records })
}

/// Certificate for a vector family checked by the complement property.
pub fn vector_certificate(
    family: &crate::frames::VectorFamily,
    outcome: &crate::frames::ComplementOutcome,
) -> Result<Value> {
    Ok(match outcome.violation() {
        None => json!({ "type": "complement_property", "subsets": "all" }),
        Some(v) => violation_json(v, &ambiguous_pair(family, v)?),
    })
}
