//! Interval certification of the span condition for every direction.
//!
//! Every nonzero `x` is a positive multiple of a point on the cube surface
//! `‖x‖_∞ = 1`, and `span{P_i x}` does not change under `x ↦ −x`, so it is
//! enough to cover the faces `x_k = +1`. Each face is split into boxes; a box
//! is settled once some `n × n` minor of the interval stack `[P_i X]`
//! excludes zero, because then the stack has rank `n` at every point of the
//! box. Boxes that cannot be settled are bisected.
//!
//! The settled boxes are written out as a line-oriented certificate that
//! [`replay`] re-verifies from scratch:
//!
//! ```text
//! # prframes cover certificate v1
//! # ambient 3 subspaces 5
//! 1 -1 0 -1 1 | 1 2 4 | 1 2 3
//! ```
//!
//! Each record holds the face (1-based coordinate fixed to `+1`), the
//! `2(n−1)` endpoints of the free coordinates in increasing coordinate order,
//! the 1-based subspaces whose rows form the minor, and its columns.
//! Endpoints are printed in shortest round-trip decimal form, so they parse
//! back to the same doubles.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::Combinations;
use crate::linalg::exact::from_f64;
use crate::linalg::interval::MAX_MINOR;
use crate::linalg::{interval_minor, Interval, IntervalMatrix, Rational, Signal};
use crate::projection::{edidin_decide_exact_at, intersection, EdidinOutcome, ProjectionFamily, SpanDeficiencyWitness};

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub max_depth: usize,
    /// Maximum number of boxes processed.
    pub budget: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { max_depth: 20, budget: 1_000_000 }
    }
}

/// Part of the face `x_face = +1` of the cube; `ranges` cover the other
/// coordinates in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverBox {
    pub face: usize,
    pub ranges: Vec<Interval>,
}

impl CoverBox {
    pub fn face_root(n: usize, face: usize) -> Self {
        let unit = Interval::new(-1.0, 1.0).expect("valid");
        CoverBox { face, ranges: vec![unit; n - 1] }
    }

    fn full<T: Clone>(&self, one: T, mut free: impl FnMut(&Interval) -> T) -> Vec<T> {
        let n = self.ranges.len() + 1;
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            if i == self.face {
                out.push(one.clone());
            } else {
                out.push(free(&self.ranges[k]));
                k += 1;
            }
        }
        out
    }

    /// The box as an interval vector in ℝⁿ.
    pub fn as_intervals(&self) -> Vec<Interval> {
        self.full(Interval::point(1.0), |r| *r)
    }

    pub fn center(&self) -> Vec<f64> {
        self.full(1.0, Interval::mid)
    }

    /// Widest free coordinate, lowest index on ties.
    pub fn widest(&self) -> usize {
        let mut best = 0;
        for (k, r) in self.ranges.iter().enumerate() {
            if r.width() > self.ranges[best].width() {
                best = k;
            }
        }
        best
    }

    pub fn split(&self) -> (CoverBox, CoverBox) {
        let k = self.widest();
        let (a, b) = self.ranges[k].bisect();
        let mut left = self.clone();
        let mut right = self.clone();
        left.ranges[k] = a;
        right.ranges[k] = b;
        (left, right)
    }

    /// Exact membership of a point already scaled onto this face.
    pub fn contains(&self, p: &[Rational]) -> bool {
        let mut k = 0;
        for (i, c) in p.iter().enumerate() {
            if i == self.face {
                continue;
            }
            if !self.ranges[k].contains_rational(c) {
                return false;
            }
            k += 1;
        }
        true
    }

    fn key(&self) -> (usize, Vec<(u64, u64)>) {
        (self.face, self.ranges.iter().map(|r| (r.lo().to_bits(), r.hi().to_bits())).collect())
    }
}

/// One settled box and the minor that settled it (0-based internally).
#[derive(Clone, Debug, PartialEq)]
pub struct MinorRecord {
    pub cover_box: CoverBox,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedCover {
    pub ambient_dim: usize,
    pub subspaces: usize,
    pub boxes_certified: usize,
    pub max_depth: usize,
    pub records: Vec<MinorRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertifyOutcome {
    CertifiedPasses(CertifiedCover),
    FailsAt(SpanDeficiencyWitness),
    Unknown { remaining: Vec<CoverBox>, processed: usize, budget_exceeded: bool },
}

impl CertifyOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, CertifyOutcome::CertifiedPasses(_))
    }
}

struct IntervalFamily {
    n: usize,
    projectors: Vec<Vec<Interval>>,
}

impl IntervalFamily {
    fn new(family: &ProjectionFamily) -> Self {
        let projectors = family
            .subspaces()
            .iter()
            .map(|w| w.projector().row_iter().flatten().map(Interval::enclosing).collect())
            .collect();
        IntervalFamily { n: family.ambient_dim(), projectors }
    }

    /// Minor of the stack `S(x)` (row `i` is `P_i x`) on `rows × cols`,
    /// written as `Σ_j x_j A_j`, left-multiplied by `r` and evaluated over
    /// the interval vector `x`. Each `x_j` occurs once per entry, so the only
    /// overestimation comes from the determinant expansion, which is mild
    /// when `r` is close to the inverse of the minor at the box centre.
    fn preconditioned_minor(&self, x: &[Interval], rows: &[usize], cols: &[usize], r: &[f64]) -> Result<Interval> {
        let n = self.n;
        let k = rows.len();
        let mut c = vec![Interval::zero(); k * k];
        for (j, xj) in x.iter().enumerate() {
            // (R A_j)[a][b] = Σ_t R[a][t] P_{rows_t}[cols_b][j]
            for a in 0..k {
                for (b, &col) in cols.iter().enumerate() {
                    let mut acc = Interval::zero();
                    for (t, &row) in rows.iter().enumerate() {
                        acc = acc + Interval::point(r[a * k + t]) * self.projectors[row][col * n + j];
                    }
                    c[a * k + b] = c[a * k + b] + acc * *xj;
                }
            }
        }
        let m = IntervalMatrix::new(k, k, c)?;
        let all: Vec<usize> = (0..k).collect();
        interval_minor(&m, &all, &all)
    }

    /// True when the `rows × cols` minor of the stack is nonzero on the
    /// whole box. Preconditioning multiplies the determinant by the constant
    /// `det R`, so an enclosure excluding zero is a proof either way.
    fn minor_excludes_zero(&self, b: &CoverBox, rows: &[usize], cols: &[usize]) -> bool {
        let k = rows.len();
        let center = b.center();
        let mut m0 = nalgebra::DMatrix::<f64>::zeros(k, k);
        for (a, &row) in rows.iter().enumerate() {
            let p = &self.projectors[row];
            for (bcol, &col) in cols.iter().enumerate() {
                m0[(a, bcol)] = (0..self.n).map(|j| p[col * self.n + j].mid() * center[j]).sum();
            }
        }
        let r = match m0.try_inverse() {
            Some(inv) if inv.iter().all(|v| v.is_finite()) => {
                (0..k * k).map(|i| inv[(i / k, i % k)]).collect::<Vec<f64>>()
            }
            _ => (0..k * k).map(|i| if i / k == i % k { 1.0 } else { 0.0 }).collect(),
        };
        self.preconditioned_minor(&b.as_intervals(), rows, cols, &r).is_ok_and(|d| !d.contains_zero())
    }
}

fn det_f64(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs())).unwrap();
        if a[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..n {
                a.swap(p * n + j, c * n + j);
            }
            det = -det;
        }
        let piv = a[c * n + c];
        det *= piv;
        for i in c + 1..n {
            let f = a[i * n + c] / piv;
            for j in c..n {
                a[i * n + j] -= f * a[c * n + j];
            }
        }
    }
    det
}

/// Row subset whose minor is largest in magnitude at `x`.
fn best_rows(family: &ProjectionFamily, x: &[f64]) -> Vec<usize> {
    let n = family.ambient_dim();
    let rows: Vec<Vec<f64>> = family.subspaces().iter().map(|w| w.apply_f64(x)).collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for s in Combinations::new(family.len(), n) {
        let mut a = Vec::with_capacity(n * n);
        for &i in &s {
            a.extend_from_slice(&rows[i]);
        }
        let d = det_f64(a, n).abs();
        if d > best.0 {
            best = (d, s);
        }
    }
    best.1
}

/// Rational points inside intersections of subspaces, moved onto the cube
/// surface. Deficient directions sit at such points whenever the family has
/// an intersection-type failure, and they rarely coincide with box centres.
fn structural_probes(family: &ProjectionFamily) -> Vec<(Vec<Rational>, SpanDeficiencyWitness)> {
    let n = family.ambient_dim();
    let m = family.len();
    let mut out = Vec::new();
    let mut tested = 0;
    for k in (1..=m.min(n - 1)).rev() {
        for s in Combinations::new(m, k) {
            tested += 1;
            if tested > crate::projection::DEFAULT_FALSIFY_SUBSETS {
                return out;
            }
            for row in intersection(family, &s).row_iter() {
                let Ok(x) = Signal::new(row.to_vec()) else { continue };
                if let Ok(EdidinOutcome::Deficient(mut w)) = edidin_decide_exact_at(family, &x) {
                    w.deficient_indices = Some(s.clone());
                    out.push((on_cube(row), w));
                }
            }
        }
    }
    out
}

/// Scales `p` so its largest coordinate (first one on ties) becomes `+1`.
fn on_cube(p: &[Rational]) -> Vec<Rational> {
    let mut k = 0;
    for (i, c) in p.iter().enumerate() {
        if num_traits::Signed::abs(c) > num_traits::Signed::abs(&p[k]) {
            k = i;
        }
    }
    let s = p[k].clone();
    p.iter().map(|c| c / &s).collect()
}

fn on_face(p: &[Rational], face: usize) -> Option<Vec<Rational>> {
    let s = &p[face];
    if s.is_zero() {
        return None;
    }
    let q: Vec<Rational> = p.iter().map(|c| c / s).collect();
    q.iter().all(|c| num_traits::Signed::abs(c) <= Rational::from_integer(1.into())).then_some(q)
}

enum BoxResult {
    Settled(MinorRecord),
    Split(CoverBox, CoverBox),
    Failed(SpanDeficiencyWitness),
    Stuck(CoverBox),
}

/// Branch-and-certify over the cube faces `x_k = +1`.
pub fn box_cover_certify(family: &ProjectionFamily, opts: &CertifyOptions) -> Result<CertifyOutcome> {
    let n = family.ambient_dim();
    if n > MAX_MINOR {
        return Err(Error::Precondition(format!("certification supports n <= {MAX_MINOR}, got {n}")));
    }
    if family.len() < n {
        // the stack has fewer rows than columns everywhere
        let x = Signal::new((0..n).map(|i| Rational::from_integer(((i == 0) as i64).into())).collect())?;
        if let EdidinOutcome::Deficient(w) = edidin_decide_exact_at(family, &x)? {
            return Ok(CertifyOutcome::FailsAt(w));
        }
    }
    let ifam = IntervalFamily::new(family);
    let cols: Vec<usize> = (0..n).collect();
    let probes: OnceLock<Vec<(Vec<Rational>, SpanDeficiencyWitness)>> = OnceLock::new();

    let process = |b: &CoverBox, depth: usize| -> BoxResult {
        let rows = best_rows(family, &b.center());
        if !rows.is_empty() && ifam.minor_excludes_zero(b, &rows, &cols) {
            return BoxResult::Settled(MinorRecord { cover_box: b.clone(), rows, cols: cols.clone() });
        }
        if depth < opts.max_depth {
            let (l, r) = b.split();
            return BoxResult::Split(l, r);
        }
        let probes = probes.get_or_init(|| structural_probes(family));
        for (p, w) in probes {
            if let Some(q) = on_face(p, b.face) {
                if b.contains(&q) {
                    return BoxResult::Failed(w.clone());
                }
            }
        }
        if let Ok(x) = Signal::from_f64(&b.center()) {
            if let Ok(EdidinOutcome::Deficient(w)) = edidin_decide_exact_at(family, &x) {
                return BoxResult::Failed(w);
            }
        }
        BoxResult::Stuck(b.clone())
    };

    let mut frontier: Vec<CoverBox> = (0..n).map(|f| CoverBox::face_root(n, f)).collect();
    let mut records = Vec::new();
    let mut stuck = Vec::new();
    let mut processed = 0;
    let mut depth = 0;
    while !frontier.is_empty() {
        if processed + frontier.len() > opts.budget {
            stuck.extend(frontier);
            return Ok(CertifyOutcome::Unknown { remaining: stuck, processed, budget_exceeded: true });
        }
        processed += frontier.len();
        let results: Vec<BoxResult> = frontier.par_iter().map(|b| process(b, depth)).collect();
        let mut next = Vec::new();
        for r in results {
            match r {
                BoxResult::Settled(rec) => records.push(rec),
                BoxResult::Split(l, r) => {
                    next.push(l);
                    next.push(r);
                }
                BoxResult::Failed(w) => return Ok(CertifyOutcome::FailsAt(w)),
                BoxResult::Stuck(b) => stuck.push(b),
            }
        }
        frontier = next;
        if !frontier.is_empty() {
            depth += 1;
        }
    }
    if !stuck.is_empty() {
        return Ok(CertifyOutcome::Unknown { remaining: stuck, processed, budget_exceeded: false });
    }
    Ok(CertifyOutcome::CertifiedPasses(CertifiedCover {
        ambient_dim: n,
        subspaces: family.len(),
        boxes_certified: records.len(),
        max_depth: depth,
        records,
    }))
}

/// Summary of a successful [`replay`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub records: usize,
    pub faces: usize,
}

/// Re-verifies a cover against `family`: every record's interval minor must
/// exclude zero, and the records must tile every face exactly as the
/// bisection rule would have produced them.
pub fn replay(family: &ProjectionFamily, cover: &CertifiedCover) -> Result<ReplayReport> {
    let n = family.ambient_dim();
    if cover.ambient_dim != n || cover.subspaces != family.len() {
        return Err(Error::BadCertificate(format!(
            "certificate is for {} subspaces in R^{}, family has {} in R^{n}",
            cover.subspaces,
            cover.ambient_dim,
            family.len()
        )));
    }
    let ifam = IntervalFamily::new(family);
    let bad = cover.records.par_iter().position_first(|rec| {
        let b = &rec.cover_box;
        b.face >= n
            || b.ranges.len() != n - 1
            || rec.rows.len() != n
            || rec.cols.len() != n
            || rec.rows.iter().any(|&r| r >= family.len())
            || rec.cols.iter().any(|&c| c >= n)
            || !ifam.minor_excludes_zero(b, &rec.rows, &rec.cols)
    });
    if let Some(i) = bad {
        return Err(Error::BadCertificate(format!("record {} does not re-verify", i + 1)));
    }
    let keys: HashSet<_> = cover.records.iter().map(|r| r.cover_box.key()).collect();
    for face in 0..n {
        if !covered(&CoverBox::face_root(n, face), &keys, 0) {
            return Err(Error::BadCertificate(format!("face {} is not fully covered", face + 1)));
        }
    }
    Ok(ReplayReport { records: cover.records.len(), faces: n })
}

fn covered(b: &CoverBox, keys: &HashSet<(usize, Vec<(u64, u64)>)>, depth: usize) -> bool {
    if keys.contains(&b.key()) {
        return true;
    }
    if depth >= 64 {
        return false;
    }
    let (l, r) = b.split();
    covered(&l, keys, depth + 1) && covered(&r, keys, depth + 1)
}

/// Line-oriented certificate text.
pub fn write_cover(cover: &CertifiedCover) -> String {
    let mut s = String::new();
    s.push_str("# prframes cover certificate v1\n");
    let _ = writeln!(s, "# ambient {} subspaces {}", cover.ambient_dim, cover.subspaces);
    for rec in &cover.records {
        let _ = write!(s, "{}", rec.cover_box.face + 1);
        for r in &rec.cover_box.ranges {
            let _ = write!(s, " {} {}", r.lo(), r.hi());
        }
        let rows: Vec<String> = rec.rows.iter().map(|r| (r + 1).to_string()).collect();
        let cols: Vec<String> = rec.cols.iter().map(|c| (c + 1).to_string()).collect();
        let _ = writeln!(s, " | {} | {}", rows.join(" "), cols.join(" "));
    }
    s
}

/// Parses [`write_cover`] output.
pub fn parse_cover(text: &str) -> Result<CertifiedCover> {
    let perr = |line: usize, message: String| Error::Parse { location: format!("line {line}"), message };
    let mut header: Option<(usize, usize)> = None;
    let mut records = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let words: Vec<&str> = c.split_whitespace().collect();
            if let ["ambient", n, "subspaces", m] = words.as_slice() {
                let n = n.parse().map_err(|_| perr(ln, "bad ambient dimension".into()))?;
                let m = m.parse().map_err(|_| perr(ln, "bad subspace count".into()))?;
                header = Some((n, m));
            }
            continue;
        }
        let (n, _) = header.ok_or_else(|| perr(ln, "record before '# ambient' header".into()))?;
        let parts: Vec<&str> = line.split('|').collect();
        let [head, rows, cols] = parts.as_slice() else {
            return Err(perr(ln, "expected 'face endpoints | rows | cols'".into()));
        };
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() != 1 + 2 * (n - 1) {
            return Err(perr(ln, format!("expected face and {} endpoints, got {} fields", 2 * (n - 1), head.len())));
        }
        let face: usize = head[0].parse().map_err(|_| perr(ln, "bad face index".into()))?;
        if face == 0 || face > n {
            return Err(perr(ln, format!("face index {face} out of range 1..={n}")));
        }
        let nums = head[1..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| perr(ln, format!("bad endpoint {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        let ranges = nums
            .chunks(2)
            .map(|c| Interval::new(c[0], c[1]).map_err(|e| perr(ln, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let idx = |s: &str| -> Result<Vec<usize>> {
            s.split_whitespace()
                .map(|t| match t.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(perr(ln, format!("bad index {t:?}"))),
                })
                .collect()
        };
        records.push(MinorRecord {
            cover_box: CoverBox { face: face - 1, ranges },
            rows: idx(rows)?,
            cols: idx(cols)?,
        });
    }
    let (ambient_dim, subspaces) = header.ok_or_else(|| perr(0, "missing '# ambient' header".into()))?;
    Ok(CertifiedCover { ambient_dim, subspaces, boxes_certified: records.len(), max_depth: 0, records })
}

/// Rational version of a box center, for exact spot checks.
pub fn center_signal(b: &CoverBox) -> Result<Signal> {
    let c = b.center().into_iter().map(from_f64).collect::<Result<Vec<_>>>()?;
    Signal::new(c)
}
