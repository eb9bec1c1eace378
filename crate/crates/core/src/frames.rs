//! Vector phase retrieval: the complement property, ambiguous pairs and
//! full-spark frames.
//!
//! A family `{φ_i}` in ℝⁿ recovers every signal up to sign from the
//! magnitudes `|⟨x, φ_i⟩|` exactly when, for every split of the indices into
//! `I` and `Iᶜ`, one of the two halves spans ℝⁿ. A split where neither half
//! spans is turned into an explicit pair of signals with equal measurements.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::exact::{
    bareiss_rank, clear_denominators, dot, integer_normal, integer_vector, nullspace_basis, rank_of_vectors,
};
use crate::linalg::{RMatrix, Rational, Signal};

/// Default bound on `m` for exhaustive subset enumeration.
pub const DEFAULT_SUBSET_CAP: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFamily {
    ambient_dim: usize,
    vectors: Vec<Vec<Rational>>,
}

impl VectorFamily {
    pub fn new(ambient_dim: usize, vectors: Vec<Vec<Rational>>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::DimensionMismatch("ambient dimension must be positive".into()));
        }
        if vectors.is_empty() {
            return Err(Error::DimensionMismatch("family needs at least one vector".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch(format!(
                    "vector {i} has length {}, ambient dimension is {ambient_dim}",
                    v.len()
                )));
            }
            if v.iter().all(Zero::is_zero) {
                return Err(Error::DimensionMismatch(format!("vector {i} is zero")));
            }
        }
        Ok(VectorFamily { ambient_dim, vectors })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.len());
        Self::new(n, rows.iter().map(|r| r.iter().map(|&x| crate::linalg::exact::rat(x)).collect()).collect())
    }

    /// `e₁, …, e_n`.
    pub fn standard_basis(n: usize) -> Self {
        let rows = RMatrix::identity(n).to_rows();
        Self::new(n, rows).expect("identity rows are nonzero")
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<Rational>] {
        &self.vectors
    }

    pub fn as_matrix(&self) -> RMatrix {
        RMatrix::from_rows(self.ambient_dim, self.vectors.clone()).expect("validated family")
    }

    /// Applies `x ↦ Q x` to every vector.
    pub fn transform(&self, q: &RMatrix) -> Result<Self> {
        if q.rows() != self.ambient_dim || q.cols() != self.ambient_dim {
            return Err(Error::DimensionMismatch("transform must be n x n".into()));
        }
        Self::new(self.ambient_dim, self.vectors.iter().map(|v| q.mul_vec(v)).collect())
    }

    /// Family with extra vectors appended.
    pub fn extended(&self, extra: &[Vec<Rational>]) -> Result<Self> {
        let mut v = self.vectors.clone();
        v.extend(extra.iter().cloned());
        Self::new(self.ambient_dim, v)
    }

    fn rank_of(&self, idx: &[usize]) -> usize {
        rank_of_vectors(idx.iter().map(|&i| self.vectors[i].as_slice()), self.ambient_dim)
    }
}

/// A split `I ∪ Iᶜ = [m]` where neither half spans. Indices are 0-based;
/// `subset` always contains index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementViolation {
    pub subset: Vec<usize>,
    pub rank_i: usize,
    pub rank_ic: usize,
}

impl ComplementViolation {
    pub fn complement(&self, m: usize) -> Vec<usize> {
        (0..m).filter(|i| !self.subset.contains(i)).collect()
    }

    /// Recomputes both ranks exactly.
    pub fn holds_for(&self, family: &VectorFamily) -> bool {
        let m = family.len();
        if self.subset.iter().any(|&i| i >= m) {
            return false;
        }
        let n = family.ambient_dim();
        let ri = family.rank_of(&self.subset);
        let ric = family.rank_of(&self.complement(m));
        ri == self.rank_i && ric == self.rank_ic && ri < n && ric < n
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComplementOutcome {
    Pass,
    Violation(ComplementViolation),
}

impl ComplementOutcome {
    pub fn passes(&self) -> bool {
        matches!(self, ComplementOutcome::Pass)
    }

    pub fn violation(&self) -> Option<&ComplementViolation> {
        match self {
            ComplementOutcome::Violation(v) => Some(v),
            ComplementOutcome::Pass => None,
        }
    }
}

/// [`complement_property_with_cap`] with the default cap of 24 vectors.
pub fn complement_property(family: &VectorFamily) -> Result<ComplementOutcome> {
    complement_property_with_cap(family, DEFAULT_SUBSET_CAP)
}

/// Decides the complement property.
///
/// Splits are visited by the size of their smaller half, `0..=m/2`, each
/// split exactly once, and the reported `I` is the half holding index 0. The
/// first violating split in that order is returned, so certificates are
/// reproducible. A flat-based pre-check ([`has_complement_violation`])
/// answers `Pass` without walking the subsets.
pub fn complement_property_with_cap(family: &VectorFamily, cap: usize) -> Result<ComplementOutcome> {
    let m = family.len();
    if m > cap {
        return Err(Error::TooManySubsets { m, cap });
    }
    if !has_complement_violation(family) {
        return Ok(ComplementOutcome::Pass);
    }
    Ok(first_violation(family).map_or(ComplementOutcome::Pass, ComplementOutcome::Violation))
}

fn first_violation(family: &VectorFamily) -> Option<ComplementViolation> {
    let m = family.len();
    let n = family.ambient_dim();
    let ints: Vec<Vec<BigInt>> = family.vectors.iter().map(|v| clear_denominators(v)).collect();
    let rank = |idx: &[usize]| -> usize {
        if idx.is_empty() {
            return 0;
        }
        bareiss_rank(idx.iter().map(|&i| ints[i].clone()).collect(), n)
    };
    for s in 0..=m / 2 {
        for small in Combinations::new(m, s) {
            if 2 * s == m && small.first() != Some(&0) {
                continue;
            }
            let large: Vec<usize> = (0..m).filter(|i| !small.contains(i)).collect();
            let r_small = rank(&small);
            if r_small >= n {
                continue;
            }
            let r_large = rank(&large);
            if r_large >= n {
                continue;
            }
            let (subset, rank_i, rank_ic) =
                if small.first() == Some(&0) { (small, r_small, r_large) } else { (large, r_large, r_small) };
            return Some(ComplementViolation { subset, rank_i, rank_ic });
        }
    }
    None
}

/// Decides whether some split violates the complement property, without
/// enumerating subsets.
///
/// Any violating `I` can be grown, keeping `rank I < n`, until it is the set
/// of all family vectors inside a hyperplane spanned by `n − 1` of them (or
/// until `Iᶜ` is empty, which means the whole family fails to span). So it is
/// enough to test, for each independent `(n−1)`-subset with normal `w`,
/// whether the vectors off `w⊥` fail to span.
pub fn has_complement_violation(family: &VectorFamily) -> bool {
    let n = family.ambient_dim();
    let m = family.len();
    let ints: Vec<Vec<BigInt>> = family.vectors.iter().map(|v| clear_denominators(v)).collect();
    if bareiss_rank(ints.clone(), n) < n {
        return true;
    }
    let combos: Vec<Vec<usize>> = Combinations::new(m, n - 1).collect();
    combos.par_iter().any(|s| {
        let rows: Vec<Vec<BigInt>> = s.iter().map(|&i| ints[i].clone()).collect();
        let Some(w) = integer_normal(&rows, n) else {
            return false;
        };
        let off: Vec<Vec<BigInt>> = ints
            .iter()
            .filter(|v| !v.iter().zip(&w).fold(BigInt::zero(), |acc, (a, b)| acc + a * b).is_zero())
            .cloned()
            .collect();
        off.is_empty() || bareiss_rank(off, n) < n
    })
}

/// True iff every `n` of the vectors are linearly independent.
pub fn is_full_spark(family: &VectorFamily) -> Result<bool> {
    let n = family.ambient_dim();
    let m = family.len();
    if m < n {
        return Err(Error::Precondition(format!("full spark needs m >= n, got m = {m}, n = {n}")));
    }
    let ints: Vec<Vec<BigInt>> = family.vectors.iter().map(|v| clear_denominators(v)).collect();
    let combos: Vec<Vec<usize>> = Combinations::new(m, n).collect();
    Ok(combos.par_iter().all(|s| bareiss_rank(s.iter().map(|&i| ints[i].clone()).collect(), n) == n))
}

/// Two signals, not equal up to sign, with identical measurements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbiguousPair {
    pub x: Signal,
    pub y: Signal,
}

impl AmbiguousPair {
    /// Exact check of both defining properties against `family`.
    pub fn verify(&self, family: &VectorFamily) -> bool {
        if self.x == self.y || self.x == self.y.neg() {
            return false;
        }
        match (measurements(family, &self.x), measurements(family, &self.y)) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }
}

/// Builds `x = u + v`, `y = u − v` with `u ⊥ span{φ_i : i ∈ Iᶜ}` and
/// `v ⊥ span{φ_i : i ∈ I}`. On `I` both signals measure `⟨u, φ_i⟩`; on `Iᶜ`
/// they measure `±⟨v, φ_i⟩`.
pub fn ambiguous_pair(family: &VectorFamily, violation: &ComplementViolation) -> Result<AmbiguousPair> {
    if !violation.holds_for(family) {
        return Err(Error::InvalidViolation);
    }
    let n = family.ambient_dim();
    let m = family.len();
    let orth = |idx: &[usize]| -> Result<Vec<Rational>> {
        let rows = idx.iter().map(|&i| family.vectors[i].clone()).collect();
        let basis = nullspace_basis(&RMatrix::from_rows(n, rows)?);
        if basis.rows() == 0 {
            return Err(Error::InvalidViolation);
        }
        Ok(integer_vector(basis.row(0)))
    };
    let u = orth(&violation.complement(m))?;
    let v = orth(&violation.subset)?;
    let x = u.iter().zip(&v).map(|(a, b)| a + b).collect();
    let y = u.iter().zip(&v).map(|(a, b)| a - b).collect();
    Ok(AmbiguousPair { x: Signal::new(x)?, y: Signal::new(y)? })
}

/// `(|⟨x, φ_i⟩|)_i`, exact.
pub fn measurements(family: &VectorFamily, x: &Signal) -> Result<Vec<Rational>> {
    if x.dim() != family.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal of length {} for ambient dimension {}",
            x.dim(),
            family.ambient_dim()
        )));
    }
    Ok(family.vectors.iter().map(|phi| dot(phi, x.coords()).abs()).collect())
}

/// Vectors `(1, t, t², …, t^{n−1})` for each node `t`. Distinct nodes give a
/// full-spark family (every `n × n` block is a nonzero Vandermonde
/// determinant).
pub fn vandermonde_frame(n: usize, nodes: &[Rational]) -> Result<VectorFamily> {
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].contains(a) {
            return Err(Error::DuplicateNodes);
        }
    }
    let vectors = nodes
        .iter()
        .map(|t| {
            let mut row = Vec::with_capacity(n);
            let mut p = Rational::from_integer(1.into());
            for _ in 0..n {
                row.push(p.clone());
                p *= t;
            }
            row
        })
        .collect();
    VectorFamily::new(n, vectors)
}

/// Nodes `0, 1, …, m−1`.
pub fn integer_nodes(m: usize) -> Vec<Rational> {
    (0..m as i64).map(crate::linalg::exact::rat).collect()
}

/// Nodes `-⌊(m−1)/2⌋, …` centred on zero. The resulting Vandermonde lines
/// are far better conditioned than with nodes `0..m`.
pub fn centered_nodes(m: usize) -> Vec<Rational> {
    let start = -((m as i64 - 1) / 2);
    (0..m as i64).map(|k| crate::linalg::exact::rat(start + k)).collect()
}

/// Lexicographic `k`-subsets of `0..n`.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations { n, current: (k <= n).then(|| (0..k).collect()) }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::exact::{rat, ratio};

    #[test]
    fn centered_nodes_straddle_zero() {
        assert_eq!(centered_nodes(5), [-2, -1, 0, 1, 2].map(rat));
        assert_eq!(centered_nodes(4), [-1, 0, 1, 2].map(rat));
        assert_eq!(centered_nodes(1), [rat(0)]);
    }

    /// Independent oracle: every subset, both ranks, no shortcuts.
    fn brute_force_passes(f: &VectorFamily) -> bool {
        let m = f.len();
        let n = f.ambient_dim();
        (0u32..1 << m).all(|mask| {
            let i: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).collect();
            let ic: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 0).collect();
            f.rank_of(&i) == n || f.rank_of(&ic) == n
        })
    }

    #[test]
    fn combinations_count_and_order() {
        let c: Vec<Vec<usize>> = Combinations::new(4, 2).collect();
        assert_eq!(c, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn standard_basis_violates_at_first_index() {
        for n in 2..6 {
            let f = VectorFamily::standard_basis(n);
            let out = complement_property(&f).unwrap();
            let v = out.violation().expect("standard basis fails");
            assert_eq!(v.subset, vec![0]);
            assert_eq!((v.rank_i, v.rank_ic), (1, n - 1));
        }
    }

    #[test]
    fn non_spanning_family_reports_whole_set() {
        let f = VectorFamily::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0]]).unwrap();
        let v = complement_property(&f).unwrap().violation().unwrap().clone();
        assert_eq!(v.subset, vec![0, 1, 2]);
        let pair = ambiguous_pair(&f, &v).unwrap();
        assert!(pair.verify(&f));
    }

    #[test]
    fn violation_on_large_side_is_found() {
        // {φ2} versus {φ1, φ3}: the small half excludes index 0
        let f = VectorFamily::from_i64(&[&[1, 0], &[0, 1], &[2, 0]]).unwrap();
        let v = complement_property(&f).unwrap().violation().unwrap().clone();
        assert_eq!(v.subset, vec![0, 2]);
        assert!(!brute_force_passes(&f));
    }

    #[test]
    fn vandermonde_n3_passes_exhaustively() {
        let f = vandermonde_frame(3, &integer_nodes(5)).unwrap();
        assert!(brute_force_passes(&f));
        assert_eq!(complement_property(&f).unwrap(), ComplementOutcome::Pass);
    }

    #[test]
    fn too_many_subsets() {
        let f = vandermonde_frame(2, &integer_nodes(5)).unwrap();
        assert_eq!(complement_property_with_cap(&f, 4), Err(Error::TooManySubsets { m: 5, cap: 4 }));
    }

    #[test]
    fn full_spark_examples() {
        let f = VectorFamily::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 1]]).unwrap();
        assert!(is_full_spark(&f).unwrap());
        assert!(is_full_spark(&VectorFamily::standard_basis(3)).unwrap());
        let g = VectorFamily::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0], &[0, 0, 1]]).unwrap();
        assert!(!is_full_spark(&g).unwrap());
        assert!(is_full_spark(&VectorFamily::from_i64(&[&[1, 0]]).unwrap()).is_err());
    }

    #[test]
    fn ambiguous_pair_in_plane() {
        let f = VectorFamily::standard_basis(2);
        let v = ComplementViolation { subset: vec![0], rank_i: 1, rank_ic: 1 };
        let p = ambiguous_pair(&f, &v).unwrap();
        assert_eq!(p.x, Signal::from_i64(&[1, 1]).unwrap());
        assert_eq!(p.y, Signal::from_i64(&[1, -1]).unwrap());
        assert!(p.verify(&f));
    }

    #[test]
    fn ambiguous_pair_in_r3() {
        let f = VectorFamily::standard_basis(3);
        let v = complement_property(&f).unwrap().violation().unwrap().clone();
        let p = ambiguous_pair(&f, &v).unwrap();
        // x = e₁ + v, y = e₁ − v with v in span{e₂, e₃}
        assert_eq!(p.x.coords()[0], rat(1));
        assert_eq!(p.y.coords()[0], rat(1));
        assert_eq!(p.x.coords()[1], -p.y.coords()[1].clone());
        assert_eq!(p.x.coords()[2], -p.y.coords()[2].clone());
        assert_eq!(measurements(&f, &p.x).unwrap(), measurements(&f, &p.y).unwrap());
        assert!(p.verify(&f));
    }

    #[test]
    fn ambiguous_pair_rejects_bogus_violation() {
        let f = vandermonde_frame(2, &integer_nodes(3)).unwrap();
        let v = ComplementViolation { subset: vec![0], rank_i: 1, rank_ic: 1 };
        assert_eq!(ambiguous_pair(&f, &v), Err(Error::InvalidViolation));
    }

    #[test]
    fn measurement_examples() {
        let f = VectorFamily::standard_basis(3);
        let e1 = Signal::from_i64(&[1, 0, 0]).unwrap();
        assert_eq!(measurements(&f, &e1).unwrap(), vec![rat(1), rat(0), rat(0)]);
        let x = Signal::new(vec![ratio(1, 3), rat(-2), rat(5)]).unwrap();
        assert_eq!(measurements(&f, &x).unwrap(), measurements(&f, &x.neg()).unwrap());
        let g = VectorFamily::from_i64(&[&[1, 0], &[1, 1]]).unwrap();
        let x = Signal::from_i64(&[1, 2]).unwrap();
        assert_eq!(measurements(&g, &x).unwrap(), vec![rat(1), rat(3)]);
        assert!(Signal::from_i64(&[0, 0]).is_err());
    }

    #[test]
    fn vandermonde_examples() {
        let f = vandermonde_frame(2, &integer_nodes(3)).unwrap();
        assert_eq!(f, VectorFamily::from_i64(&[&[1, 0], &[1, 1], &[1, 2]]).unwrap());
        assert!(is_full_spark(&f).unwrap());
        let dup = [rat(1), rat(1), rat(2)];
        assert_eq!(vandermonde_frame(3, &dup), Err(Error::DuplicateNodes));
    }
}
