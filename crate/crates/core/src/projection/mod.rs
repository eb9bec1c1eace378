//! Phase retrieval by orthogonal projections.
//!
//! A family of subspaces `W_1, …, W_m` with projectors `P_i` recovers every
//! `x ∈ ℝⁿ` up to sign from `‖P_i x‖` iff `span{P_i x} = ℝⁿ` for every
//! nonzero `x`. Everything in this module is a way of testing that span
//! condition: exactly at chosen points, over the union of orthogonal bases,
//! numerically over the sphere, or (see [`crate::certify`]) for all
//! directions at once.

mod decide;
mod margin;

pub use decide::{decide, Certificate, DecideOptions, Decision, NecessaryTest, Tier, Verdict};
pub use margin::{
    margin, margin_of_projectors, margin_with, random_unit, sigma_at, stream_rng, MarginOptions, RobustnessMargin,
};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::frames::{complement_property_with_cap, Combinations, ComplementOutcome, ComplementViolation, VectorFamily};
use crate::linalg::exact::{bareiss_rank, clear_denominators, dot, integer_vector, nullspace_basis};
use crate::linalg::modular;
use crate::linalg::numeric::{orthonormal_rows, FMatrix};
use crate::linalg::{projector, rank_exact, same_row_space, RMatrix, Rational, Signal};

/// A subspace `W ⊂ ℝⁿ` stored as a stack of basis rows, with its exact
/// projector and numeric caches.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: RMatrix,
    proj: RMatrix,
    // proj scaled by the lcm of its denominators
    proj_int: Vec<Vec<BigInt>>,
    // proj_int reduced mod p, row-major
    proj_mod: Vec<u64>,
    proj_f64: FMatrix,
    ortho_basis: Vec<Vec<f64>>,
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.proj == other.proj
    }
}

impl Subspace {
    /// Requires independent rows and `1 ≤ dim W ≤ n − 1`.
    pub fn new(basis: RMatrix) -> Result<Self> {
        let n = basis.cols();
        let k = basis.rows();
        if k == 0 || k >= n {
            return Err(Error::DimensionMismatch(format!("subspace of dimension {k} in R^{n}; need 0 < dim < n")));
        }
        let proj = projector(&basis)?;
        let proj_int = proj.integer_rows_common();
        let proj_mod = proj_int.iter().flatten().map(modular::reduce).collect();
        let proj_f64 = FMatrix::from_rows(n, &proj.to_f64_rows())?;
        let ortho_basis = orthonormal_rows(&basis.to_f64_rows());
        Ok(Subspace { basis, proj, proj_int, proj_mod, proj_f64, ortho_basis })
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        Self::new(RMatrix::from_i64_rows(rows))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &RMatrix {
        &self.basis
    }

    pub fn projector(&self) -> &RMatrix {
        &self.proj
    }

    pub fn projector_f64(&self) -> &FMatrix {
        &self.proj_f64
    }

    pub fn ortho_basis(&self) -> &[Vec<f64>] {
        &self.ortho_basis
    }

    /// Rows spanning `W⊥`, canonical for the subspace.
    pub fn complement_basis(&self) -> RMatrix {
        nullspace_basis(&self.basis)
    }

    /// Mutually orthogonal rational rows spanning `W` (Gram-Schmidt on the
    /// reduced echelon basis, not normalised). Depends only on `W`.
    pub fn orthogonal_basis(&self) -> Vec<Vec<Rational>> {
        let (red, pivots) = self.basis.rref();
        let mut out: Vec<Vec<Rational>> = Vec::new();
        for r in 0..pivots.len() {
            let mut v = red.row(r).to_vec();
            for q in &out {
                let c = dot(&v, q) / dot(q, q);
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= &c * b;
                }
            }
            out.push(integer_vector(&v));
        }
        out
    }

    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.proj.mul_vec(x)
    }

    /// `P x` up to a positive scale, for integer `x`.
    fn apply_scaled(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.proj_int.iter().map(|row| row.iter().zip(x).fold(BigInt::zero(), |acc, (a, b)| acc + a * b)).collect()
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        self.proj_f64.mul_vec(x)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        crate::linalg::exact::row_space_contains(&self.basis, &other.basis)
    }

    pub fn same_as(&self, other: &Subspace) -> bool {
        same_row_space(&self.basis, &other.basis)
    }

    /// `Q W` for an `n × n` matrix `Q`.
    pub fn transform(&self, q: &RMatrix) -> Result<Subspace> {
        Subspace::new(self.basis.mul(&q.transpose())?)
    }

    /// `span(W ∪ {z})`.
    pub fn extended_by(&self, z: &[Rational]) -> Result<Subspace> {
        let mut b = self.basis.clone();
        b.push_row(z)?;
        if rank_exact(&b) != b.rows() {
            return Err(Error::SingularGram);
        }
        Subspace::new(b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionFamily {
    ambient_dim: usize,
    subspaces: Vec<Subspace>,
}

impl ProjectionFamily {
    pub fn new(ambient_dim: usize, subspaces: Vec<Subspace>) -> Result<Self> {
        if subspaces.is_empty() {
            return Err(Error::DimensionMismatch("projection family needs at least one subspace".into()));
        }
        if let Some(i) = subspaces.iter().position(|s| s.ambient_dim() != ambient_dim) {
            return Err(Error::DimensionMismatch(format!(
                "subspace {i} lives in R^{}, family in R^{ambient_dim}",
                subspaces[i].ambient_dim()
            )));
        }
        Ok(ProjectionFamily { ambient_dim, subspaces })
    }

    pub fn from_bases(ambient_dim: usize, bases: Vec<RMatrix>) -> Result<Self> {
        let subspaces = bases.into_iter().map(Subspace::new).collect::<Result<Vec<_>>>()?;
        Self::new(ambient_dim, subspaces)
    }

    /// One line per vector.
    pub fn lines(family: &VectorFamily) -> Result<Self> {
        let n = family.ambient_dim();
        let bases =
            family.vectors().iter().map(|v| RMatrix::from_rows(n, vec![v.clone()])).collect::<Result<Vec<_>>>()?;
        Self::from_bases(n, bases)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(Subspace::dim).collect()
    }

    pub fn transform(&self, q: &RMatrix) -> Result<Self> {
        let s = self.subspaces.iter().map(|w| w.transform(q)).collect::<Result<Vec<_>>>()?;
        Self::new(self.ambient_dim, s)
    }

    pub fn with_subspace(&self, index: usize, w: Subspace) -> Result<Self> {
        let mut s = self.subspaces.clone();
        s[index] = w;
        Self::new(self.ambient_dim, s)
    }

    /// Family restricted to the given indices, in order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.ambient_dim, idx.iter().map(|&i| self.subspaces[i].clone()).collect())
    }

    pub fn is_all_hyperplanes(&self) -> bool {
        self.subspaces.iter().all(|s| s.dim() + 1 == self.ambient_dim)
    }

    fn check_signal(&self, x: &Signal) -> Result<()> {
        if x.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch(format!("signal of length {} in R^{}", x.dim(), self.ambient_dim)));
        }
        Ok(())
    }

    /// Rank of `{P_i x : i ∈ idx}` for integer `x`.
    /// True when `{P_i x}` spans ℝⁿ modulo the prime, which implies it
    /// spans over ℚ. `x` is given by its residues; any unit multiple works.
    pub(crate) fn full_span_mod(&self, xm: &[u64], idx: impl Iterator<Item = usize>) -> bool {
        let n = self.ambient_dim;
        let mut stack = Vec::new();
        for i in idx {
            let p = &self.subspaces[i].proj_mod;
            for r in 0..n {
                stack.push((0..n).fold(0, |acc, j| modular::add(acc, modular::mul(p[r * n + j], xm[j]))));
            }
        }
        let m = stack.len() / n;
        m >= n && modular::rank(stack, m, n) == n
    }

    fn span_rank_int(&self, x: &[BigInt], idx: impl Iterator<Item = usize> + Clone) -> usize {
        let xm: Vec<u64> = x.iter().map(modular::reduce).collect();
        if self.full_span_mod(&xm, idx.clone()) {
            return self.ambient_dim;
        }
        let rows: Vec<Vec<BigInt>> = idx.map(|i| self.subspaces[i].apply_scaled(x)).collect();
        if rows.is_empty() {
            return 0;
        }
        bareiss_rank(rows, self.ambient_dim)
    }

    /// `dim span{P_i x : i ∈ idx}`, exact.
    pub fn span_dim_over(&self, x: &Signal, idx: &[usize]) -> Result<usize> {
        self.check_signal(x)?;
        let xi = clear_denominators(x.coords());
        Ok(self.span_rank_int(&xi, idx.iter().copied()))
    }
}

/// The `m × n` matrix whose row `i` is `P_i x`.
pub fn stack_matrix(family: &ProjectionFamily, x: &Signal) -> Result<RMatrix> {
    family.check_signal(x)?;
    let rows = family.subspaces.iter().map(|w| w.apply(x.coords())).collect();
    RMatrix::from_rows(family.ambient_dim, rows)
}

/// Numeric stack for a (not necessarily unit) double vector.
pub fn stack_matrix_f64(family: &ProjectionFamily, x: &[f64]) -> FMatrix {
    let n = family.ambient_dim;
    let mut data = Vec::with_capacity(family.len() * n);
    for w in &family.subspaces {
        data.extend(w.apply_f64(x));
    }
    FMatrix::new(family.len(), n, data).expect("finite projector and signal")
}

/// A point `x` at which `{P_i x}` fails to span ℝⁿ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanDeficiencyWitness {
    pub x: Signal,
    pub span_dim: usize,
    /// The subspaces whose intersection produced `x`, when it came from one.
    pub deficient_indices: Option<Vec<usize>>,
}

impl SpanDeficiencyWitness {
    /// Exact recomputation of the span dimension.
    pub fn verify(&self, family: &ProjectionFamily) -> bool {
        match edidin_decide_exact_at(family, &self.x) {
            Ok(EdidinOutcome::Deficient(w)) => w.span_dim == self.span_dim,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdidinOutcome {
    FullSpan,
    Deficient(SpanDeficiencyWitness),
}

impl EdidinOutcome {
    pub fn witness(self) -> Option<SpanDeficiencyWitness> {
        match self {
            EdidinOutcome::Deficient(w) => Some(w),
            EdidinOutcome::FullSpan => None,
        }
    }
}

/// Exact span test at one rational point.
pub fn edidin_decide_exact_at(family: &ProjectionFamily, x: &Signal) -> Result<EdidinOutcome> {
    family.check_signal(x)?;
    let xi = clear_denominators(x.coords());
    let r = family.span_rank_int(&xi, 0..family.len());
    Ok(if r < family.ambient_dim {
        EdidinOutcome::Deficient(SpanDeficiencyWitness { x: x.clone(), span_dim: r, deficient_indices: None })
    } else {
        EdidinOutcome::FullSpan
    })
}

/// Default number of subspace subsets examined by [`hyperplane_falsify`].
pub const DEFAULT_FALSIFY_SUBSETS: usize = 5000;

/// Intersection `⋂_{i∈idx} W_i` as basis rows (nullspace of the stacked
/// complement bases).
pub fn intersection(family: &ProjectionFamily, idx: &[usize]) -> RMatrix {
    let n = family.ambient_dim;
    let mut stacked = RMatrix::zeros(0, n);
    for &i in idx {
        stacked = stacked.vstack(&family.subspaces[i].complement_basis()).expect("same ambient dim");
    }
    nullspace_basis(&stacked)
}

/// Looks for a deficient point inside intersections of subspaces, largest
/// subsets first (sizes `min(m, n−1)` down to 1). If `n − 1` subspaces share
/// a line through `x`, each of them returns `P_i x = x`, so at most
/// `m − n + 2` distinct directions remain; with `m ≤ 2n − 3` hyperplanes that
/// is at most `n − 1` and the span is deficient.
pub fn hyperplane_falsify(family: &ProjectionFamily) -> Option<SpanDeficiencyWitness> {
    hyperplane_falsify_capped(family, DEFAULT_FALSIFY_SUBSETS)
}

pub fn hyperplane_falsify_capped(family: &ProjectionFamily, max_subsets: usize) -> Option<SpanDeficiencyWitness> {
    let n = family.ambient_dim;
    let m = family.len();
    let complements: Vec<RMatrix> = family.subspaces.iter().map(Subspace::complement_basis).collect();
    let mut tested = 0;
    for k in (1..=m.min(n - 1)).rev() {
        for s in Combinations::new(m, k) {
            tested += 1;
            if tested > max_subsets {
                return None;
            }
            let mut stacked = RMatrix::zeros(0, n);
            for &i in &s {
                stacked = stacked.vstack(&complements[i]).expect("same ambient dim");
            }
            let inter = nullspace_basis(&stacked);
            for row in inter.row_iter() {
                let xi = clear_denominators(row);
                let r = family.span_rank_int(&xi, 0..m);
                if r < n {
                    let x = Signal::new(xi.into_iter().map(Rational::from_integer).collect())
                        .expect("nullspace rows are nonzero");
                    return Some(SpanDeficiencyWitness { x, span_dim: r, deficient_indices: Some(s) });
                }
            }
        }
    }
    None
}

/// All subspace bases as one vector family, after orthogonalising each basis
/// exactly. Also returns the owning subspace of every vector.
pub fn basis_union(family: &ProjectionFamily) -> (VectorFamily, Vec<usize>) {
    let mut vectors = Vec::new();
    let mut owner = Vec::new();
    for (i, w) in family.subspaces.iter().enumerate() {
        for v in w.orthogonal_basis() {
            vectors.push(v);
            owner.push(i);
        }
    }
    (VectorFamily::new(family.ambient_dim, vectors).expect("basis rows are nonzero"), owner)
}

/// Complement property of the union of orthogonal bases. A violation proves
/// the family fails; a pass is only a necessary condition.
pub fn basis_union_test(family: &ProjectionFamily) -> Result<ComplementOutcome> {
    basis_union_test_with_cap(family, crate::frames::DEFAULT_SUBSET_CAP)
}

pub fn basis_union_test_with_cap(family: &ProjectionFamily, cap: usize) -> Result<ComplementOutcome> {
    let (union, _) = basis_union(family);
    complement_property_with_cap(&union, cap)
}

/// Turns a violation of the orthogonal basis union into a point `u` with
/// `span{P_i u} ⊥ v`: `u` is orthogonal to the basis vectors outside `I`
/// and `v` to those inside, so every term of `⟨P_i u, v⟩` vanishes.
pub fn witness_from_union_violation(
    family: &ProjectionFamily,
    violation: &ComplementViolation,
) -> Result<SpanDeficiencyWitness> {
    let (union, _) = basis_union(family);
    let pair = crate::frames::ambiguous_pair(&union, violation)?;
    // ambiguous_pair returns x = u + v, y = u − v
    let u: Vec<Rational> =
        pair.x.coords().iter().zip(pair.y.coords()).map(|(a, b)| (a + b) / Rational::from_integer(2.into())).collect();
    let x = Signal::new(integer_vector(&u))?;
    match edidin_decide_exact_at(family, &x)? {
        EdidinOutcome::Deficient(w) => Ok(w),
        EdidinOutcome::FullSpan => Err(Error::InvalidViolation),
    }
}

/// Numerator and denominator pairs for a random rational point: numerators
/// in `[-height, height]`, denominators in `[1, height]`, redrawn while all
/// numerators are zero.
pub fn random_rational_parts<R: Rng + ?Sized>(rng: &mut R, n: usize, height: i64) -> Vec<(i64, i64)> {
    loop {
        let parts: Vec<(i64, i64)> =
            (0..n).map(|_| (rng.random_range(-height..=height), rng.random_range(1..=height))).collect();
        if parts.iter().any(|&(p, _)| p != 0) {
            return parts;
        }
    }
}

pub fn signal_from_parts(parts: &[(i64, i64)]) -> Result<Signal> {
    Signal::new(parts.iter().map(|&(p, q)| Rational::new(p.into(), q.into())).collect())
}

/// Residues of a point given as fractions.
pub fn residues_of_parts(parts: &[(i64, i64)]) -> Vec<u64> {
    parts.iter().map(|&(p, q)| modular::mul(modular::from_i64(p), modular::inv(modular::from_i64(q)))).collect()
}

/// Random rational point, see [`random_rational_parts`].
pub fn random_rational_signal<R: Rng + ?Sized>(rng: &mut R, n: usize, height: i64) -> Signal {
    signal_from_parts(&random_rational_parts(rng, n, height)).expect("some numerator is nonzero")
}

/// Signed permutation matrix `Q e_j = sign_j e_{perm_j}`.
pub fn signed_permutation(perm: &[usize], signs: &[i64]) -> RMatrix {
    let n = perm.len();
    let mut q = RMatrix::zeros(n, n);
    for (j, (&p, &s)) in perm.iter().zip(signs).enumerate() {
        q[(p, j)] = crate::linalg::exact::rat(s);
    }
    q
}
