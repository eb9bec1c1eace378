//! Exact rational matrices.
//!
//! Every decision that ends up in a certificate goes through this module, so
//! nothing here takes a tolerance.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Nearest double to `q`.
pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact binary expansion of a finite double.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or(Error::NonFinite)
}

/// Parses `"p/q"`, `"p"`, or a decimal literal. Decimals go through the
/// nearest double and are then expanded exactly.
pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let q: BigInt = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Rational::from_integer(n));
    }
    let x: f64 = s.parse().map_err(|_| format!("not a rational or decimal: {s:?}"))?;
    from_f64(x).map_err(|_| format!("non-finite value {s:?}"))
}

pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Scales a rational vector to coprime integers, keeping direction and sign.
pub fn clear_denominators(v: &[Rational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        ints
    } else {
        ints.into_iter().map(|x| x / &g).collect()
    }
}

pub fn integer_vector(v: &[Rational]) -> Vec<Rational> {
    clear_denominators(v).into_iter().map(Rational::from_integer).collect()
}

/// Dense row-major matrix of exact rationals. `num_rational` keeps every
/// entry reduced with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    /// Builds a matrix from rows. `cols` is needed for the empty case.
    pub fn from_rows(cols: usize, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {cols}", row.len())));
            }
            data.extend(row.iter().cloned());
        }
        Ok(RMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect();
        Self::from_rows(cols, rows).expect("ragged integer rows")
    }

    pub fn diag(entries: &[Rational]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[Rational]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        self.row_iter().map(|r| r.to_vec()).collect()
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> RMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend(self.row(i).iter().cloned());
        }
        RMatrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &RMatrix) -> Result<RMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!("vstack of {} and {} columns", self.cols, other.cols)));
        }
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(RMatrix { rows: self.rows + other.rows, cols: self.cols, data })
    }

    pub fn push_row(&mut self, row: &[Rational]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "pushed row has {} entries, expected {}",
                row.len(),
                self.cols
            )));
        }
        self.data.extend(row.iter().cloned());
        self.rows += 1;
        Ok(())
    }

    pub fn transpose(&self) -> RMatrix {
        let mut t = RMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RMatrix) -> Result<RMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    pub fn scale(&self, c: &Rational) -> RMatrix {
        RMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(|r| r.iter().map(to_f64).collect()).collect()
    }

    /// Rows scaled to integer vectors (row spans are unchanged).
    pub fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        self.row_iter().map(clear_denominators).collect()
    }

    /// Rows scaled by one common positive integer so all entries are
    /// integral.
    pub fn integer_rows_common(&self) -> Vec<Vec<BigInt>> {
        let lcm = self.data.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        self.row_iter().map(|r| r.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()).collect()
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (RMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else {
                continue;
            };
            a.swap_rows(r, p);
            let inv = a[(r, c)].recip();
            for j in c..a.cols {
                let v = &a[(r, j)] * &inv;
                a[(r, j)] = v;
            }
            for i in 0..a.rows {
                if i == r || a[(i, c)].is_zero() {
                    continue;
                }
                let f = a[(i, c)].clone();
                for j in c..a.cols {
                    let d = &f * &a[(r, j)];
                    a[(i, j)] -= d;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Exact inverse by Gauss-Jordan; `None` when singular.
    pub fn inverse(&self) -> Option<RMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = RMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = RMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = red[(i, n + j)].clone();
            }
        }
        Some(inv)
    }
}

impl std::ops::Index<(usize, usize)> for RMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RMatrix {}x{} [", self.rows, self.cols)?;
        for (i, r) in self.row_iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cells: Vec<String> = r.iter().map(format_rational).collect();
            write!(f, "{}", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Rank of a list of integer rows by Bareiss fraction-free elimination.
/// Every intermediate entry is a minor of the input, so the divisions are
/// exact. A rank computed mod a large prime is tried first; when it is
/// already maximal it is the exact rank.
pub fn bareiss_rank(mut a: Vec<Vec<BigInt>>, cols: usize) -> usize {
    let rows = a.len();
    let full = rows.min(cols);
    if full == 0 {
        return 0;
    }
    let reduced: Vec<u64> = a.iter().flatten().map(super::modular::reduce).collect();
    if super::modular::rank(reduced, rows, cols) == full {
        return full;
    }
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let (top, rest) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        for row in rest.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..cols {
                let v = &pivot_row[c] * &row[j] - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Determinant of a square integer matrix, by Bareiss elimination.
pub fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut prev = BigInt::one();
    let mut sign = BigInt::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return BigInt::zero();
        };
        if p != c {
            a.swap(c, p);
            sign = -sign;
        }
        let (top, rest) = a.split_at_mut(c + 1);
        let pivot_row = &top[c];
        for row in rest.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..n {
                let v = &pivot_row[c] * &row[j] - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
        }
        prev = a[c][c].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &a[n - 1][n - 1]
}

/// Integer normal of `n − 1` integer rows in ℤⁿ (signed maximal minors);
/// `None` when the rows are dependent.
pub fn integer_normal(rows: &[Vec<BigInt>], n: usize) -> Option<Vec<BigInt>> {
    debug_assert_eq!(rows.len() + 1, n);
    let w: Vec<BigInt> = (0..n)
        .map(|j| {
            let minor: Vec<Vec<BigInt>> = rows
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, v)| v.clone()).collect())
                .collect();
            let d = bareiss_det(minor);
            if (j + n - 1).is_multiple_of(2) {
                d
            } else {
                -d
            }
        })
        .collect();
    w.iter().any(|v| !v.is_zero()).then_some(w)
}

/// Dimension of the row space.
pub fn rank_exact(m: &RMatrix) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    bareiss_rank(m.integer_rows(), m.cols())
}

/// Rank of a set of rational vectors of common length `cols`.
pub fn rank_of_vectors<'a, I>(vectors: I, cols: usize) -> usize
where
    I: IntoIterator<Item = &'a [Rational]>,
{
    let rows: Vec<Vec<BigInt>> = vectors.into_iter().map(clear_denominators).collect();
    if rows.is_empty() {
        return 0;
    }
    bareiss_rank(rows, cols)
}

/// Basis (as rows) of `{v : M v = 0}`. One row per free column of the
/// reduced echelon form; row count is `cols - rank`.
pub fn nullspace_basis(m: &RMatrix) -> RMatrix {
    let (red, pivots) = m.rref();
    let cols = m.cols();
    let mut basis = RMatrix::zeros(0, cols);
    let mut is_pivot = vec![false; cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rational::zero(); cols];
        v[free] = Rational::one();
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -red[(r, free)].clone();
        }
        basis.push_row(&v).expect("nullspace row length");
    }
    basis
}

/// Orthogonal projector onto the row space of `basis`:
/// `P = Bᵀ (B Bᵀ)⁻¹ B`.
pub fn projector(basis: &RMatrix) -> Result<RMatrix> {
    let bt = basis.transpose();
    let gram = basis.mul(&bt)?;
    let inv = gram.inverse().ok_or(Error::SingularGram)?;
    bt.mul(&inv)?.mul(basis)
}

/// True if every row of `a` lies in the row space of `b`.
pub fn row_space_contains(b: &RMatrix, a: &RMatrix) -> bool {
    let rb = rank_exact(b);
    let stacked = b.vstack(a).expect("column mismatch");
    rank_exact(&stacked) == rb
}

/// Equality of row spaces.
pub fn same_row_space(a: &RMatrix, b: &RMatrix) -> bool {
    rank_exact(a) == rank_exact(b) && row_space_contains(a, b)
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}
