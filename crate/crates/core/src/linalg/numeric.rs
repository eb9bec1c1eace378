//! Double-precision twin of [`RMatrix`](super::RMatrix), used by sampling,
//! margins and search.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const NUMERIC_RANK_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Row-major constructor; rejects NaN and infinities.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(FMatrix { rows, cols, data })
    }

    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!("row of length {}, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mul(&self, other: &FMatrix) -> FMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = FMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// All `cols` singular values in decreasing order; padded with zeros
    /// when the matrix has fewer rows than columns.
    pub fn column_singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = if self.rows == 0 || self.cols == 0 {
            Vec::new()
        } else {
            self.to_nalgebra().singular_values().iter().copied().collect()
        };
        sv.sort_by(|a, b| b.total_cmp(a));
        sv.resize(self.cols, 0.0);
        sv
    }
}

/// Smallest of the `cols` singular values of `m` (zero when `rows < cols`),
/// so it vanishes exactly when the columns are dependent.
pub fn smallest_singular_value(m: &FMatrix) -> f64 {
    m.column_singular_values().last().copied().unwrap_or(0.0)
}

/// Rank with singular values below `1e-9 · σ_max` treated as zero.
pub fn numeric_rank(m: &FMatrix) -> usize {
    let sv = m.column_singular_values();
    let Some(&max) = sv.first() else { return 0 };
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > NUMERIC_RANK_RTOL * max).count()
}

/// Orthonormal rows spanning the row space of `rows` (modified Gram-Schmidt
/// with one reorthogonalisation pass). Near-dependent rows are dropped.
pub fn orthonormal_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let scale = rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for _ in 0..2 {
            for q in &out {
                let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > NUMERIC_RANK_RTOL * scale.max(f64::MIN_POSITIVE) {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    out
}

/// Projector `Qᵀ Q` from orthonormal rows `Q`.
pub fn projector_from_orthonormal(q: &[Vec<f64>], n: usize) -> FMatrix {
    let mut p = FMatrix::zeros(n, n);
    for row in q {
        for i in 0..n {
            for j in 0..n {
                p.data[i * n + j] += row[i] * row[j];
            }
        }
    }
    p
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert_eq!(FMatrix::new(1, 2, vec![1.0, f64::NAN]), Err(Error::NonFinite));
        assert_eq!(FMatrix::new(1, 1, vec![f64::INFINITY]), Err(Error::NonFinite));
    }

    #[test]
    fn sigma_min_examples() {
        assert!((smallest_singular_value(&FMatrix::identity(3)) - 1.0).abs() < 1e-15);
        let d = FMatrix::new(3, 3, vec![3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(smallest_singular_value(&d) < 1e-12);
    }

    #[test]
    fn sigma_min_near_parallel_rows() {
        // closed-form 2x2 oracle: for [[a,b],[c,d]], σ_max σ_min = |det| and
        // σ_max² + σ_min² = ‖M‖_F², so σ_min² is the smaller root of
        // t² − F t + det² = 0.
        let eps: f64 = 1e-3;
        let m = FMatrix::new(2, 2, vec![1.0, 0.0, 1.0, eps]).unwrap();
        let f = 2.0 + eps * eps;
        let det = eps;
        let disc = (f * f - 4.0 * det * det).sqrt();
        // stable smaller root: 2 det² / (F + disc)
        let oracle = (2.0 * det * det / (f + disc)).sqrt();
        let got = smallest_singular_value(&m);
        assert!((got - oracle).abs() <= 1e-10 * oracle, "{got} vs {oracle}");
        assert!((got - eps / 2f64.sqrt()).abs() < 0.1 * eps / 2f64.sqrt());
    }

    #[test]
    fn wide_matrix_has_zero_sigma_min() {
        let m = FMatrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        assert_eq!(smallest_singular_value(&m), 0.0);
        assert_eq!(numeric_rank(&m), 1);
    }

    #[test]
    fn gram_schmidt_drops_dependent_rows() {
        let q = orthonormal_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]]);
        assert_eq!(q.len(), 2);
        let d: f64 = q[0].iter().zip(&q[1]).map(|(a, b)| a * b).sum();
        assert!(d.abs() < 1e-15);
    }
}
