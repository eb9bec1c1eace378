//! Outward-rounded interval arithmetic.
//!
//! Rust gives no control over the FPU rounding mode, so each elementary
//! result is computed to nearest and the rounding error is recovered with an
//! error-free transformation (TwoSum, FMA). When the error is nonzero the
//! bound moves one ulp outward; exact results stay sharp.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use super::exact::{from_f64, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

// Below this magnitude FMA residuals may themselves be rounded.
const TINY: f64 = 1e-290;

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::NEG_INFINITY } else { s };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::INFINITY } else { s };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if p.is_nan() { f64::NEG_INFINITY } else { p };
    }
    if p.abs() < TINY {
        return if a == 0.0 || b == 0.0 { 0.0 } else { p.next_down() };
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if p.is_nan() { f64::INFINITY } else { p };
    }
    if p.abs() < TINY {
        return if a == 0.0 || b == 0.0 { 0.0 } else { p.next_up() };
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval(format!("[{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN interval endpoint");
        Interval { lo: x, hi: x }
    }

    pub fn zero() -> Self {
        Interval::point(0.0)
    }

    /// Tightest double interval enclosing the rational `q`.
    pub fn enclosing(q: &Rational) -> Self {
        let x = super::exact::to_f64(q);
        match from_f64(x) {
            Ok(back) if &back == q => Interval::point(x),
            Ok(back) if &back < q => Interval { lo: x, hi: x.next_up() },
            Ok(_) => Interval { lo: x.next_down(), hi: x },
            // out of double range
            Err(_) => {
                if q > &Rational::zero() {
                    Interval { lo: f64::MAX, hi: f64::INFINITY }
                } else {
                    Interval { lo: f64::NEG_INFINITY, hi: f64::MIN }
                }
            }
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        self.lo / 2.0 + self.hi / 2.0
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        let (Ok(lo), Ok(hi)) = (from_f64(self.lo), from_f64(self.hi)) else {
            // infinite endpoint: fall back to double comparison on the other side
            let x = super::exact::to_f64(q);
            return self.lo <= x && x <= self.hi;
        };
        &lo <= q && q <= &hi
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval { lo: self.lo, hi: m }, Interval { lo: m, hi: self.hi })
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: add_down(self.lo, o.lo), hi: add_up(self.hi, o.hi) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        self + (-o)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let pairs = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = pairs.iter().map(|&(a, b)| mul_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|&(a, b)| mul_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Row-major matrix of intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Interval>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} intervals for {rows}x{cols}", data.len())));
        }
        Ok(IntervalMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.data[i * self.cols + j]
    }
}

/// Largest minor order accepted by [`interval_minor`].
pub const MAX_MINOR: usize = 6;

/// Encloses the determinant of the square submatrix on `rows × cols` for
/// every point matrix drawn from `m`. Cofactor expansion along the first row.
pub fn interval_minor(m: &IntervalMatrix, rows: &[usize], cols: &[usize]) -> Result<Interval> {
    if rows.len() != cols.len() || rows.len() > MAX_MINOR {
        return Err(Error::DimensionMismatch(format!(
            "minor with {} rows and {} columns (max order {MAX_MINOR})",
            rows.len(),
            cols.len()
        )));
    }
    if rows.iter().any(|&r| r >= m.rows) || cols.iter().any(|&c| c >= m.cols) {
        return Err(Error::DimensionMismatch("minor index out of range".into()));
    }
    Ok(cofactor(m, rows, cols))
}

fn cofactor(m: &IntervalMatrix, rows: &[usize], cols: &[usize]) -> Interval {
    match rows.len() {
        0 => Interval::point(1.0),
        1 => m.get(rows[0], cols[0]),
        2 => m.get(rows[0], cols[0]) * m.get(rows[1], cols[1]) - m.get(rows[0], cols[1]) * m.get(rows[1], cols[0]),
        _ => {
            let mut acc = Interval::zero();
            let mut sub_cols = Vec::with_capacity(cols.len() - 1);
            for (k, &c) in cols.iter().enumerate() {
                let a = m.get(rows[0], c);
                if a.lo == 0.0 && a.hi == 0.0 {
                    continue;
                }
                sub_cols.clear();
                sub_cols.extend(cols.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &c)| c));
                let term = a * cofactor(m, &rows[1..], &sub_cols);
                acc = if k % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}
