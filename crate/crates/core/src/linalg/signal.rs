use num_traits::Zero;

use super::exact::{format_rational, integer_vector, to_f64, Rational};
use crate::error::{Error, Result};

/// A nonzero test point `x ∈ ℝⁿ` with exact coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signal {
    coords: Vec<Rational>,
}

impl Signal {
    pub fn new(coords: Vec<Rational>) -> Result<Self> {
        if coords.iter().all(Zero::is_zero) {
            return Err(Error::ZeroSignal);
        }
        Ok(Signal { coords })
    }

    pub fn from_i64(coords: &[i64]) -> Result<Self> {
        Self::new(coords.iter().map(|&c| super::exact::rat(c)).collect())
    }

    /// Exact expansion of a double vector.
    pub fn from_f64(coords: &[f64]) -> Result<Self> {
        let c = coords.iter().map(|&x| super::exact::from_f64(x)).collect::<Result<Vec<_>>>()?;
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<Rational> {
        self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(to_f64).collect()
    }

    pub fn neg(&self) -> Signal {
        Signal { coords: self.coords.iter().map(|c| -c.clone()).collect() }
    }

    /// Same direction, coprime integer coordinates.
    pub fn to_integer(&self) -> Signal {
        Signal { coords: integer_vector(&self.coords) }
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coords.iter().map(format_rational).collect()
    }
}
