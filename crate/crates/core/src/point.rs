//! Walker state vectors.

use std::fmt;
use std::ops::{Index, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^d`, `d >= 1`, with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(crate::error::invalid("point", "dimension must be at least 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point(vec![x, y])
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Point) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &Point, scale: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Neg for &Point {
    type Output = Point;

    fn neg(self) -> Point {
        self.scale(-1.0)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nan() {
        assert!(Point::new(vec![]).is_err());
        assert_eq!(Point::new(vec![1.0, f64::NAN]), Err(Error::NonFinite));
    }

    #[test]
    fn basic_ops() {
        let p = Point::xy(3.0, 4.0);
        assert_eq!(p.norm(), 5.0);
        assert_eq!(p.add_scaled(&Point::xy(1.0, 1.0), -1.0), Point::xy(2.0, 3.0));
        assert_eq!((-&p).coords(), &[-3.0, -4.0]);
        assert_eq!(p.to_string(), "3,4");
    }
}
