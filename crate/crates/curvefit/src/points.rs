//! Weighted point sets: the input to every fit.

use crate::error::Error;
use crate::scalar::Real;
use crate::Result;

/// A set of m points `(x_i, y_i)` with per-point non-negative weights.
///
/// Construction validates the invariants once — equal lengths, m ≥ 1,
/// every entry finite, weights ≥ 0 — so downstream code can rely on them.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet<T = f64> {
    xs: Vec<T>,
    ys: Vec<T>,
    ws: Vec<T>,
}

impl<T: Real> WeightedPointSet<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>, ws: Vec<T>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
        }
        if xs.len() != ws.len() {
            return Err(Error::LengthMismatch { left: xs.len(), right: ws.len() });
        }
        if xs.is_empty() {
            return Err(Error::invalid_config("point set must hold at least one point"));
        }
        for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::invalid_config(format!(
                    "non-finite coordinate at index {i}: ({x}, {y})"
                )));
            }
        }
        for (i, &w) in ws.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(Error::InvalidWeight {
                    index: i,
                    value: w.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(WeightedPointSet { xs, ys, ws })
    }

    /// Points with all weights set to one.
    pub fn unweighted(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        let ws = vec![T::one(); xs.len()];
        Self::new(xs, ys, ws)
    }

    /// Skips validation. Only for finite-difference probes that must step a
    /// weight slightly below zero: the solve squares weights, so the probed
    /// objective is still well-defined there.
    pub(crate) fn new_unchecked(xs: Vec<T>, ys: Vec<T>, ws: Vec<T>) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        debug_assert_eq!(xs.len(), ws.len());
        WeightedPointSet { xs, ys, ws }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // m ≥ 1 by construction
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    pub fn ws(&self) -> &[T] {
        &self.ws
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<T>, Vec<T>) {
        (self.xs, self.ys, self.ws)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_lengths_and_emptiness() {
        let e = WeightedPointSet::new(vec![1.0, 2.0], vec![1.0], vec![1.0, 1.0]);
        assert_eq!(e.unwrap_err(), Error::LengthMismatch { left: 2, right: 1 });
        assert!(WeightedPointSet::<f64>::new(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn rejects_bad_weights() {
        let e = WeightedPointSet::new(vec![0.0], vec![0.0], vec![-1.0]).unwrap_err();
        assert_eq!(e, Error::InvalidWeight { index: 0, value: -1.0 });
        assert!(WeightedPointSet::new(vec![0.0], vec![0.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn rejects_non_finite_coordinates() {
        assert!(WeightedPointSet::new(vec![f64::INFINITY], vec![0.0], vec![1.0]).is_err());
        assert!(WeightedPointSet::new(vec![0.0], vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn unweighted_fills_ones() {
        let p = WeightedPointSet::unweighted(vec![0.0, 1.0], vec![2.0, 3.0]).unwrap();
        assert_eq!(p.ws(), &[1.0, 1.0]);
        assert_eq!(p.len(), 2);
    }
}
