//! Observation spaces and time series of objects living in them.
//!
//! Every observation is stored as a flat block of reals: a vector's
//! coordinates, a matrix's entries in row-major order, or a function's
//! values on a fixed grid of abscissae in [0, 1]. The space supplies the
//! metric used by every kernel.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The metric space an [`ObjectSeries`] lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub enum Space {
    /// R^d with the Euclidean norm.
    Euclidean { dim: usize },
    /// R^{rows x cols} with the Frobenius norm.
    Matrix { rows: usize, cols: usize },
    /// L2[0,1], functions observed on `grid`, norm by the composite trapezoid rule.
    Functional {
        grid: Arc<[f64]>,
        weights: Arc<[f64]>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SpaceRepr {
    Euclidean { dim: usize },
    Matrix { rows: usize, cols: usize },
    Functional { grid: Vec<f64> },
}

impl TryFrom<SpaceRepr> for Space {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Self> {
        match r {
            SpaceRepr::Euclidean { dim } => Space::euclidean(dim),
            SpaceRepr::Matrix { rows, cols } => Space::matrix(rows, cols),
            SpaceRepr::Functional { grid } => Space::functional(grid),
        }
    }
}

impl From<Space> for SpaceRepr {
    fn from(s: Space) -> Self {
        match s {
            Space::Euclidean { dim } => SpaceRepr::Euclidean { dim },
            Space::Matrix { rows, cols } => SpaceRepr::Matrix { rows, cols },
            Space::Functional { grid, .. } => SpaceRepr::Functional { grid: grid.to_vec() },
        }
    }
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        Ok(Space::Euclidean { dim })
    }

    pub fn matrix(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidSpace(format!(
                "matrix shape {rows}x{cols} must be at least 1x1"
            )));
        }
        Ok(Space::Matrix { rows, cols })
    }

    /// A functional space on an explicit grid: at least two points, strictly
    /// increasing, starting at 0 and ending at 1.
    pub fn functional(grid: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidSpace("grid needs at least 2 points".into()));
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
            return Err(Error::InvalidSpace("grid must start at 0 and end at 1".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpace("grid must be strictly increasing".into()));
        }
        let weights = trapezoid_weights(&grid);
        Ok(Space::Functional {
            grid: grid.into(),
            weights: weights.into(),
        })
    }

    /// `points` equally spaced abscissae 0, 1/(points-1), ..., 1.
    pub fn uniform_grid(points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidSpace("grid needs at least 2 points".into()));
        }
        let last = (points - 1) as f64;
        let grid = (0..points)
            .map(|i| if i + 1 == points { 1.0 } else { i as f64 / last })
            .collect();
        Self::functional(grid)
    }

    /// Number of reals in one observation block.
    pub fn element_len(&self) -> usize {
        match self {
            Space::Euclidean { dim } => *dim,
            Space::Matrix { rows, cols } => rows * cols,
            Space::Functional { grid, .. } => grid.len(),
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Space::Euclidean { dim: 1 })
    }

    /// Distance between two conforming elements.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    /// Norm of a conforming element.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.norm_unchecked(x))
    }

    pub(crate) fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Space::Euclidean { .. } | Space::Matrix { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Space::Functional { weights, .. } => x
                .iter()
                .zip(y)
                .zip(weights.iter())
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub(crate) fn norm_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Space::Euclidean { .. } | Space::Matrix { .. } => {
                x.iter().map(|a| a * a).sum::<f64>().sqrt()
            }
            Space::Functional { weights, .. } => x
                .iter()
                .zip(weights.iter())
                .map(|(a, w)| w * a * a)
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Trapezoid integral of a function sampled on the grid. Only meaningful
    /// for functional spaces; other spaces return `None`.
    pub fn integrate(&self, f: &[f64]) -> Option<f64> {
        match self {
            Space::Functional { weights, .. } if f.len() == weights.len() => {
                Some(f.iter().zip(weights.iter()).map(|(a, w)| a * w).sum())
            }
            _ => None,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.element_len() {
            return Err(Error::ShapeMismatch {
                expected: self.element_len(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Quadrature weights of the composite trapezoid rule on `grid`.
fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let half = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

/// A length-T sequence of observations in one space.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSeries {
    space: Space,
    data: Vec<f64>,
}

impl ObjectSeries {
    /// Wraps `data`, which holds T consecutive blocks of `space.element_len()` reals.
    pub fn new(space: Space, data: Vec<f64>) -> Result<Self> {
        let width = space.element_len();
        if !data.len().is_multiple_of(width) {
            return Err(Error::ShapeMismatch {
                expected: (data.len() / width + 1) * width,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: pos / width });
        }
        Ok(Self { space, data })
    }

    pub fn from_blocks<I, B>(space: Space, blocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = B>,
        B: AsRef<[f64]>,
    {
        let width = space.element_len();
        let mut data = Vec::new();
        for block in blocks {
            let block = block.as_ref();
            if block.len() != width {
                return Err(Error::ShapeMismatch {
                    expected: width,
                    found: block.len(),
                });
            }
            data.extend_from_slice(block);
        }
        Self::new(space, data)
    }

    /// A scalar series in R^1.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(Space::Euclidean { dim: 1 }, values)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.space.element_len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Observation `t` (0-based).
    pub fn get(&self, t: usize) -> &[f64] {
        let w = self.space.element_len();
        &self.data[t * w..(t + 1) * w]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.space.element_len())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Applies `f` to every coordinate, keeping the space.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.space.clone(), self.data.iter().map(|&v| f(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_pythagorean() {
        let s = Space::euclidean(2).unwrap();
        assert_eq!(s.distance(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
    }

    #[test]
    fn identical_elements_have_zero_distance() {
        let spaces = [
            Space::euclidean(3).unwrap(),
            Space::matrix(2, 2).unwrap(),
            Space::uniform_grid(4).unwrap(),
        ];
        for s in &spaces {
            let x: Vec<f64> = (0..s.element_len()).map(|i| i as f64 * 0.7 - 1.0).collect();
            assert_eq!(s.distance(&x, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn trapezoid_l2_norm_of_identity_function() {
        let s = Space::uniform_grid(1001).unwrap();
        let Space::Functional { grid, .. } = &s else {
            unreachable!()
        };
        let x: Vec<f64> = grid.to_vec();
        let y = vec![0.0; x.len()];
        let d = s.distance(&x, &y).unwrap();
        // closed form: sqrt(int_0^1 t^2 dt) = 1/sqrt(3)
        assert!((d - 1.0 / 3f64.sqrt()).abs() < 1e-6, "{d}");
    }

    #[test]
    fn frobenius_distance() {
        let s = Space::matrix(2, 2).unwrap();
        let d = s.distance(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert!((d - 30f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let s = Space::euclidean(2).unwrap();
        assert_eq!(
            s.distance(&[1.0], &[0.0, 0.0]),
            Err(Error::ShapeMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn grid_validation() {
        assert!(Space::functional(vec![0.0]).is_err());
        assert!(Space::functional(vec![0.1, 1.0]).is_err());
        assert!(Space::functional(vec![0.0, 0.9]).is_err());
        assert!(Space::functional(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Space::functional(vec![0.0, 0.3, 1.0]).is_ok());
        assert!(Space::euclidean(0).is_err());
        assert!(Space::matrix(0, 3).is_err());
    }

    #[test]
    fn series_rejects_bad_blocks() {
        let s = Space::euclidean(2).unwrap();
        assert!(ObjectSeries::new(s.clone(), vec![1.0, 2.0, 3.0]).is_err());
        assert_eq!(
            ObjectSeries::new(s.clone(), vec![1.0, 2.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { index: 1 })
        );
        let ok = ObjectSeries::from_blocks(s, [[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.get(1), &[3.0, 4.0]);
    }
}
