//! Metric-space abstraction and the generic Fréchet function, variance and
//! barycenter used by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative weights summing to one (an element of the simplex).
///
/// Validated on construction; a sum deviating from 1 by at most 1e-9 is
/// renormalized, a larger deviation is rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(mut w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        for (i, &wi) in w.iter().enumerate() {
            if !wi.is_finite() || wi < 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "entry {i} is {wi}, must be finite and nonnegative"
                )));
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        if sum != 1.0 {
            for wi in &mut w {
                *wi /= sum;
            }
        }
        Ok(Self(w))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n.max(1)])
    }

    /// Normalizes an arbitrary nonnegative vector, rejecting zero-sum input.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidWeights(format!(
                "cannot normalize, sum {sum}"
            )));
        }
        Self::new(w.iter().map(|wi| wi / sum).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Vec<f64> {
        w.0
    }
}

/// A metric space together with a barycenter rule.
///
/// `dist` must satisfy the metric axioms; `barycenter` returns a minimizer of
/// the Fréchet function. Barycenters dispatch to space-specific closed forms
/// where they exist (Euclidean mean, quantile average, the Bures-Wasserstein
/// fixed point); parametric curve spaces run a local search over their
/// parameter chart. The returned point is one local minimizer; uniqueness is
/// not guaranteed in every space.
pub trait MetricSpace: Sync {
    type Point: Clone + PartialEq + Send + Sync;

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> f64;

    fn barycenter(&self, points: &[Self::Point], weights: &WeightVector) -> Result<Self::Point>;

    fn dist_sq(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        let d = self.dist(a, b);
        d * d
    }
}

fn check_len(n_points: usize, n_weights: usize) -> Result<()> {
    if n_points != n_weights {
        return Err(Error::DimensionMismatch {
            expected: n_points,
            got: n_weights,
        });
    }
    if n_points == 0 {
        return Err(Error::InvalidWeights("empty opinion set".into()));
    }
    Ok(())
}

/// Weighted sum of squared distances from `z` to the points of the set.
pub fn frechet_function<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    weights: &WeightVector,
    z: &S::Point,
) -> Result<f64> {
    check_len(points.len(), weights.len())?;
    Ok(points
        .iter()
        .zip(weights.iter())
        .map(|(x, &w)| w * space.dist_sq(z, x))
        .sum())
}

/// A minimizer of the Fréchet function over the space.
pub fn frechet_barycenter<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    weights: &WeightVector,
) -> Result<S::Point> {
    check_len(points.len(), weights.len())?;
    if points.len() == 1 {
        return Ok(points[0].clone());
    }
    space.barycenter(points, weights)
}

/// The Fréchet function evaluated at the barycenter.
pub fn frechet_variance<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    weights: &WeightVector,
) -> Result<f64> {
    let z = frechet_barycenter(space, points, weights)?;
    frechet_function(space, points, weights, &z)
}
