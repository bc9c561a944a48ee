use crate::error::{Error, Result};
use crate::metric::{MetricSpace, WeightVector};

/// Flat vector space of a fixed dimension; the barycenter is the weighted
/// arithmetic mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(())
    }
}

impl MetricSpace for Euclidean {
    type Point = Vec<f64>;

    fn dist(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    fn barycenter(&self, points: &[Vec<f64>], weights: &WeightVector) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        for (p, &w) in points.iter().zip(weights.iter()) {
            self.check(p)?;
            for (o, &x) in out.iter_mut().zip(p) {
                *o += w * x;
            }
        }
        Ok(out)
    }
}
