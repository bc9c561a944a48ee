use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, WeightVector};

/// Number of uniform probability levels used when discretizing a
/// distribution: p_k = (k - 1/2) / K.
pub const DEFAULT_GRID_SIZE: usize = 1000;

/// A 1-D probability measure represented by its quantile function sampled on
/// a strictly increasing grid of probability levels in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl QuantileFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Grid(format!(
                "grid has {} levels but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.is_empty() {
            return Err(Error::Grid("empty grid".into()));
        }
        for w in grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Grid(
                    "grid levels must be strictly increasing".into(),
                ));
            }
        }
        if grid[0] <= 0.0 || *grid.last().unwrap() >= 1.0 {
            return Err(Error::Grid("grid levels must lie in (0,1)".into()));
        }
        for w in values.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Grid("quantile values must be nondecreasing".into()));
            }
        }
        Ok(Self { grid, values })
    }

    /// Uniform grid p_k = (k - 1/2) / K.
    pub fn uniform_grid(k: usize) -> Vec<f64> {
        (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect()
    }

    /// Samples a quantile function Q on the default uniform grid.
    pub fn from_quantile_fn(k: usize, q: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = Self::uniform_grid(k);
        let values = grid.iter().map(|&p| q(p)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation on the grid, constant beyond the end levels.
    pub fn eval(&self, p: f64) -> f64 {
        let g = &self.grid;
        if p <= g[0] {
            return self.values[0];
        }
        if p >= *g.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let idx = g.partition_point(|&x| x < p);
        let (p0, p1) = (g[idx - 1], g[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        v0 + (v1 - v0) * (p - p0) / (p1 - p0)
    }

    fn resample(&self, grid: &[f64]) -> Self {
        Self {
            grid: grid.to_vec(),
            values: grid.iter().map(|&p| self.eval(p)).collect(),
        }
    }
}

fn union_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g.dedup();
    g
}

/// Common-grid pair; inputs on different grids are linearly interpolated onto
/// the union grid first.
fn align(a: &QuantileFunction, b: &QuantileFunction) -> (QuantileFunction, QuantileFunction) {
    if a.grid == b.grid {
        (a.clone(), b.clone())
    } else {
        let g = union_grid(&a.grid, &b.grid);
        (a.resample(&g), b.resample(&g))
    }
}

/// 2-Wasserstein distance of two 1-D measures: the L2 distance of their
/// quantile functions, by trapezoidal quadrature over the grid.
pub fn w1d_dist(a: &QuantileFunction, b: &QuantileFunction) -> f64 {
    let (a, b) = align(a, b);
    let mut acc = 0.0;
    for i in 1..a.grid.len() {
        let f0 = (a.values[i - 1] - b.values[i - 1]).powi(2);
        let f1 = (a.values[i] - b.values[i]).powi(2);
        acc += 0.5 * (f0 + f1) * (a.grid[i] - a.grid[i - 1]);
    }
    acc.sqrt()
}

/// Wasserstein barycenter of 1-D measures: the pointwise weighted average of
/// quantile functions.
pub fn w1d_barycenter(set: &[QuantileFunction], w: &WeightVector) -> Result<QuantileFunction> {
    if set.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            got: w.len(),
        });
    }
    let mut grid = set[0].grid.clone();
    for q in &set[1..] {
        if q.grid != grid {
            grid = union_grid(&grid, &q.grid);
        }
    }
    let mut values = vec![0.0; grid.len()];
    for (q, &wi) in set.iter().zip(w.iter()) {
        let r = q.resample(&grid);
        for (v, x) in values.iter_mut().zip(r.values) {
            *v += wi * x;
        }
    }
    QuantileFunction::new(grid, values)
}

/// The space of 1-D probability measures with the 2-Wasserstein metric in
/// quantile representation.
#[derive(Debug, Clone, Copy, Default)]
pub struct WassersteinQuantile;

impl MetricSpace for WassersteinQuantile {
    type Point = QuantileFunction;

    fn dist(&self, a: &QuantileFunction, b: &QuantileFunction) -> f64 {
        w1d_dist(a, b)
    }

    fn barycenter(
        &self,
        points: &[QuantileFunction],
        weights: &WeightVector,
    ) -> Result<QuantileFunction> {
        w1d_barycenter(points, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::stats::normal_quantile;
    use proptest::prelude::*;

    fn normal_qf(mu: f64, sigma: f64, k: usize) -> QuantileFunction {
        QuantileFunction::from_quantile_fn(k, |p| mu + sigma * normal_quantile(p)).unwrap()
    }

    #[test]
    fn dist_identical_is_zero() {
        let q = normal_qf(0.0, 1.0, 200);
        assert_eq!(w1d_dist(&q, &q), 0.0);
    }

    #[test]
    fn dist_constant_shift() {
        let g = QuantileFunction::uniform_grid(1000);
        let a = QuantileFunction::new(g.clone(), vec![0.0; 1000]).unwrap();
        let b = QuantileFunction::new(g, vec![3.0; 1000]).unwrap();
        // tails outside [p_1, p_K] are truncated, so |c| up to grid resolution
        assert!((w1d_dist(&a, &b) - 3.0).abs() < 3.0 * 1e-3);
    }

    #[test]
    fn dist_normal_location_shift() {
        let a = normal_qf(0.0, 1.0, 1000);
        let b = normal_qf(1.0, 1.0, 1000);
        assert!((w1d_dist(&a, &b) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn barycenter_identical_inputs() {
        let q = normal_qf(2.0, 0.5, 100);
        let bary = w1d_barycenter(&[q.clone(), q.clone()], &WeightVector::uniform(2)).unwrap();
        for (a, b) in bary.values().iter().zip(q.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn barycenter_of_two_normals() {
        let a = normal_qf(0.0, 1.0, 1000);
        let b = normal_qf(2.0, 3.0, 1000);
        let expect = normal_qf(1.0, 2.0, 1000);
        let bary = w1d_barycenter(&[a, b], &WeightVector::uniform(2)).unwrap();
        for (x, y) in bary.values().iter().zip(expect.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn barycenter_degenerate_weight_returns_input() {
        let a = normal_qf(0.0, 1.0, 100);
        let b = normal_qf(5.0, 2.0, 100);
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let bary = w1d_barycenter(&[a.clone(), b], &w).unwrap();
        for (x, y) in bary.values().iter().zip(a.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_grids_resample_onto_union() {
        let a = normal_qf(0.0, 1.0, 500);
        let b = normal_qf(0.0, 1.0, 700);
        // same underlying distribution, different grids: the residual comes
        // from tail discretization only
        assert!(w1d_dist(&a, &b) < 5e-3);
    }

    #[test]
    fn rejects_decreasing_values() {
        let g = QuantileFunction::uniform_grid(3);
        assert!(QuantileFunction::new(g, vec![1.0, 0.5, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn barycenter_values_nondecreasing(
            mus in proptest::collection::vec(-5.0f64..5.0, 2..5),
            sigmas in proptest::collection::vec(0.1f64..3.0, 5),
            raw in proptest::collection::vec(0.01f64..1.0, 5),
        ) {
            let qs: Vec<_> = mus
                .iter()
                .zip(&sigmas)
                .map(|(&m, &s)| normal_qf(m, s, 64))
                .collect();
            let w = WeightVector::normalized(raw[..qs.len()].to_vec()).unwrap();
            let bary = w1d_barycenter(&qs, &w).unwrap();
            for pair in bary.values().windows(2) {
                prop_assert!(pair[1] >= pair[0] - 1e-12);
            }
        }

        #[test]
        fn dist_symmetry(
            ma in -3.0f64..3.0, sa in 0.2f64..2.0,
            mb in -3.0f64..3.0, sb in 0.2f64..2.0,
        ) {
            let a = normal_qf(ma, sa, 128);
            let b = normal_qf(mb, sb, 128);
            prop_assert_eq!(w1d_dist(&a, &b), w1d_dist(&b, &a));
        }
    }
}
