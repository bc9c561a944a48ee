use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, WeightVector};

/// A multivariate Gaussian: mean vector and symmetric positive-definite
/// covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasure {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl GaussianMeasure {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d || cov.iter().any(|row| row.len() != d) {
            return Err(Error::Matrix(format!("covariance must be {d}x{d}")));
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..d {
            for j in 0..i {
                if (cov[i][j] - cov[j][i]).abs() > 1e-12 {
                    return Err(Error::Matrix(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let m = to_dmatrix(&cov);
        let eig = SymmetricEigen::new(m);
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::Matrix("covariance must be positive definite".into()));
        }
        Ok(Self { mean, cov })
    }

    /// 1-D Gaussian from mean and variance.
    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![mean], vec![vec![variance]])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Vec<Vec<f64>> {
        &self.cov
    }

    fn mean_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mean)
    }

    fn cov_mat(&self) -> DMatrix<f64> {
        to_dmatrix(&self.cov)
    }
}

fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

fn from_dmatrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Symmetric square root via eigendecomposition; tiny negative eigenvalues
/// from roundoff are clamped to zero.
fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Closed-form 2-Wasserstein (Bures-Wasserstein) distance between Gaussians.
pub fn bw_dist(a: &GaussianMeasure, b: &GaussianMeasure) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a == b {
        // the eigendecomposition route would return sqrt(roundoff) here
        return Ok(0.0);
    }
    let dm = a.mean_vec() - b.mean_vec();
    let sa = a.cov_mat();
    let sb = b.cov_mat();
    let sa_half = sym_sqrt(&sa);
    let cross = sym_sqrt(&symmetrize(&(&sa_half * &sb * &sa_half)));
    let tr = sa.trace() + sb.trace() - 2.0 * cross.trace();
    Ok((dm.norm_squared() + tr.max(0.0)).sqrt())
}

const BW_RESIDUAL_TOL: f64 = 1e-8;
const BW_MAX_ITERS: usize = 500;

/// Residual of the barycenter covariance equation
/// S = Σ w_k (S^{1/2} S_k S^{1/2})^{1/2}, in Frobenius norm.
fn bw_residual(s: &DMatrix<f64>, covs: &[DMatrix<f64>], w: &WeightVector) -> f64 {
    let s_half = sym_sqrt(s);
    let mut t = DMatrix::zeros(s.nrows(), s.ncols());
    for (sk, &wk) in covs.iter().zip(w.iter()) {
        t += sym_sqrt(&symmetrize(&(&s_half * sk * &s_half))) * wk;
    }
    (s - t).norm()
}

/// Wasserstein barycenter of Gaussians: mean is the weighted mean, the
/// covariance solves the fixed-point matrix equation. Initialized at the
/// weighted covariance mean and iterated with the square-root transport map
/// S <- S^{-1/2} (Σ w_k (S^{1/2} S_k S^{1/2})^{1/2})^2 S^{-1/2}.
pub fn bw_barycenter(set: &[GaussianMeasure], w: &WeightVector) -> Result<GaussianMeasure> {
    if set.is_empty() || set.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            got: w.len(),
        });
    }
    let d = set[0].dim();
    for g in set {
        if g.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: g.dim(),
            });
        }
    }
    let mean: Vec<f64> = (0..d)
        .map(|k| {
            set.iter()
                .zip(w.iter())
                .map(|(g, &wi)| wi * g.mean[k])
                .sum()
        })
        .collect();

    let covs: Vec<DMatrix<f64>> = set.iter().map(|g| g.cov_mat()).collect();
    let mut s = DMatrix::zeros(d, d);
    for (sk, &wk) in covs.iter().zip(w.iter()) {
        s += sk * wk;
    }

    let mut residual = bw_residual(&s, &covs, w);
    let mut iters = 0;
    while residual > BW_RESIDUAL_TOL {
        if iters >= BW_MAX_ITERS {
            return Err(Error::Convergence {
                iterations: iters,
                residual,
            });
        }
        let s_half = sym_sqrt(&s);
        let mut t = DMatrix::zeros(d, d);
        for (sk, &wk) in covs.iter().zip(w.iter()) {
            t += sym_sqrt(&symmetrize(&(&s_half * sk * &s_half))) * wk;
        }
        // S^{-1/2} T^2 S^{-1/2} with S^{-1/2} from the same eigendecomposition
        let eig = SymmetricEigen::new(s.clone());
        let inv_half = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(1e-300).sqrt()))
            * eig.eigenvectors.transpose();
        s = symmetrize(&(&inv_half * (&t * &t) * &inv_half));
        residual = bw_residual(&s, &covs, w);
        iters += 1;
    }

    GaussianMeasure::new(mean, from_dmatrix(&s))
}

/// Gaussians under the Bures-Wasserstein metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuresWasserstein;

impl MetricSpace for BuresWasserstein {
    type Point = GaussianMeasure;

    fn dist(&self, a: &GaussianMeasure, b: &GaussianMeasure) -> f64 {
        bw_dist(a, b).expect("dimension mismatch in Bures-Wasserstein distance")
    }

    fn barycenter(
        &self,
        points: &[GaussianMeasure],
        weights: &WeightVector,
    ) -> Result<GaussianMeasure> {
        bw_barycenter(points, weights)
    }
}
