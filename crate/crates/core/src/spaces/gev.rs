use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::QuantileFunction;

/// Generalized extreme value distribution: location, scale > 0, shape.
/// The shape ξ = 0 case uses the Gumbel limit forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

const XI_ZERO_TOL: f64 = 1e-12;

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "GEV scale must be > 0, got {sigma}"
            )));
        }
        if !mu.is_finite() || !xi.is_finite() {
            return Err(Error::Parameter(
                "GEV location and shape must be finite".into(),
            ));
        }
        Ok(Self { mu, sigma, xi })
    }

    /// t(x) = (1 + ξ (x-μ)/σ)^{-1/ξ}, or exp(-(x-μ)/σ) for ξ = 0.
    fn t(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        if self.xi.abs() < XI_ZERO_TOL {
            (-z).exp()
        } else {
            let base = 1.0 + self.xi * z;
            if base <= 0.0 {
                // outside the support
                if self.xi > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                base.powf(-1.0 / self.xi)
            }
        }
    }

    /// f(x) = (1/σ) t(x)^{ξ+1} e^{-t(x)}.
    pub fn pdf(&self, x: f64) -> f64 {
        let t = self.t(x);
        if !t.is_finite() || t == 0.0 {
            return 0.0;
        }
        t.powf(self.xi + 1.0) * (-t).exp() / self.sigma
    }

    /// F(x) = e^{-t(x)}.
    pub fn cdf(&self, x: f64) -> f64 {
        (-self.t(x)).exp()
    }

    /// Exact inverse of the CDF; requires u in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Parameter(format!(
                "GEV quantile requires u in (0,1), got {u}"
            )));
        }
        let l = -u.ln(); // t at the quantile
        Ok(if self.xi.abs() < XI_ZERO_TOL {
            self.mu - self.sigma * l.ln()
        } else {
            self.mu + self.sigma * (l.powf(-self.xi) - 1.0) / self.xi
        })
    }

    /// Discretizes the distribution as a quantile function on the uniform
    /// grid; unbounded tails are truncated at the end levels.
    pub fn to_quantile_function(&self, k: usize) -> Result<QuantileFunction> {
        let grid = QuantileFunction::uniform_grid(k);
        let mut values = Vec::with_capacity(k);
        for &p in &grid {
            values.push(self.quantile(p)?);
        }
        QuantileFunction::new(grid, values)
    }
}
