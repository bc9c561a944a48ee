use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, WeightVector};
use crate::util::optim::nelder_mead;

pub const PHI_UPPER: f64 = 1.0 - 1e-6;

/// Parameters of the Gollier discount-rate term structure
/// r(t) = δ + γ μ_t / t - γ² σ_t² / (2t). The free parameters are
/// (γ, δ, φ, y_{-1}); μ and σ_y are scenario constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdrCurveParams {
    /// Relative risk aversion, > 0.
    pub gamma: f64,
    /// Utility discount rate.
    pub delta: f64,
    /// Persistence of the consumption growth factor, in [0, 1).
    pub phi: f64,
    /// Initial factor state.
    pub y_minus1: f64,
    /// Mean growth (scenario constant).
    pub mu: f64,
    /// Factor shock standard deviation (scenario constant), > 0.
    pub sigma_y: f64,
}

/// The printed variance formula adds a σ_y² t term; the underlying factor
/// model has a separate growth shock σ_x, so a configuration switch allows
/// substituting σ_x² t instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode", content = "sigma_x")]
pub enum SigmaSecondTerm {
    #[default]
    SigmaY,
    SigmaX(f64),
}

impl SdrCurveParams {
    pub fn new(
        gamma: f64,
        delta: f64,
        phi: f64,
        y_minus1: f64,
        mu: f64,
        sigma_y: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Parameter(format!("gamma must be > 0, got {gamma}")));
        }
        if !(0.0..=PHI_UPPER).contains(&phi) {
            return Err(Error::Parameter(format!(
                "phi must lie in [0, 1 - 1e-6], got {phi}"
            )));
        }
        if !(sigma_y > 0.0) {
            return Err(Error::Parameter(format!(
                "sigma_y must be > 0, got {sigma_y}"
            )));
        }
        Ok(Self {
            gamma,
            delta,
            phi,
            y_minus1,
            mu,
            sigma_y,
        })
    }

    /// Mean of ln C(t) - ln C(0): μ t + y_{-1} (1 - φ^t) / (1 - φ).
    pub fn mu_t(&self, t: f64) -> f64 {
        self.mu * t + self.y_minus1 * (1.0 - self.phi.powf(t)) / (1.0 - self.phi)
    }

    /// Variance of ln C(t) - ln C(0), with the printed second term σ_y² t by
    /// default.
    pub fn sigma_sq_t(&self, t: f64, second_term: SigmaSecondTerm) -> f64 {
        let phi = self.phi;
        let sy2 = self.sigma_y * self.sigma_y;
        let bracket = t - 2.0 * phi * (phi.powf(t) - 1.0) / (phi - 1.0)
            + phi * phi * (phi.powf(2.0 * t) - 1.0) / (phi * phi - 1.0);
        let second = match second_term {
            SigmaSecondTerm::SigmaY => sy2 * t,
            SigmaSecondTerm::SigmaX(sx) => sx * sx * t,
        };
        sy2 / ((1.0 - phi) * (1.0 - phi)) * bracket + second
    }

    /// The discount rate at horizon t >= 1.
    pub fn rate(&self, t: f64, second_term: SigmaSecondTerm) -> f64 {
        self.delta + self.gamma * self.mu_t(t) / t
            - 0.5 * self.gamma * self.gamma * self.sigma_sq_t(t, second_term) / t
    }

    fn free_params(&self) -> [f64; 4] {
        [self.gamma, self.delta, self.phi, self.y_minus1]
    }
}

/// The discount rate at horizon t >= 1 (printed σ_y² t second term).
pub fn sdr_curve_eval(p: &SdrCurveParams, t: f64) -> f64 {
    p.rate(t, SigmaSecondTerm::SigmaY)
}

/// Metric on the curve space: either the Euclidean metric on the free
/// parameters (γ, δ, φ, y_{-1}), optionally componentwise scaled, or the L2
/// metric between the curves themselves over integer horizons 1..=T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "metric")]
pub enum SdrMetric {
    Param {
        #[serde(default = "unit_scaling")]
        scaling: [f64; 4],
    },
    Curve {
        #[serde(default = "default_horizon")]
        horizon: usize,
    },
}

fn unit_scaling() -> [f64; 4] {
    [1.0; 4]
}

fn default_horizon() -> usize {
    100
}

impl SdrMetric {
    pub fn param() -> Self {
        SdrMetric::Param {
            scaling: unit_scaling(),
        }
    }

    pub fn curve(horizon: usize) -> Self {
        SdrMetric::Curve { horizon }
    }
}

/// Euclidean distance on the free parameters (γ, δ, φ, y_{-1}).
pub fn sdr_param_dist(a: &SdrCurveParams, b: &SdrCurveParams) -> f64 {
    sdr_param_dist_scaled(a, b, &[1.0; 4])
}

pub fn sdr_param_dist_scaled(a: &SdrCurveParams, b: &SdrCurveParams, scaling: &[f64; 4]) -> f64 {
    let pa = a.free_params();
    let pb = b.free_params();
    pa.iter()
        .zip(&pb)
        .zip(scaling)
        .map(|((&x, &y), &s)| s * s * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// L2 distance between r_a and r_b by trapezoidal quadrature over the
/// integer horizon grid t = 1..=T.
pub fn sdr_curve_dist(
    a: &SdrCurveParams,
    b: &SdrCurveParams,
    horizon: usize,
    second_term: SigmaSecondTerm,
) -> f64 {
    let mut acc = 0.0;
    let mut prev = {
        let d = a.rate(1.0, second_term) - b.rate(1.0, second_term);
        d * d
    };
    for t in 2..=horizon {
        let d = a.rate(t as f64, second_term) - b.rate(t as f64, second_term);
        let cur = d * d;
        acc += 0.5 * (prev + cur);
        prev = cur;
    }
    acc.sqrt()
}

/// The space of Gollier discount-rate curves under the configured metric.
#[derive(Debug, Clone)]
pub struct SdrCurveSpace {
    pub metric: SdrMetric,
    pub second_term: SigmaSecondTerm,
}

impl SdrCurveSpace {
    pub fn new(metric: SdrMetric) -> Self {
        Self {
            metric,
            second_term: SigmaSecondTerm::SigmaY,
        }
    }

    fn param_mean(points: &[SdrCurveParams], weights: &WeightVector) -> Result<SdrCurveParams> {
        let mut acc = [0.0; 6];
        for (p, &w) in points.iter().zip(weights.iter()) {
            acc[0] += w * p.gamma;
            acc[1] += w * p.delta;
            acc[2] += w * p.phi;
            acc[3] += w * p.y_minus1;
            acc[4] += w * p.mu;
            acc[5] += w * p.sigma_y;
        }
        SdrCurveParams::new(
            acc[0],
            acc[1],
            acc[2].min(PHI_UPPER),
            acc[3],
            acc[4],
            acc[5],
        )
    }
}

impl MetricSpace for SdrCurveSpace {
    type Point = SdrCurveParams;

    fn dist(&self, a: &SdrCurveParams, b: &SdrCurveParams) -> f64 {
        match &self.metric {
            SdrMetric::Param { scaling } => sdr_param_dist_scaled(a, b, scaling),
            SdrMetric::Curve { horizon } => sdr_curve_dist(a, b, *horizon, self.second_term),
        }
    }

    fn barycenter(
        &self,
        points: &[SdrCurveParams],
        weights: &WeightVector,
    ) -> Result<SdrCurveParams> {
        let mean = Self::param_mean(points, weights)?;
        match &self.metric {
            SdrMetric::Param { .. } => Ok(mean),
            SdrMetric::Curve { .. } => {
                // local minimizer by bounded derivative-free search from the
                // parameter-mean initializer
                let objective = |x: &[f64]| -> f64 {
                    let cand = SdrCurveParams {
                        gamma: x[0],
                        delta: x[1],
                        phi: x[2],
                        y_minus1: x[3],
                        mu: mean.mu,
                        sigma_y: mean.sigma_y,
                    };
                    points
                        .iter()
                        .zip(weights.iter())
                        .map(|(p, &w)| {
                            let d = self.dist(&cand, p);
                            w * d * d
                        })
                        .sum()
                };
                let bounds = [
                    (1e-6, 100.0),
                    (-10.0, 10.0),
                    (0.0, PHI_UPPER),
                    (-10.0, 10.0),
                ];
                let (x, _) =
                    nelder_mead(objective, &mean.free_params(), &bounds, 0.05, 2000, 1e-14);
                SdrCurveParams::new(x[0], x[1], x[2], x[3], mean.mu, mean.sigma_y)
            }
        }
    }
}
