//! Concrete metric spaces: Euclidean vectors, 1-D probability measures under
//! the 2-Wasserstein metric in quantile representation (including the GEV
//! family), multivariate Gaussians under the Bures-Wasserstein metric, and
//! the Gollier discount-curve space with a parameter metric and an L2 curve
//! metric.

mod euclidean;
mod gaussian;
mod gev;
mod quantile;
mod sdr_curve;

pub use euclidean::Euclidean;
pub use gaussian::{bw_barycenter, bw_dist, BuresWasserstein, GaussianMeasure};
pub use gev::GevParams;
pub use quantile::{
    w1d_barycenter, w1d_dist, QuantileFunction, WassersteinQuantile, DEFAULT_GRID_SIZE,
};
pub use sdr_curve::{
    sdr_curve_dist, sdr_curve_eval, sdr_param_dist, SdrCurveParams, SdrCurveSpace, SdrMetric,
    SigmaSecondTerm, PHI_UPPER,
};
