//! Social-discount-rate application: the Gollier consumption model, uniform
//! sampling of heterogeneous agent subgroups, consensus over discount-rate
//! curves and GEV contingency models, and Monte-Carlo contingency valuation.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::clustering::{two_stage_consensus, TwoStageResult};
use crate::engine::{run_consensus, AgentProfile, EngineConfig, InteractionGraph};
use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::rng::{streams, substream};
use crate::spaces::{
    sdr_curve_eval, GevParams, QuantileFunction, SdrCurveParams, SdrCurveSpace, SdrMetric,
    WassersteinQuantile, DEFAULT_GRID_SIZE, PHI_UPPER,
};
use crate::trace::{Outcome, SimulationTrace};
use crate::util::optim::nelder_mead;
use crate::util::par::map_range;
use crate::util::stats::{chunked_sum, percentile_sorted};

/// Single-factor autoregressive consumption model
/// C(t+1) = C(t) e^{x(t)}, x(t+1) = μ + y(t) + ε_x(t), y(t) = φ y(t-1) + ε_y(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionModelParams {
    pub mu: f64,
    pub phi: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub y_minus1: f64,
}

impl ConsumptionModelParams {
    pub fn new(mu: f64, phi: f64, sigma_x: f64, sigma_y: f64, y_minus1: f64) -> Result<Self> {
        if !(sigma_x > 0.0) || !(sigma_y > 0.0) {
            return Err(Error::Parameter("sigma_x and sigma_y must be > 0".into()));
        }
        if !(0.0..=PHI_UPPER).contains(&phi) {
            return Err(Error::Parameter(format!("phi {phi} outside [0, 1 - 1e-6]")));
        }
        Ok(Self {
            mu,
            phi,
            sigma_x,
            sigma_y,
            y_minus1,
        })
    }

    /// Mean of ln C(t) - ln C(0).
    pub fn mu_t(&self, t: f64) -> f64 {
        self.mu * t + self.y_minus1 * (1.0 - self.phi.powf(t)) / (1.0 - self.phi)
    }
}

/// Uniform variate strictly inside (0, 1).
fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Standard normal draw by inverse transform.
fn standard_normal(rng: &mut impl RngCore) -> f64 {
    crate::util::stats::normal_quantile(open_unit(rng))
}

/// Consumption path C(0) = 1, ..., C(horizon); each (seed, path) pair is an
/// independent reproducible stream.
pub fn simulate_consumption(
    params: &ConsumptionModelParams,
    horizon: usize,
    seed: u64,
    path: u64,
) -> Vec<f64> {
    let mut rng = substream(seed, &[streams::CONSUMPTION, path]);
    let mut out = Vec::with_capacity(horizon + 1);
    let mut ln_c = 0.0;
    out.push(1.0);
    let mut y_prev = params.y_minus1;
    for _ in 0..horizon {
        let x = params.mu + y_prev + params.sigma_x * standard_normal(&mut rng);
        y_prev = params.phi * y_prev + params.sigma_y * standard_normal(&mut rng);
        ln_c += x;
        out.push(ln_c.exp());
    }
    out
}

/// Closed interval used for uniform sampling of agent parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::Config(format!(
                "{name}: invalid bounds [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> f64 {
        self.lo + (self.hi - self.lo) * open_unit(rng)
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

/// One homogeneous subgroup: curve-parameter bounds and behavioral bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub size: usize,
    pub gamma: Bounds,
    pub delta: Bounds,
    pub phi: Bounds,
    pub y_minus1: Bounds,
    pub theta: Bounds,
    pub rho: Bounds,
    pub r: Bounds,
    pub epsilon: Bounds,
}

impl SubgroupSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::Config("subgroup size must be >= 1".into()));
        }
        self.gamma.validate("gamma")?;
        self.delta.validate("delta")?;
        self.phi.validate("phi")?;
        self.y_minus1.validate("y_minus1")?;
        self.theta.validate("theta")?;
        self.rho.validate("rho")?;
        self.r.validate("r")?;
        self.epsilon.validate("epsilon")?;
        if self.theta.lo < 0.0 || self.theta.hi > 1.0 {
            return Err(Error::Config("theta bounds outside [0, 1]".into()));
        }
        if self.rho.lo <= 0.0 || self.epsilon.lo <= 0.0 || self.r.lo < 0.0 || self.gamma.lo <= 0.0 {
            return Err(Error::Config(
                "rho, epsilon, gamma bounds must be > 0 and r >= 0".into(),
            ));
        }
        if self.phi.lo < 0.0 || self.phi.hi > PHI_UPPER {
            return Err(Error::Config("phi bounds outside [0, 1 - 1e-6]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    OneStage,
    TwoStage,
}

/// Scenario for consensus over discount-rate curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SDRScenario {
    pub label: String,
    pub subgroups: Vec<SubgroupSpec>,
    /// Mean growth, shared by all agents.
    pub mu: f64,
    /// Factor shock standard deviation, shared by all agents.
    pub sigma_y: f64,
    pub metric: SdrMetric,
    pub scheme: Scheme,
    pub seed: u64,
    pub engine: EngineConfig,
}

fn default_behavior() -> [Bounds; 4] {
    [
        Bounds::new(0.1, 0.3),  // theta
        Bounds::new(0.5, 1.0),  // rho
        Bounds::new(1.0, 3.0),  // r
        Bounds::new(0.05, 0.1), // epsilon
    ]
}

impl SDRScenario {
    /// Default scenario: three subgroups of 30 agents with γ bounds
    /// [0.8, 1.5], [0.4, 1.7], [0.3, 2.0] and shared δ ∈ [0.029, 0.031],
    /// φ ∈ [0.977, 0.981], y_{-1} ∈ [-0.001, 0.001]; growth calibration
    /// μ = 0.0015, σ_y = 0.00034.
    pub fn default_scenario(seed: u64) -> Self {
        let gamma_bounds = [
            Bounds::new(0.8, 1.5),
            Bounds::new(0.4, 1.7),
            Bounds::new(0.3, 2.0),
        ];
        let [theta, rho, r, epsilon] = default_behavior();
        let subgroups = gamma_bounds
            .into_iter()
            .map(|gamma| SubgroupSpec {
                size: 30,
                gamma,
                delta: Bounds::new(0.029, 0.031),
                phi: Bounds::new(0.977, 0.981),
                y_minus1: Bounds::new(-0.001, 0.001),
                theta,
                rho,
                r,
                epsilon,
            })
            .collect();
        Self {
            label: "default".into(),
            subgroups,
            mu: 0.0015,
            sigma_y: 0.00034,
            metric: SdrMetric::param(),
            scheme: Scheme::OneStage,
            seed,
            engine: EngineConfig {
                seed,
                ..EngineConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subgroups.is_empty() {
            return Err(Error::Config("at least one subgroup required".into()));
        }
        for g in &self.subgroups {
            g.validate()?;
        }
        if !(self.sigma_y > 0.0) {
            return Err(Error::Config("sigma_y must be > 0".into()));
        }
        self.engine.validate()?;
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.subgroups.iter().map(|g| g.size).sum()
    }
}

/// Draws the agent anchors (SDR curves), behavioral profiles, and subgroup
/// labels; deterministic per seed.
pub fn sample_agents(
    scenario: &SDRScenario,
) -> Result<(Vec<SdrCurveParams>, Vec<AgentProfile>, Vec<usize>)> {
    scenario.validate()?;
    let mut rng = substream(scenario.seed, &[streams::SAMPLING]);
    let mut anchors = Vec::new();
    let mut profiles = Vec::new();
    let mut labels = Vec::new();
    for (k, group) in scenario.subgroups.iter().enumerate() {
        for _ in 0..group.size {
            let gamma = group.gamma.sample(&mut rng);
            let delta = group.delta.sample(&mut rng);
            let phi = group.phi.sample(&mut rng);
            let y = group.y_minus1.sample(&mut rng);
            anchors.push(SdrCurveParams::new(
                gamma,
                delta,
                phi,
                y,
                scenario.mu,
                scenario.sigma_y,
            )?);
            profiles.push(AgentProfile::new(
                group.theta.sample(&mut rng),
                group.rho.sample(&mut rng),
                group.r.sample(&mut rng),
                group.epsilon.sample(&mut rng),
            )?);
            labels.push(k);
        }
    }
    Ok((anchors, profiles, labels))
}

/// Traces produced by a pipeline run under either scheme.
#[derive(Debug, Clone)]
pub enum RunTraces<P> {
    OneStage(SimulationTrace<P>),
    TwoStage(TwoStageResult<P>),
}

impl<P: Clone> RunTraces<P> {
    pub fn partial(&self) -> bool {
        match self {
            RunTraces::OneStage(t) => !t.accepted(),
            RunTraces::TwoStage(r) => r.partial,
        }
    }

    pub fn final_point(&self) -> P {
        match self {
            RunTraces::OneStage(t) => match &t.outcome {
                Outcome::Consensus { point, .. } => point.clone(),
                Outcome::MaxSteps { last_proposal } => last_proposal.clone(),
            },
            RunTraces::TwoStage(r) => match &r.global_trace.outcome {
                Outcome::Consensus { point, .. } => point.clone(),
                Outcome::MaxSteps { last_proposal } => last_proposal.clone(),
            },
        }
    }

    /// The trace of the final (global) stage.
    pub fn final_trace(&self) -> &SimulationTrace<P> {
        match self {
            RunTraces::OneStage(t) => t,
            RunTraces::TwoStage(r) => &r.global_trace,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdrConsensusResult {
    pub consensus: SdrCurveParams,
    pub partial: bool,
    pub anchors: Vec<SdrCurveParams>,
    pub profiles: Vec<AgentProfile>,
    pub labels: Vec<usize>,
    pub traces: RunTraces<SdrCurveParams>,
}

fn run_scheme<S: MetricSpace>(
    space: &S,
    anchors: Vec<S::Point>,
    profiles: Vec<AgentProfile>,
    scheme: Scheme,
    k: usize,
    config: &EngineConfig,
) -> Result<RunTraces<S::Point>> {
    match scheme {
        Scheme::OneStage => {
            let graph = InteractionGraph::complete(anchors.len());
            Ok(RunTraces::OneStage(run_consensus(
                space, anchors, profiles, graph, config, None,
            )?))
        }
        Scheme::TwoStage => Ok(RunTraces::TwoStage(two_stage_consensus(
            space, &anchors, &profiles, k, config,
        )?)),
    }
}

/// Runs the consensus scheme over sampled SDR curves; for the two-stage
/// scheme K equals the number of subgroups.
pub fn run_sdr_consensus(scenario: &SDRScenario) -> Result<SdrConsensusResult> {
    let (anchors, profiles, labels) = sample_agents(scenario)?;
    let space = SdrCurveSpace::new(scenario.metric.clone());
    let traces = run_scheme(
        &space,
        anchors.clone(),
        profiles.clone(),
        scenario.scheme,
        scenario.subgroups.len(),
        &scenario.engine,
    )?;
    Ok(SdrConsensusResult {
        consensus: traces.final_point(),
        partial: traces.partial(),
        anchors,
        profiles,
        labels,
        traces,
    })
}

/// GEV bounds per subgroup for the contingency-model consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevSubgroupSpec {
    pub size: usize,
    pub mu: Bounds,
    pub sigma: Bounds,
    pub xi: Bounds,
    pub theta: Bounds,
    pub rho: Bounds,
    pub r: Bounds,
    pub epsilon: Bounds,
}

impl GevSubgroupSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::Config("subgroup size must be >= 1".into()));
        }
        for (b, name) in [
            (&self.mu, "mu"),
            (&self.sigma, "sigma"),
            (&self.xi, "xi"),
            (&self.theta, "theta"),
            (&self.rho, "rho"),
            (&self.r, "r"),
            (&self.epsilon, "epsilon"),
        ] {
            b.validate(name)?;
        }
        if self.sigma.lo <= 0.0 {
            return Err(Error::Config("sigma bounds must be > 0".into()));
        }
        if self.theta.lo < 0.0 || self.theta.hi > 1.0 {
            return Err(Error::Config("theta bounds outside [0, 1]".into()));
        }
        if self.rho.lo <= 0.0 || self.epsilon.lo <= 0.0 || self.r.lo < 0.0 {
            return Err(Error::Config("rho, epsilon must be > 0 and r >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevScenario {
    pub label: String,
    pub subgroups: Vec<GevSubgroupSpec>,
    pub grid_size: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub engine: EngineConfig,
}

impl GevScenario {
    /// Default contingency scenario: three subgroups of 30 agents with
    /// moderately dispersed location/scale and light-tailed shapes.
    pub fn default_scenario(seed: u64) -> Self {
        let [theta, rho, r, epsilon] = default_behavior();
        let mu_bounds = [
            Bounds::new(0.8, 1.2),
            Bounds::new(0.9, 1.4),
            Bounds::new(0.7, 1.3),
        ];
        let subgroups = mu_bounds
            .into_iter()
            .map(|mu| GevSubgroupSpec {
                size: 30,
                mu,
                sigma: Bounds::new(0.2, 0.4),
                xi: Bounds::new(0.0, 0.2),
                theta,
                rho,
                r,
                epsilon,
            })
            .collect();
        Self {
            label: "gev-default".into(),
            subgroups,
            grid_size: DEFAULT_GRID_SIZE,
            scheme: Scheme::OneStage,
            seed,
            engine: EngineConfig {
                seed,
                ..EngineConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subgroups.is_empty() {
            return Err(Error::Config("at least one subgroup required".into()));
        }
        for g in &self.subgroups {
            g.validate()?;
        }
        if self.grid_size < 2 {
            return Err(Error::Config("grid_size must be >= 2".into()));
        }
        self.engine.validate()?;
        Ok(())
    }
}

pub fn sample_gev_agents(
    scenario: &GevScenario,
) -> Result<(Vec<GevParams>, Vec<AgentProfile>, Vec<usize>)> {
    scenario.validate()?;
    let mut rng = substream(scenario.seed, &[streams::SAMPLING]);
    let mut anchors = Vec::new();
    let mut profiles = Vec::new();
    let mut labels = Vec::new();
    for (k, group) in scenario.subgroups.iter().enumerate() {
        for _ in 0..group.size {
            anchors.push(GevParams::new(
                group.mu.sample(&mut rng),
                group.sigma.sample(&mut rng),
                group.xi.sample(&mut rng),
            )?);
            profiles.push(AgentProfile::new(
                group.theta.sample(&mut rng),
                group.rho.sample(&mut rng),
                group.r.sample(&mut rng),
                group.epsilon.sample(&mut rng),
            )?);
            labels.push(k);
        }
    }
    Ok((anchors, profiles, labels))
}

/// Least-squares GEV refit of a quantile function on its own grid.
pub fn fit_gev(q: &QuantileFunction, init: &GevParams) -> Result<GevParams> {
    let objective = |x: &[f64]| -> f64 {
        match GevParams::new(x[0], x[1], x[2]) {
            Ok(p) => q
                .grid()
                .iter()
                .zip(q.values())
                .map(|(&u, &v)| match p.quantile(u) {
                    Ok(pv) => {
                        let d = pv - v;
                        d * d
                    }
                    Err(_) => f64::INFINITY,
                })
                .sum::<f64>(),
            Err(_) => f64::INFINITY,
        }
    };
    let bounds = [(-1e6, 1e6), (1e-9, 1e6), (-0.9, 0.9)];
    let (x, _) = nelder_mead(
        objective,
        &[init.mu, init.sigma, init.xi],
        &bounds,
        0.1,
        4000,
        1e-14,
    );
    GevParams::new(x[0], x[1], x[2])
}

#[derive(Debug, Clone)]
pub struct GevConsensusResult {
    pub quantile: QuantileFunction,
    pub fitted: GevParams,
    pub partial: bool,
    pub anchors: Vec<GevParams>,
    pub labels: Vec<usize>,
    pub traces: RunTraces<QuantileFunction>,
}

/// Runs the consensus scheme over GEV contingency models in the 1-D
/// Wasserstein space of their quantile representations.
pub fn run_gev_consensus(scenario: &GevScenario) -> Result<GevConsensusResult> {
    let (anchors, profiles, labels) = sample_gev_agents(scenario)?;
    let quantiles: Vec<QuantileFunction> = anchors
        .iter()
        .map(|g| g.to_quantile_function(scenario.grid_size))
        .collect::<Result<_>>()?;
    let traces = run_scheme(
        &WassersteinQuantile,
        quantiles,
        profiles,
        scenario.scheme,
        scenario.subgroups.len(),
        &scenario.engine,
    )?;
    let quantile = traces.final_point();
    let n = anchors.len() as f64;
    let init = GevParams::new(
        anchors.iter().map(|g| g.mu).sum::<f64>() / n,
        anchors.iter().map(|g| g.sigma).sum::<f64>() / n,
        anchors.iter().map(|g| g.xi).sum::<f64>() / n,
    )?;
    let fitted = fit_gev(&quantile, &init)?;
    Ok(GevConsensusResult {
        quantile,
        fitted,
        partial: traces.partial(),
        anchors,
        labels,
        traces,
    })
}

/// Consensus contingency model accepted by the valuation step.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum ContingencyModel {
    Quantile(QuantileFunction),
    Gev(GevParams),
}

impl ContingencyModel {
    fn draw(&self, u: f64) -> f64 {
        match self {
            ContingencyModel::Quantile(q) => q.eval(u),
            ContingencyModel::Gev(g) => g.quantile(u).expect("u in (0, 1)"),
        }
    }
}

pub const VALUATION_PERCENTILES: [f64; 7] = [1.0, 5.0, 10.0, 50.0, 90.0, 95.0, 99.0];

/// Descriptive statistics of the discounted contingency value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationReport {
    pub mean: f64,
    pub std: f64,
    /// (level, value) pairs at levels {1, 5, 10, 50, 90, 95, 99}.
    pub percentiles: Vec<(f64, f64)>,
    pub samples: usize,
}

const VALUATION_CHUNK: usize = 4096;

/// Monte-Carlo estimate of K(0, t) = E[e^{-r(t) t} X]: inverse-transform
/// draws from the consensus distribution, discounted by the consensus curve.
/// Chunks use independent substreams and are reduced in chunk order, so the
/// result is identical in parallel and sequential builds.
pub fn value_contingency(
    curve: &SdrCurveParams,
    model: &ContingencyModel,
    t: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ValuationReport> {
    if t == 0 {
        return Err(Error::Parameter("valuation horizon must be >= 1".into()));
    }
    if n_samples == 0 {
        return Err(Error::Parameter("n_samples must be >= 1".into()));
    }
    let discount = (-sdr_curve_eval(curve, t as f64) * t as f64).exp();
    let n_chunks = n_samples.div_ceil(VALUATION_CHUNK);
    let chunks: Vec<Vec<f64>> = map_range(n_chunks, |c| {
        let mut rng = substream(seed, &[streams::VALUATION, c as u64]);
        let len = VALUATION_CHUNK.min(n_samples - c * VALUATION_CHUNK);
        (0..len)
            .map(|_| discount * model.draw(open_unit(&mut rng)))
            .collect()
    });
    let mut values: Vec<f64> = chunks.into_iter().flatten().collect();
    let mean = chunked_sum(&values, VALUATION_CHUNK) / n_samples as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let std = if n_samples > 1 {
        (chunked_sum(&sq, VALUATION_CHUNK) / (n_samples as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let percentiles = VALUATION_PERCENTILES
        .iter()
        .map(|&lvl| (lvl, percentile_sorted(&values, lvl)))
        .collect();
    Ok(ValuationReport {
        mean,
        std,
        percentiles,
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{frechet_barycenter, WeightVector};

    fn tiny_noise_params() -> ConsumptionModelParams {
        ConsumptionModelParams::new(0.0015, 0.979, 1e-12, 1e-12, 0.0).unwrap()
    }

    #[test]
    fn noiseless_growth_is_linear_in_mu() {
        let p = tiny_noise_params();
        let path = simulate_consumption(&p, 50, 1, 0);
        for (t, c) in path.iter().enumerate() {
            assert!((c.ln() - p.mu * t as f64).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn phi_zero_factor_is_pure_noise() {
        let p = ConsumptionModelParams::new(0.0, 0.0, 1e-12, 0.5, 0.0).unwrap();
        // reproduce the path's y draws from the same substream
        let mut rng = substream(3, &[streams::CONSUMPTION, 7]);
        let path = simulate_consumption(&p, 5, 3, 7);
        let mut expected_ln = 0.0;
        let mut y_prev = 0.0;
        #[allow(clippy::needless_range_loop)]
        for t in 1..=5 {
            let x = 1e-12 * standard_normal(&mut rng);
            let eps_y = 0.5 * standard_normal(&mut rng);
            expected_ln += y_prev + x;
            y_prev = eps_y; // phi = 0: y(t) = eps_y(t) exactly
            assert!((path[t].ln() - expected_ln).abs() < 1e-12);
        }
    }

    #[test]
    fn consumption_deterministic_per_seed() {
        let p = ConsumptionModelParams::new(0.0015, 0.979, 0.0078, 0.00034, 0.0005).unwrap();
        assert_eq!(
            simulate_consumption(&p, 20, 11, 4),
            simulate_consumption(&p, 20, 11, 4)
        );
        assert_ne!(
            simulate_consumption(&p, 20, 11, 4),
            simulate_consumption(&p, 20, 11, 5)
        );
    }

    #[test]
    fn monte_carlo_mean_matches_mu_t() {
        let p = ConsumptionModelParams::new(0.0015, 0.979, 0.0078, 0.00034, 0.0005).unwrap();
        let t = 10usize;
        let n = 20_000;
        let growths: Vec<f64> = (0..n)
            .map(|i| simulate_consumption(&p, t, 5, i as u64)[t].ln())
            .collect();
        let mean = crate::util::stats::mean(&growths);
        let se = crate::util::stats::std_dev(&growths) / (n as f64).sqrt();
        let expect = p.mu_t(t as f64);
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean}, expect {expect}, se {se}"
        );
    }

    #[test]
    fn sampled_agents_respect_bounds_and_sizes() {
        let scenario = SDRScenario::default_scenario(21);
        let (anchors, profiles, labels) = sample_agents(&scenario).unwrap();
        assert_eq!(anchors.len(), 90);
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 30);
        for (a, &l) in anchors.iter().zip(&labels) {
            let g = &scenario.subgroups[l];
            assert!(g.gamma.contains(a.gamma));
            assert!(g.delta.contains(a.delta));
            assert!(g.phi.contains(a.phi));
            assert!(g.y_minus1.contains(a.y_minus1));
        }
        for p in &profiles {
            assert!((0.0..=1.0).contains(&p.theta));
        }
    }

    #[test]
    fn zero_width_bounds_give_identical_agents() {
        let mut scenario = SDRScenario::default_scenario(1);
        for g in &mut scenario.subgroups {
            g.gamma = Bounds::point(1.0);
            g.delta = Bounds::point(0.03);
            g.phi = Bounds::point(0.979);
            g.y_minus1 = Bounds::point(0.0);
        }
        let (anchors, _, _) = sample_agents(&scenario).unwrap();
        assert!(anchors.iter().all(|a| *a == anchors[0]));
    }

    #[test]
    fn sampling_deterministic() {
        let scenario = SDRScenario::default_scenario(55);
        assert_eq!(
            sample_agents(&scenario).unwrap().0,
            sample_agents(&scenario).unwrap().0
        );
    }

    #[test]
    fn identical_sdr_agents_consense_immediately() {
        let mut scenario = SDRScenario::default_scenario(2);
        for g in &mut scenario.subgroups {
            g.size = 3;
            g.gamma = Bounds::point(1.2);
            g.delta = Bounds::point(0.03);
            g.phi = Bounds::point(0.979);
            g.y_minus1 = Bounds::point(0.0);
        }
        let res = run_sdr_consensus(&scenario).unwrap();
        assert!(!res.partial);
        assert_eq!(res.traces.final_trace().step_count(), 1);
        assert!((res.consensus.gamma - 1.2).abs() < 1e-12);
    }

    #[test]
    fn gev_identical_anchors_round_trip() {
        let mut scenario = GevScenario::default_scenario(4);
        for g in &mut scenario.subgroups {
            g.size = 2;
            g.mu = Bounds::point(1.0);
            g.sigma = Bounds::point(0.3);
            g.xi = Bounds::point(0.1);
        }
        let res = run_gev_consensus(&scenario).unwrap();
        assert!(!res.partial);
        assert!((res.fitted.mu - 1.0).abs() < 1e-4);
        assert!((res.fitted.sigma - 0.3).abs() < 1e-4);
        assert!((res.fitted.xi - 0.1).abs() < 1e-3);
    }

    #[test]
    fn gev_location_midpoint() {
        let a = GevParams::new(0.0, 0.5, 0.1).unwrap();
        let b = GevParams::new(2.0, 0.5, 0.1).unwrap();
        let qa = a.to_quantile_function(1000).unwrap();
        let qb = b.to_quantile_function(1000).unwrap();
        let bary =
            frechet_barycenter(&WassersteinQuantile, &[qa, qb], &WeightVector::uniform(2)).unwrap();
        let expect = GevParams::new(1.0, 0.5, 0.1)
            .unwrap()
            .to_quantile_function(1000)
            .unwrap();
        for (u, v) in bary.grid().iter().zip(bary.values()) {
            assert!((v - expect.eval(*u)).abs() < 1e-6);
        }
    }

    #[test]
    fn consensus_quantiles_nondecreasing() {
        let mut scenario = GevScenario::default_scenario(8);
        for g in &mut scenario.subgroups {
            g.size = 4;
        }
        scenario.engine.max_steps = 100;
        let res = run_gev_consensus(&scenario).unwrap();
        for w in res.quantile.values().windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn valuation_degenerate_unit_payoff() {
        // constant-1 payoff via a flat quantile function
        let q = QuantileFunction::new(QuantileFunction::uniform_grid(8), vec![1.0; 8]).unwrap();
        // with gamma and sigma_y negligible, r(t) = delta to ~1e-18
        let zero_rate = SdrCurveParams::new(1e-9, 0.0, 0.0, 0.0, 0.0, 1e-9).unwrap();
        let report = value_contingency(
            &zero_rate,
            &ContingencyModel::Quantile(q.clone()),
            1,
            100,
            0,
        )
        .unwrap();
        assert!((report.mean - 1.0).abs() < 1e-9);

        // r(t) * t = 0.3
        let flat = SdrCurveParams::new(1e-9, 0.3, 0.0, 0.0, 0.0, 1e-9).unwrap();
        let report2 = value_contingency(&flat, &ContingencyModel::Quantile(q), 1, 100, 0).unwrap();
        assert!((report2.mean - (-0.3f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn valuation_percentiles_monotone_and_deterministic() {
        let curve = SdrCurveParams::new(1.0, 0.03, 0.979, 0.0, 0.0015, 0.00034).unwrap();
        let model = ContingencyModel::Gev(GevParams::new(1.0, 0.3, 0.1).unwrap());
        let a = value_contingency(&curve, &model, 50, 10_000, 17).unwrap();
        let b = value_contingency(&curve, &model, 50, 10_000, 17).unwrap();
        assert_eq!(a, b);
        for w in a.percentiles.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn valuation_discount_monotonicity() {
        let model = ContingencyModel::Gev(GevParams::new(1.0, 0.3, 0.0).unwrap());
        let low = SdrCurveParams::new(1e-9, 0.02, 0.0, 0.0, 0.0, 1e-9).unwrap();
        let high = SdrCurveParams::new(1e-9, 0.05, 0.0, 0.0, 0.0, 1e-9).unwrap();
        let v_low = value_contingency(&low, &model, 30, 5_000, 3).unwrap();
        let v_high = value_contingency(&high, &model, 30, 5_000, 3).unwrap();
        assert!(v_high.mean < v_low.mean);
    }

    #[test]
    fn valuation_se_shrinks_with_samples() {
        let model = ContingencyModel::Gev(GevParams::new(1.0, 0.3, 0.1).unwrap());
        let curve = SdrCurveParams::new(1.0, 0.03, 0.979, 0.0, 0.0015, 0.00034).unwrap();
        let small = value_contingency(&curve, &model, 10, 1_000, 9).unwrap();
        let big = value_contingency(&curve, &model, 10, 100_000, 9).unwrap();
        let se_small = small.std / (small.samples as f64).sqrt();
        let se_big = big.std / (big.samples as f64).sqrt();
        // 1/sqrt(n): a 100x sample increase should shrink the SE ~10x
        assert!(se_big < se_small / 5.0);
    }

    #[test]
    fn y_sign_brackets_the_zero_curve() {
        let base = |y: f64| SdrCurveParams::new(1.0, 0.03, 0.979, y, 0.0015, 0.00034).unwrap();
        let plus = base(0.001);
        let minus = base(-0.001);
        let zero = base(0.0);
        for t in 1..=100 {
            let t = t as f64;
            let (lo, hi) = (sdr_curve_eval(&minus, t), sdr_curve_eval(&plus, t));
            let mid = sdr_curve_eval(&zero, t);
            assert!(lo <= mid && mid <= hi, "t = {t}");
        }
    }

    #[test]
    fn invalid_bounds_rejected() {
        let mut scenario = SDRScenario::default_scenario(0);
        scenario.subgroups[0].gamma = Bounds::new(2.0, 1.0);
        assert!(matches!(sample_agents(&scenario), Err(Error::Config(_))));
    }
}
