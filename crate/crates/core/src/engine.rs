//! The evolutionary consensus scheme: agents repeatedly reweight their
//! neighbors (inertia-damped softmax of negative squared distances), move to
//! their local barycenter, and vote on the uniform global barycenter until
//! the group acceptance probability clears the stop rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{frechet_barycenter, MetricSpace, WeightVector};
use crate::rng::{streams, substream};
use crate::trace::{Outcome, SimulationTrace, StepRecord};
use crate::util::par::map_range;

/// Behavioral parameters ψ_i = (θ_i, ρ_i, r_i, ε_i).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    /// Inertia in [0, 1]: fraction of the previous weight row retained.
    pub theta: f64,
    /// Acceptance sensitivity > 0.
    pub rho: f64,
    /// Consensus-speed preference >= 0.
    pub r: f64,
    /// Deviation radius > 0 (consumed by the time-preference rule).
    pub epsilon: f64,
}

impl AgentProfile {
    pub fn new(theta: f64, rho: f64, r: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Parameter(format!("theta {theta} outside [0, 1]")));
        }
        if !(rho > 0.0) {
            return Err(Error::Parameter(format!("rho {rho} must be > 0")));
        }
        if !(r >= 0.0) {
            return Err(Error::Parameter(format!("r {r} must be >= 0")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Parameter(format!("epsilon {epsilon} must be > 0")));
        }
        Ok(Self {
            theta,
            rho,
            r,
            epsilon,
        })
    }
}

/// Static adjacency (true diagonal) with evolving row-stochastic weights
/// supported on it.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    pub n: usize,
    pub adjacency: Vec<Vec<bool>>,
    pub weights: Vec<Vec<f64>>,
}

impl InteractionGraph {
    /// Complete graph with uniform rows 1/n (the default topology).
    pub fn complete(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![vec![true; n]; n],
            weights: vec![vec![1.0 / n as f64; n]; n],
        }
    }

    /// Each agent linked to itself and its k nearest anchors in opinion
    /// space; uniform initial weights over the neighborhood.
    pub fn knn<S: MetricSpace>(space: &S, anchors: &[S::Point], k: usize) -> Result<Self> {
        let n = anchors.len();
        let k = k.min(n.saturating_sub(1));
        let mut adjacency = vec![vec![false; n]; n];
        for i in 0..n {
            adjacency[i][i] = true;
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                space
                    .dist(&anchors[i], &anchors[a])
                    .partial_cmp(&space.dist(&anchors[i], &anchors[b]))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            for &j in order.iter().take(k) {
                adjacency[i][j] = true;
            }
        }
        Ok(Self::with_uniform_weights(adjacency))
    }

    /// Erdős–Rényi edges with probability p plus the diagonal; rows with no
    /// non-self neighbor are re-drawn so no agent is isolated (when n > 1).
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
        let mut rng = substream(seed, &[streams::TOPOLOGY]);
        let mut adjacency = vec![vec![false; n]; n];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            adjacency[i][i] = true;
            if n == 1 {
                continue;
            }
            for _attempt in 0..10_000 {
                for j in 0..n {
                    if j != i {
                        adjacency[i][j] = rng.gen::<f64>() < p;
                    }
                }
                if adjacency[i].iter().filter(|&&a| a).count() > 1 {
                    break;
                }
            }
            if adjacency[i].iter().filter(|&&a| a).count() == 1 {
                // degenerate p: fall back to a single deterministic neighbor
                adjacency[i][(i + 1) % n] = true;
            }
        }
        Ok(Self::with_uniform_weights(adjacency))
    }

    fn with_uniform_weights(adjacency: Vec<Vec<bool>>) -> Self {
        let n = adjacency.len();
        let weights = adjacency
            .iter()
            .map(|row| {
                let deg = row.iter().filter(|&&a| a).count() as f64;
                row.iter()
                    .map(|&a| if a { 1.0 / deg } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            n,
            adjacency,
            weights,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.adjacency.len() != self.n || self.weights.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: self.adjacency.len().min(self.weights.len()),
            });
        }
        for i in 0..self.n {
            if !self.adjacency[i][i] {
                return Err(Error::Parameter(format!("adjacency diagonal false at {i}")));
            }
            let mut sum = 0.0;
            for j in 0..self.n {
                let w = self.weights[i][j];
                if w < 0.0 || (!self.adjacency[i][j] && w != 0.0) {
                    return Err(Error::InvalidWeights(format!(
                        "weight ({i},{j}) = {w} off the adjacency support"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidWeights(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i]
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(j, _)| j)
    }
}

/// How the per-step group acceptance decision is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceMode {
    /// Accept when the group probability P reaches `p_stop`.
    #[default]
    Threshold,
    /// Every agent draws an independent Bernoulli(q_i); all must accept.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub p_stop: f64,
    pub max_steps: usize,
    pub acceptance_mode: AcceptanceMode,
    /// Enables the time-preference update of r_i each step.
    pub time_update: bool,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            p_stop: 0.95,
            max_steps: 500,
            acceptance_mode: AcceptanceMode::Threshold,
            time_update: false,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.p_stop && self.p_stop <= 1.0) {
            return Err(Error::Parameter(format!(
                "p_stop {} outside (0, 1]",
                self.p_stop
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Parameter("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mutable per-run state shared by the step operations.
#[derive(Debug, Clone)]
pub struct EngineState<P> {
    pub t: usize,
    pub positions: Vec<P>,
    pub anchors: Vec<P>,
    pub graph: InteractionGraph,
    pub profiles: Vec<AgentProfile>,
}

impl<P: Clone> EngineState<P> {
    pub fn new(
        anchors: Vec<P>,
        profiles: Vec<AgentProfile>,
        graph: InteractionGraph,
    ) -> Result<Self> {
        if anchors.len() != profiles.len() || anchors.len() != graph.n {
            return Err(Error::DimensionMismatch {
                expected: anchors.len(),
                got: profiles.len().min(graph.n),
            });
        }
        if anchors.is_empty() {
            return Err(Error::Parameter("at least one agent required".into()));
        }
        graph.validate()?;
        Ok(Self {
            t: 0,
            positions: anchors.clone(),
            anchors,
            graph,
            profiles,
        })
    }
}

/// Softmax-reallocated weight rows: w_ij(t+1) = θ_i w_ij(t) + (1−θ_i) R_ij
/// with R_ij = softmax over N_i of −r_i d²(x_i, x_j).
pub fn weight_update<S: MetricSpace>(space: &S, state: &EngineState<S::Point>) -> Vec<Vec<f64>> {
    let n = state.graph.n;
    map_range(n, |i| {
        let profile = &state.profiles[i];
        let neighbors: Vec<usize> = state.graph.neighbors(i).collect();
        let scores: Vec<f64> = neighbors
            .iter()
            .map(|&j| -profile.r * space.dist_sq(&state.positions[i], &state.positions[j]))
            .collect();
        let max = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut row = vec![0.0; n];
        for (&j, e) in neighbors.iter().zip(&exps) {
            row[j] = profile.theta * state.graph.weights[i][j] + (1.0 - profile.theta) * e / total;
        }
        row
    })
}

/// Each agent moves to the barycenter of its neighborhood under its new
/// weight row.
pub fn opinion_update<S: MetricSpace>(
    space: &S,
    state: &EngineState<S::Point>,
    new_weights: &[Vec<f64>],
) -> Result<Vec<S::Point>> {
    let results = map_range(state.graph.n, |i| {
        let neighbors: Vec<usize> = state.graph.neighbors(i).collect();
        let points: Vec<S::Point> = neighbors
            .iter()
            .map(|&j| state.positions[j].clone())
            .collect();
        let w: Vec<f64> = neighbors.iter().map(|&j| new_weights[i][j]).collect();
        WeightVector::normalized(w)
            .and_then(|wv| frechet_barycenter(space, &points, &wv))
            .map_err(|source| Error::AgentUpdate {
                agent: i,
                source: Box::new(source),
            })
    });
    results.into_iter().collect()
}

/// Uniform-weight Fréchet barycenter of all current positions.
pub fn global_proposal<S: MetricSpace>(space: &S, positions: &[S::Point]) -> Result<S::Point> {
    frechet_barycenter(space, positions, &WeightVector::uniform(positions.len()))
}

/// q_i = exp(−ρ_i · t · d²(x_i, proposal)); t starts at 1 so q < 1 whenever
/// the agent sits away from the proposal.
pub fn acceptance_probability(rho: f64, t: usize, dist: f64) -> f64 {
    (-rho * t as f64 * dist * dist).exp()
}

/// Group probability P = Π q_i plus the accept decision under the configured
/// mode. In bernoulli mode each agent draws from its own substream.
pub fn group_acceptance(
    qs: &[f64],
    mode: AcceptanceMode,
    p_stop: f64,
    rngs: &mut [rand_chacha::ChaCha12Rng],
) -> (f64, bool) {
    let p: f64 = qs.iter().product();
    let accepted = match mode {
        AcceptanceMode::Threshold => p >= p_stop,
        AcceptanceMode::Bernoulli => qs
            .iter()
            .zip(rngs.iter_mut())
            .all(|(&q, rng)| rng.gen::<f64>() < q),
    };
    (p, accepted)
}

/// Optional consensus-speed refresh: r_i drops to 0 once every
/// neighbor sits within ε_i of the anchor (squared distance), otherwise it
/// decays as exp(−ρ_i t) times the weighted squared deviation of the
/// neighborhood from the anchor.
pub fn time_preference_update<S: MetricSpace>(
    space: &S,
    state: &EngineState<S::Point>,
    i: usize,
) -> f64 {
    let profile = &state.profiles[i];
    let mut weighted = 0.0;
    let mut all_close = true;
    for j in state.graph.neighbors(i) {
        let d_sq = space.dist_sq(&state.anchors[i], &state.positions[j]);
        if d_sq > profile.epsilon {
            all_close = false;
        }
        weighted += state.graph.weights[i][j] * d_sq;
    }
    if all_close {
        0.0
    } else {
        (-profile.rho * state.t as f64).exp() * weighted
    }
}

/// Runs the full scheme. `stream_ids` gives each agent's id inside the
/// master seed's acceptance namespace (defaults to 0..n); cluster sub-runs
/// pass global agent indices so a single-cluster run reproduces the
/// one-stage trace exactly.
pub fn run_consensus<S: MetricSpace>(
    space: &S,
    anchors: Vec<S::Point>,
    profiles: Vec<AgentProfile>,
    graph: InteractionGraph,
    config: &EngineConfig,
    stream_ids: Option<&[u64]>,
) -> Result<SimulationTrace<S::Point>> {
    config.validate()?;
    let n = anchors.len();
    let default_ids: Vec<u64>;
    let ids: &[u64] = match stream_ids {
        Some(ids) => {
            if ids.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: ids.len(),
                });
            }
            ids
        }
        None => {
            default_ids = (0..n as u64).collect();
            &default_ids
        }
    };
    let mut state = EngineState::new(anchors, profiles, graph)?;
    let mut rngs: Vec<_> = ids
        .iter()
        .map(|&id| substream(config.seed, &[streams::ACCEPTANCE, id]))
        .collect();

    let mut steps = Vec::new();
    for t in 1..=config.max_steps {
        state.t = t;
        if config.time_update {
            let new_r: Vec<f64> = map_range(n, |i| time_preference_update(space, &state, i));
            for (profile, r) in state.profiles.iter_mut().zip(new_r) {
                profile.r = r;
            }
        }
        let new_weights = weight_update(space, &state);
        let new_positions = opinion_update(space, &state, &new_weights)?;
        state.graph.weights = new_weights;
        state.positions = new_positions;

        let proposal = global_proposal(space, &state.positions)?;
        let dists: Vec<f64> = map_range(n, |i| space.dist(&state.positions[i], &proposal));
        let qs: Vec<f64> = dists
            .iter()
            .zip(&state.profiles)
            .map(|(&d, p)| acceptance_probability(p.rho, t, d))
            .collect();
        let (p, accepted) = group_acceptance(&qs, config.acceptance_mode, config.p_stop, &mut rngs);

        steps.push(StepRecord {
            step: t,
            positions: state.positions.clone(),
            proposal: proposal.clone(),
            dists,
            qs,
            group_probability: p,
            accepted,
        });
        if accepted {
            return Ok(SimulationTrace {
                steps,
                outcome: Outcome::Consensus {
                    point: proposal,
                    step: t,
                },
            });
        }
    }
    let last_proposal = steps
        .last()
        .map(|r| r.proposal.clone())
        .expect("max_steps >= 1");
    Ok(SimulationTrace {
        steps,
        outcome: Outcome::MaxSteps { last_proposal },
    })
}
