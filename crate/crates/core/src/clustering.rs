//! Metric-space k-means (farthest-point seeding, barycentric center
//! updates) and the two-stage consensus pipeline: cluster the anchors, reach
//! consensus inside each cluster, then run the scheme across the cluster
//! representatives as fictitious agents.

use rand::Rng;

use crate::engine::{run_consensus, AgentProfile, EngineConfig, InteractionGraph};
use crate::error::{Error, Result};
use crate::metric::{frechet_barycenter, MetricSpace, WeightVector};
use crate::rng::{streams, substream};
use crate::trace::{Outcome, SimulationTrace};
use crate::util::par::map_range;

/// Converged labeling with centers and per-cluster dispersion.
#[derive(Debug, Clone)]
pub struct ClusterAssignment<P> {
    /// Per-point cluster index in 0..k.
    pub labels: Vec<usize>,
    pub centers: Vec<P>,
    pub within_variances: Vec<f64>,
    /// Total objective Σ_i d²(x_i, center_{label_i}) after each round.
    pub objective_log: Vec<f64>,
}

impl<P> ClusterAssignment<P> {
    pub fn objective(&self) -> f64 {
        *self.objective_log.last().expect("at least one round")
    }
}

/// Nearest-center labels, ties broken by the lowest center index.
pub fn assign_step<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    centers: &[S::Point],
) -> Vec<usize> {
    map_range(points.len(), |i| {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in centers.iter().enumerate() {
            let d = space.dist(&points[i], c);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    })
}

/// Uniform-weight barycenter per cluster; an empty cluster is re-seeded with
/// the point currently farthest from its own center.
pub fn update_centers<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    labels: &mut [usize],
    centers: &[S::Point],
    k: usize,
) -> Result<Vec<S::Point>> {
    debug_assert_eq!(points.len(), labels.len());
    for cluster in 0..k {
        if labels.iter().all(|&l| l != cluster) {
            let far = (0..points.len())
                .max_by(|&a, &b| {
                    space
                        .dist(&points[a], &centers[labels[a]])
                        .partial_cmp(&space.dist(&points[b], &centers[labels[b]]))
                        .unwrap()
                })
                .expect("nonempty point set");
            labels[far] = cluster;
        }
    }
    let mut new_centers = Vec::with_capacity(k);
    for cluster in 0..k {
        let members: Vec<S::Point> = points
            .iter()
            .zip(labels.iter())
            .filter(|(_, &l)| l == cluster)
            .map(|(p, _)| p.clone())
            .collect();
        let w = WeightVector::uniform(members.len());
        new_centers.push(frechet_barycenter(space, &members, &w)?);
    }
    Ok(new_centers)
}

fn objective<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    labels: &[usize],
    centers: &[S::Point],
) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| space.dist_sq(p, &centers[l]))
        .sum()
}

const KMEANS_SHIFT_TOL: f64 = 1e-8;
const KMEANS_MAX_ROUNDS: usize = 200;

/// Greedy farthest-point seeds starting from a seeded random point.
fn seed_centers<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    k: usize,
    seed: u64,
) -> Vec<S::Point> {
    let mut rng = substream(seed, &[streams::KMEANS]);
    let first = rng.gen_range(0..points.len());
    let mut chosen = vec![first];
    while chosen.len() < k {
        let next = (0..points.len())
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| {
                let da = chosen
                    .iter()
                    .map(|&c| space.dist(&points[a], &points[c]))
                    .fold(f64::INFINITY, f64::min);
                let db = chosen
                    .iter()
                    .map(|&c| space.dist(&points[b], &points[c]))
                    .fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).unwrap()
            })
            .expect("k <= n");
        chosen.push(next);
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Lloyd-style alternation with a monotone objective, stopping when the
/// largest center shift drops below 1e-8 or after 200 rounds.
pub fn kmeans<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    k: usize,
    seed: u64,
) -> Result<ClusterAssignment<S::Point>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k = {k} outside 1..={n}")));
    }
    let mut centers = seed_centers(space, points, k, seed);
    let mut labels = assign_step(space, points, &centers);
    let mut log = vec![objective(space, points, &labels, &centers)];

    for _ in 0..KMEANS_MAX_ROUNDS {
        let new_centers = update_centers(space, points, &mut labels, &centers, k)?;
        let shift = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| space.dist(a, b))
            .fold(0.0f64, f64::max);
        centers = new_centers;
        labels = assign_step(space, points, &centers);
        log.push(objective(space, points, &labels, &centers));
        if shift <= KMEANS_SHIFT_TOL {
            break;
        }
    }

    let mut within = vec![0.0; k];
    for (p, &l) in points.iter().zip(&labels) {
        let count = labels.iter().filter(|&&m| m == l).count() as f64;
        within[l] += space.dist_sq(p, &centers[l]) / count;
    }
    Ok(ClusterAssignment {
        labels,
        centers,
        within_variances: within,
        objective_log: log,
    })
}

/// Final k-means objective for each candidate k, for elbow inspection.
pub fn elbow_report<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    max_k: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    (1..=max_k.min(points.len()))
        .map(|k| kmeans(space, points, k, seed).map(|a| (k, a.objective())))
        .collect()
}

/// Output of the cluster-then-consense pipeline.
#[derive(Debug, Clone)]
pub struct TwoStageResult<P> {
    pub assignment: ClusterAssignment<P>,
    /// Local traces ordered by cluster index.
    pub local_traces: Vec<SimulationTrace<P>>,
    pub global_trace: SimulationTrace<P>,
    /// True when some local run or the global run hit max_steps.
    pub partial: bool,
}

impl<P> TwoStageResult<P> {
    /// Global steps plus the slowest local run, mirroring a wall-clock view
    /// of the pipeline with local runs in parallel.
    pub fn total_steps(&self) -> usize {
        let worst_local = self
            .local_traces
            .iter()
            .map(|t| t.step_count())
            .max()
            .unwrap_or(0);
        worst_local + self.global_trace.step_count()
    }

    pub fn consensus_point(&self) -> Option<&P> {
        match &self.global_trace.outcome {
            Outcome::Consensus { point, .. } => Some(point),
            Outcome::MaxSteps { .. } => None,
        }
    }
}

/// Clusters the anchors, runs the engine inside each cluster (complete local
/// graphs, per-agent substreams keyed by global index so k = 1 reproduces
/// the one-stage run exactly), then runs the engine across the cluster
/// consensus points using per-cluster mean profiles for the fictitious
/// agents.
pub fn two_stage_consensus<S: MetricSpace>(
    space: &S,
    anchors: &[S::Point],
    profiles: &[AgentProfile],
    k: usize,
    config: &EngineConfig,
) -> Result<TwoStageResult<S::Point>> {
    if anchors.len() != profiles.len() {
        return Err(Error::DimensionMismatch {
            expected: anchors.len(),
            got: profiles.len(),
        });
    }
    let n = anchors.len();
    let assignment = kmeans(space, anchors, k, config.seed)?;

    let mut local_traces = Vec::with_capacity(k);
    let mut representatives = Vec::with_capacity(k);
    let mut fictitious = Vec::with_capacity(k);
    let mut partial = false;
    for cluster in 0..k {
        let members: Vec<usize> = (0..n)
            .filter(|&i| assignment.labels[i] == cluster)
            .collect();
        let local_anchors: Vec<S::Point> = members.iter().map(|&i| anchors[i].clone()).collect();
        let local_profiles: Vec<AgentProfile> = members.iter().map(|&i| profiles[i]).collect();
        let ids: Vec<u64> = members.iter().map(|&i| i as u64).collect();
        let graph = InteractionGraph::complete(members.len());
        let trace = run_consensus(
            space,
            local_anchors,
            local_profiles.clone(),
            graph,
            config,
            Some(&ids),
        )?;
        let representative = match &trace.outcome {
            Outcome::Consensus { point, .. } => point.clone(),
            Outcome::MaxSteps { last_proposal } => {
                partial = true;
                last_proposal.clone()
            }
        };
        let m = local_profiles.len() as f64;
        let mean = |f: fn(&AgentProfile) -> f64| local_profiles.iter().map(f).sum::<f64>() / m;
        fictitious.push(AgentProfile {
            theta: mean(|p| p.theta),
            rho: mean(|p| p.rho),
            r: mean(|p| p.r),
            epsilon: mean(|p| p.epsilon),
        });
        representatives.push(representative);
        local_traces.push(trace);
    }

    let global_ids: Vec<u64> = (0..k as u64).map(|c| n as u64 + c).collect();
    let global_trace = run_consensus(
        space,
        representatives,
        fictitious,
        InteractionGraph::complete(k),
        config,
        Some(&global_ids),
    )?;
    if matches!(global_trace.outcome, Outcome::MaxSteps { .. }) {
        partial = true;
    }
    Ok(TwoStageResult {
        assignment,
        local_traces,
        global_trace,
        partial,
    })
}
