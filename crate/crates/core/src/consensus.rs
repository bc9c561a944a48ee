//! One-shot consensus-point solvers: the minimal worst-case-deviation
//! characterization (solved through its dual over barycenter weights) and
//! the acceptance-probability maximization (solved as a fixed point on the
//! weights), including the endogenous-weight Gaussian case.

use crate::error::{Error, Result};
use crate::metric::{frechet_barycenter, MetricSpace, WeightVector};
use crate::spaces::{BuresWasserstein, GaussianMeasure};
use crate::util::project_to_simplex;

/// Per-agent maximum acceptable deviation radii, plus optional objective
/// weights for the per-agent-scale variant.
#[derive(Debug, Clone)]
pub struct DeviationProfile {
    pub epsilons: Vec<f64>,
    pub thetas: Option<Vec<f64>>,
}

impl DeviationProfile {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Parameter("all deviation radii must be > 0".into()));
        }
        Ok(Self {
            epsilons,
            thetas: None,
        })
    }

    pub fn with_thetas(mut self, thetas: Vec<f64>) -> Result<Self> {
        if thetas.len() != self.epsilons.len() {
            return Err(Error::DimensionMismatch {
                expected: self.epsilons.len(),
                got: thetas.len(),
            });
        }
        if thetas.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::Parameter("thetas must be nonnegative".into()));
        }
        self.thetas = Some(thetas);
        Ok(self)
    }
}

/// Per-agent acceptance functions φ_i(s) = 1/2 (1 + e^{α_i s})^{-1} mapping
/// squared distance to acceptance probability, as printed (so φ_i(0) = 1/4).
#[derive(Debug, Clone)]
pub struct AcceptanceFunctionSpec {
    pub alphas: Vec<f64>,
}

impl AcceptanceFunctionSpec {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::Parameter("alphas must be nonnegative".into()));
        }
        Ok(Self { alphas })
    }

    /// φ_i evaluated at squared distance s.
    pub fn phi(&self, i: usize, s: f64) -> f64 {
        0.5 / (1.0 + (self.alphas[i] * s).exp())
    }

    /// ψ_i'(s) where ψ_i = -ln φ_i; equals α_i e^{α_i s} / (1 + e^{α_i s}).
    pub fn psi_prime(&self, i: usize, s: f64) -> f64 {
        let a = self.alphas[i];
        let e = (a * s).exp();
        a * e / (1.0 + e)
    }
}

/// Output of a consensus-point solve.
#[derive(Debug, Clone)]
pub struct ConsensusResult<P> {
    pub point: P,
    pub weights: WeightVector,
    pub objective: f64,
    pub feasible: bool,
    /// Per-agent feasibility flags for the per-agent-scale variant.
    pub per_agent_feasible: Option<Vec<bool>>,
}

const DUAL_GAP_TOL: f64 = 1e-6;
const DUAL_MAX_ITERS: usize = 10_000;

fn all_identical<S: MetricSpace>(space: &S, points: &[S::Point]) -> bool {
    points[1..].iter().all(|p| space.dist(&points[0], p) == 0.0)
}

/// Minimizer of the worst-case squared deviation max_i d²(x, x_i), found by
/// ascending the concave dual V(w) = min_z Σ w_i d²(z, x_i) over the simplex
/// with accelerated projected gradient steps (supergradient = squared
/// distances at the current barycenter, backtracked step size, momentum
/// restart on non-increase). The barycenter under the dual-optimal weights
/// is the consensus point.
pub fn geometric_consensus<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    profile: &DeviationProfile,
) -> Result<ConsensusResult<S::Point>> {
    let n = points.len();
    if n == 0 || profile.epsilons.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: profile.epsilons.len(),
        });
    }
    let eps_min_sq = profile
        .epsilons
        .iter()
        .fold(f64::INFINITY, |m, &e| m.min(e * e));

    if n == 1 || all_identical(space, points) {
        return Ok(ConsensusResult {
            point: points[0].clone(),
            weights: WeightVector::uniform(n),
            objective: 0.0,
            feasible: true,
            per_agent_feasible: None,
        });
    }

    // dual value and supergradient at w
    let eval = |w: &[f64]| -> Result<(S::Point, Vec<f64>, f64)> {
        let wv = WeightVector::new(w.to_vec())?;
        let z = frechet_barycenter(space, points, &wv)?;
        let grad: Vec<f64> = points.iter().map(|x| space.dist_sq(&z, x)).collect();
        let value = grad.iter().zip(w).map(|(g, wi)| g * wi).sum();
        Ok((z, grad, value))
    };

    let uniform = vec![1.0 / n as f64; n];
    let mut w = uniform.clone();
    let mut y = uniform;
    let mut momentum = 1.0f64;
    let mut lipschitz = 1.0f64;

    struct Best<P> {
        dual: f64,
        dual_w: Vec<f64>,
        primal: f64,
        point: Option<P>,
    }
    impl<P> Best<P> {
        fn track(&mut self, z: P, grad: &[f64], value: f64, wt: &[f64]) {
            let primal = grad.iter().fold(0.0f64, |m, &g| m.max(g));
            if primal < self.primal {
                self.primal = primal;
                self.point = Some(z);
            }
            if value > self.dual {
                self.dual = value;
                self.dual_w = wt.to_vec();
            }
        }
    }
    let mut best = Best {
        dual: f64::NEG_INFINITY,
        dual_w: w.clone(),
        primal: f64::INFINITY,
        point: None,
    };

    let mut gap = f64::INFINITY;
    for _ in 0..DUAL_MAX_ITERS {
        let (z, grad, v_y) = eval(&y)?;
        best.track(z, &grad, v_y, &y);
        gap = best.primal - best.dual;
        if gap <= DUAL_GAP_TOL {
            break;
        }

        // backtracking on the local curvature bound
        let mut w_new;
        let mut v_new;
        loop {
            let cand: Vec<f64> = y
                .iter()
                .zip(&grad)
                .map(|(&yi, &gi)| yi + gi / lipschitz)
                .collect();
            w_new = project_to_simplex(&cand);
            let (z2, grad2, v2) = eval(&w_new)?;
            best.track(z2, &grad2, v2, &w_new);
            v_new = v2;
            let lin: f64 = grad
                .iter()
                .zip(w_new.iter().zip(&y))
                .map(|(&g, (&a, &b))| g * (a - b))
                .sum();
            let sq: f64 = w_new.iter().zip(&y).map(|(&a, &b)| (a - b) * (a - b)).sum();
            if v_new >= v_y + lin - 0.5 * lipschitz * sq - 1e-18 || lipschitz > 1e14 {
                break;
            }
            lipschitz *= 2.0;
        }

        if v_new < v_y {
            momentum = 1.0; // restart
        }
        let momentum_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / momentum_next;
        let y_raw: Vec<f64> = w_new
            .iter()
            .zip(&w)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        y = project_to_simplex(&y_raw);
        w = w_new;
        momentum = momentum_next;
        lipschitz = (lipschitz * 0.5).max(1e-8);
    }

    if gap > DUAL_GAP_TOL {
        return Err(Error::Convergence {
            iterations: DUAL_MAX_ITERS,
            residual: gap,
        });
    }

    Ok(ConsensusResult {
        point: best.point.expect("at least one iterate evaluated"),
        weights: WeightVector::new(best.dual_w)?,
        objective: best.primal,
        feasible: best.primal <= eps_min_sq + 1e-12,
        per_agent_feasible: None,
    })
}

/// Per-agent-scale variant: with the deviation bounds binding, the problem
/// reduces to minimizing Σ θ_i d²(x, x_i), i.e. the barycenter under the
/// normalized thetas, with per-agent feasibility d² <= ε_i².
pub fn geometric_consensus_general<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    profile: &DeviationProfile,
) -> Result<ConsensusResult<S::Point>> {
    let thetas = profile
        .thetas
        .as_ref()
        .ok_or_else(|| Error::Parameter("thetas required for the generalized problem".into()))?;
    if points.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: thetas.len(),
        });
    }
    let weights = WeightVector::normalized(thetas.clone())?;
    let point = frechet_barycenter(space, points, &weights)?;
    let mut objective = 0.0;
    let mut flags = Vec::with_capacity(points.len());
    for ((x, &theta), &eps) in points.iter().zip(thetas).zip(&profile.epsilons) {
        let d_sq = space.dist_sq(&point, x);
        objective += theta * d_sq.min(eps * eps);
        flags.push(d_sq <= eps * eps + 1e-12);
    }
    let feasible = flags.iter().all(|&f| f);
    Ok(ConsensusResult {
        point,
        weights,
        objective,
        feasible,
        per_agent_feasible: Some(flags),
    })
}

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITERS: usize = 50_000;
const FIXED_POINT_DAMPING: f64 = 0.5;

/// Joint acceptance probability Π φ_i(d²(x, x_i)).
pub fn acceptance_product<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    spec: &AcceptanceFunctionSpec,
    x: &S::Point,
) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, xi)| spec.phi(i, space.dist_sq(x, xi)))
        .product()
}

/// Maximizer of the joint acceptance probability, obtained from the weight
/// fixed point w_i ∝ ψ_i'(d²(bary(w), x_i)) iterated with damping 1/2.
pub fn probabilistic_consensus<S: MetricSpace>(
    space: &S,
    points: &[S::Point],
    spec: &AcceptanceFunctionSpec,
) -> Result<ConsensusResult<S::Point>> {
    let n = points.len();
    if n == 0 || spec.alphas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spec.alphas.len(),
        });
    }
    if !spec.alphas.iter().any(|&a| a > 0.0) {
        return Err(Error::Parameter("at least one alpha must be > 0".into()));
    }

    if n == 1 || all_identical(space, points) {
        let point = points[0].clone();
        let objective = acceptance_product(space, points, spec, &point);
        return Ok(ConsensusResult {
            point,
            weights: WeightVector::uniform(n),
            objective,
            feasible: true,
            per_agent_feasible: None,
        });
    }

    let mut w = WeightVector::uniform(n);
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_ITERS {
        let z = frechet_barycenter(space, points, &w)?;
        let raw: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(i, xi)| spec.psi_prime(i, space.dist_sq(&z, xi)))
            .collect();
        let target = WeightVector::normalized(raw)?;
        let next: Vec<f64> = w
            .iter()
            .zip(target.iter())
            .map(|(&a, &b)| (1.0 - FIXED_POINT_DAMPING) * a + FIXED_POINT_DAMPING * b)
            .collect();
        let delta = next
            .iter()
            .zip(w.iter())
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
        w = WeightVector::new(next)?;
        if delta <= FIXED_POINT_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations: FIXED_POINT_MAX_ITERS,
            residual: f64::NAN,
        });
    }
    let point = frechet_barycenter(space, points, &w)?;
    let objective = acceptance_product(space, points, spec, &point);
    Ok(ConsensusResult {
        point,
        weights: w,
        objective,
        feasible: true,
        per_agent_feasible: None,
    })
}

/// Endogenous-weight Gaussian consensus: the acceptance-probability fixed
/// point run in the Bures-Wasserstein space, where the barycenter covariance
/// solves the fixed-point matrix equation.
pub fn gaussian_consensus(
    set: &[GaussianMeasure],
    spec: &AcceptanceFunctionSpec,
) -> Result<ConsensusResult<GaussianMeasure>> {
    probabilistic_consensus(&BuresWasserstein, set, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Euclidean;

    #[test]
    fn geometric_midpoint_r1() {
        let space = Euclidean::new(1);
        let pts = vec![vec![0.0], vec![1.0]];
        let profile = DeviationProfile::new(vec![10.0, 10.0]).unwrap();
        let res = geometric_consensus(&space, &pts, &profile).unwrap();
        assert!((res.point[0] - 0.5).abs() < 1e-4);
        assert!((res.objective - 0.25).abs() < 1e-6);
        assert!(res.feasible);
    }

    #[test]
    fn geometric_single_agent() {
        let space = Euclidean::new(2);
        let pts = vec![vec![1.0, 2.0]];
        let profile = DeviationProfile::new(vec![1.0]).unwrap();
        let res = geometric_consensus(&space, &pts, &profile).unwrap();
        assert_eq!(res.point, pts[0]);
        assert_eq!(res.objective, 0.0);
    }

    #[test]
    fn geometric_equilateral_triangle() {
        let space = Euclidean::new(2);
        let h = 3.0f64.sqrt() / 2.0;
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        let profile = DeviationProfile::new(vec![10.0; 3]).unwrap();
        let res = geometric_consensus(&space, &pts, &profile).unwrap();
        // circumradius 1/sqrt(3), squared 1/3
        assert!((res.objective - 1.0 / 3.0).abs() < 1e-6);
        for &wi in res.weights.iter() {
            assert!((wi - 1.0 / 3.0).abs() < 1e-3, "weights {:?}", res.weights);
        }
        assert!((res.point[0] - 0.5).abs() < 1e-3);
        assert!((res.point[1] - h / 3.0).abs() < 1e-3);
    }

    #[test]
    fn geometric_infeasible_when_radii_small() {
        let space = Euclidean::new(1);
        let pts = vec![vec![0.0], vec![2.0]];
        let profile = DeviationProfile::new(vec![0.5, 0.5]).unwrap();
        let res = geometric_consensus(&space, &pts, &profile).unwrap();
        assert!(!res.feasible); // objective 1 > 0.25
    }

    #[test]
    fn general_reduces_to_uniform_barycenter() {
        let space = Euclidean::new(1);
        let pts = vec![vec![0.0], vec![1.0], vec![5.0]];
        let profile = DeviationProfile::new(vec![100.0; 3])
            .unwrap()
            .with_thetas(vec![1.0, 1.0, 1.0])
            .unwrap();
        let res = geometric_consensus_general(&space, &pts, &profile).unwrap();
        assert!((res.point[0] - 2.0).abs() < 1e-12);
        assert!(res.feasible);
    }

    #[test]
    fn general_single_theta_selects_anchor() {
        let space = Euclidean::new(1);
        let pts = vec![vec![0.0], vec![1.0]];
        let profile = DeviationProfile::new(vec![100.0; 2])
            .unwrap()
            .with_thetas(vec![0.0, 1.0])
            .unwrap();
        let res = geometric_consensus_general(&space, &pts, &profile).unwrap();
        assert!((res.point[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probabilistic_symmetric_pair() {
        let space = Euclidean::new(1);
        let pts = vec![vec![-1.0], vec![1.0]];
        let spec = AcceptanceFunctionSpec::new(vec![1.0, 1.0]).unwrap();
        let res = probabilistic_consensus(&space, &pts, &spec).unwrap();
        assert!(res.point[0].abs() < 1e-9);
        assert!((res.weights[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn probabilistic_single_agent() {
        let space = Euclidean::new(1);
        let pts = vec![vec![3.0]];
        let spec = AcceptanceFunctionSpec::new(vec![2.0]).unwrap();
        let res = probabilistic_consensus(&space, &pts, &spec).unwrap();
        assert_eq!(res.point, pts[0]);
        assert!((res.objective - 0.25).abs() < 1e-15); // φ(0) = 1/4
    }

    #[test]
    fn probabilistic_matches_grid_search() {
        let space = Euclidean::new(1);
        let pts = vec![vec![0.0], vec![1.0]];
        let spec = AcceptanceFunctionSpec::new(vec![1.0, 3.0]).unwrap();
        let res = probabilistic_consensus(&space, &pts, &spec).unwrap();

        // independent grid-search oracle over [-0.5, 1.5] at step 1e-4
        let mut best_x = 0.0;
        let mut best_p = 0.0;
        let mut x = -0.5;
        while x <= 1.5 {
            let p = acceptance_product(&space, &pts, &spec, &vec![x]);
            if p > best_p {
                best_p = p;
                best_x = x;
            }
            x += 1e-4;
        }
        assert!((res.point[0] - best_x).abs() < 1e-3);
        assert!((res.objective - best_p).abs() < 1e-6);
    }

    #[test]
    fn probabilistic_weights_positive_and_stationary() {
        let space = Euclidean::new(2);
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.2, 1.0]];
        let spec = AcceptanceFunctionSpec::new(vec![0.7, 1.3, 2.1]).unwrap();
        let res = probabilistic_consensus(&space, &pts, &spec).unwrap();
        for &wi in res.weights.iter() {
            assert!(wi > 0.0);
        }
        // directional derivatives of ln P at the fixed point
        let ln_p = |x: &Vec<f64>| acceptance_product(&space, &pts, &spec, x).ln();
        for dim in 0..2 {
            let mut plus = res.point.clone();
            plus[dim] += 1e-5;
            let mut minus = res.point.clone();
            minus[dim] -= 1e-5;
            let deriv = (ln_p(&plus) - ln_p(&minus)) / 2e-5;
            assert!(deriv.abs() < 1e-3, "dim {dim}: {deriv}");
        }
    }

    #[test]
    fn alpha_scaling_leaves_symmetric_weights_unchanged() {
        let space = Euclidean::new(1);
        let pts = vec![vec![-2.0], vec![2.0]];
        for &scale in &[1.0, 3.0, 10.0] {
            let spec = AcceptanceFunctionSpec::new(vec![0.5 * scale, 0.5 * scale]).unwrap();
            let res = probabilistic_consensus(&space, &pts, &spec).unwrap();
            assert!((res.weights[0] - 0.5).abs() < 1e-9, "scale {scale}");
        }
    }

    #[test]
    fn acceptance_product_direct_evaluation() {
        let space = Euclidean::new(1);
        let pts = vec![vec![0.0], vec![2.0]];
        let spec = AcceptanceFunctionSpec::new(vec![1.0, 1.0]).unwrap();
        let p = acceptance_product(&space, &pts, &spec, &vec![1.0]);
        let phi1 = 0.5 / (1.0 + 1.0f64.exp());
        assert!((p - phi1 * phi1).abs() < 1e-15);
    }

    #[test]
    fn acceptance_product_alpha_zero_is_constant_quarter() {
        let space = Euclidean::new(1);
        let pts = vec![vec![0.0]];
        let spec = AcceptanceFunctionSpec::new(vec![0.0]).unwrap();
        for &x in &[-5.0, 0.0, 7.0] {
            assert!((acceptance_product(&space, &pts, &spec, &vec![x]) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_consensus_identical_inputs() {
        let g = GaussianMeasure::scalar(1.0, 2.0).unwrap();
        let spec = AcceptanceFunctionSpec::new(vec![1.0, 1.0]).unwrap();
        let res = gaussian_consensus(&[g.clone(), g.clone()], &spec).unwrap();
        assert!((res.weights[0] - 0.5).abs() < 1e-12);
        assert!(crate::spaces::bw_dist(&res.point, &g).unwrap() < 1e-8);
    }

    #[test]
    fn gaussian_consensus_matches_generic_solver() {
        let a = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let b = GaussianMeasure::scalar(0.0, 4.0).unwrap();
        let spec = AcceptanceFunctionSpec::new(vec![1.0, 1.0]).unwrap();
        let res = gaussian_consensus(&[a.clone(), b.clone()], &spec).unwrap();
        let generic = probabilistic_consensus(&BuresWasserstein, &[a, b], &spec).unwrap();
        assert!((res.weights[0] - generic.weights[0]).abs() < 1e-6);
        assert!(crate::spaces::bw_dist(&res.point, &generic.point).unwrap() < 1e-6);
    }
}
