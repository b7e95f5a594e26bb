//! Runtime monitors for the closed loop: the value function (sum of optimal
//! tracking costs plus the global cost for cooperation), its decrease from
//! step to step, the per-step descent bound assembled from the candidates
//! that were actually constructed, the split of agents into those dominated
//! by tracking error and those dominated by the projected-gradient gap, and
//! sampled checks relating the consensus cost to the distance to the
//! consensus set.
//!
//! Monitors only observe [`StepRecord`]s; every quantity is recomputed from
//! states, inputs and cooperation outputs rather than taken from the solver.

use nalgebra::{DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cooperation::CooperationCost;
use crate::dynamics::rollout;
use crate::ocp::{solve_tracking, tracking_cost, Candidate, IncrementalConfig, LocalProblem, OcpConfig};
use crate::orchestrator::{AgentSpec, StepRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Case-split thresholds per agent (joining agents included). Missing
    /// entries fall back to `default_gamma`.
    pub gamma: Vec<f64>,
    pub default_gamma: f64,
    /// Allowed increase of the value function per step.
    pub lyapunov_slack: f64,
    /// Allowed excess over the per-step descent bound.
    pub bookkeeping_slack: f64,
    /// Compute `V(t+1) − V(t)`.
    pub lyapunov: bool,
    /// Assemble the per-step descent bound.
    pub bookkeeping: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            gamma: Vec::new(),
            default_gamma: 1.0,
            lyapunov_slack: 1e-6,
            bookkeeping_slack: 1e-6,
            lyapunov: true,
            bookkeeping: true,
        }
    }
}

impl MonitorConfig {
    pub fn gamma_for(&self, agent: usize) -> f64 {
        self.gamma.get(agent).copied().unwrap_or(self.default_gamma)
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(g) = self.gamma.iter().chain([&self.default_gamma]).find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(format!("gamma must be positive, got {g}"));
        }
        if !(self.lyapunov_slack >= 0.0 && self.bookkeeping_slack >= 0.0) {
            return Err("slacks must be nonnegative".into());
        }
        Ok(())
    }
}

/// Which descent mechanism dominates for an agent at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    /// Tracking error dominates; the shifted candidate yields the decrease.
    A,
    /// Projected-gradient gap dominates; the incremental candidate does.
    B,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::A => "a",
            Self::B => "b",
        }
    }
}

/// Label `b` iff `tracking_error_sq ≤ γ·gap_sq` (ties go to `b`).
pub fn case_label(tracking_error_sq: f64, gap_sq: f64, gamma: f64) -> CaseLabel {
    if tracking_error_sq <= gamma * gap_sq {
        CaseLabel::B
    } else {
        CaseLabel::A
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentDiagnostics {
    pub agent: usize,
    pub tracking_cost: f64,
    pub coupling_cost: f64,
    /// `‖x_i − g_x(y_c,i)‖²_Q`.
    pub tracking_error_sq: f64,
    /// `‖T(y_c,i) − y_c,i‖`, using the neighbor values read one step later.
    pub stationarity_gap: f64,
    pub label: CaseLabel,
    pub constraint_margin: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: usize,
    pub epoch: usize,
    pub value_function: f64,
    pub coop_cost: f64,
    /// Distance to the consensus set, or the cost itself for formations.
    pub coop_distance: f64,
    pub distance_is_proxy: bool,
    pub min_constraint_margin: f64,
    pub total_iterations: usize,
    /// `V(t+1) − V(t)`; `None` for the last step and across topology events.
    pub value_change: Option<f64>,
    /// Right-hand side of the per-step descent inequality.
    pub descent_bound: Option<f64>,
    pub agents: Vec<AgentDiagnostics>,
}

impl DiagnosticsRecord {
    pub fn lyapunov_ok(&self, slack: f64) -> Option<bool> {
        self.value_change.map(|dv| dv <= slack)
    }

    pub fn bookkeeping_ok(&self, slack: f64) -> Option<bool> {
        match (self.value_change, self.descent_bound) {
            (Some(dv), Some(b)) => Some(dv <= b + slack),
            _ => None,
        }
    }
}

/// Optimal tracking cost of one agent, recomputed from its plan.
fn recomputed_tracking(rec: &StepRecord, idx: usize) -> f64 {
    let a = &rec.agents[idx];
    let spec = &rec.specs[a.agent];
    let problem = LocalProblem::new(
        a.agent,
        &spec.model,
        &rec.cost,
        &spec.weights,
        rec.horizon,
        a.state.clone(),
        a.neighbor_values.clone(),
    )
    .expect("recorded problem is well-formed");
    let states = rollout(&spec.model, &a.state, &a.solution.inputs).expect("recorded plan has model dimensions");
    tracking_cost(&problem, &states, &a.solution.inputs, &a.solution.coop_output).expect("recorded plan has horizon length")
}

/// `V = Σ_i J_i^tr* + V^c(y_c*)`, recomputed from the step's accepted plans.
pub fn value_function(rec: &StepRecord) -> f64 {
    let tracking: f64 = (0..rec.agents.len()).map(|k| recomputed_tracking(rec, k)).sum();
    tracking + rec.cost.global_cost(&rec.coop_outputs())
}

/// Indices `k` with `values[k+1] − values[k] > slack`.
pub fn lyapunov_check(values: &[f64], slack: f64) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] > slack)
        .map(|(k, _)| k)
        .collect()
}

fn weighted_sq(m: &nalgebra::DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}

/// Streaming monitor turning step records into diagnostics records. The
/// record for step `t` is completed when step `t + 1` arrives.
#[derive(Debug, Clone)]
pub struct Monitor {
    config: MonitorConfig,
    incremental: IncrementalConfig,
    pending: Option<(StepRecord, f64)>,
}

impl Monitor {
    pub fn new(config: MonitorConfig, incremental: IncrementalConfig) -> Self {
        Self {
            config,
            incremental,
            pending: None,
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    /// Feeds the next step; returns the completed record of the previous one.
    pub fn observe(&mut self, rec: &StepRecord) -> Option<DiagnosticsRecord> {
        let value = value_function(rec);
        let out = self
            .pending
            .take()
            .map(|(prev, prev_value)| self.complete(&prev, prev_value, Some((rec, value))));
        self.pending = Some((rec.clone(), value));
        out
    }

    /// Completes the last observed step.
    pub fn finish(&mut self) -> Option<DiagnosticsRecord> {
        self.pending
            .take()
            .map(|(prev, value)| self.complete(&prev, value, None))
    }

    fn complete(&self, rec: &StepRecord, value: f64, next: Option<(&StepRecord, f64)>) -> DiagnosticsRecord {
        let cost: &CooperationCost = &rec.cost;
        let coop = rec.coop_outputs();
        let same_epoch = next.filter(|(n, _)| n.epoch == rec.epoch);
        let mut agents = Vec::with_capacity(rec.agents.len());
        let mut bound = 0.0;
        for (k, a) in rec.agents.iter().enumerate() {
            let spec: &AgentSpec = &rec.specs[a.agent];
            let model = &spec.model;
            let y = &a.solution.coop_output;
            let xc = model.equilibrium_state(y);
            let uc = model.equilibrium_input(y);
            let tracking_error_sq = weighted_sq(spec.weights.state(), &(&a.state - &xc));
            let stage = tracking_error_sq + weighted_sq(spec.weights.input(), &(&a.input - &uc));

            // Neighbor values agent i works with at t + 1 (or the latest
            // published ones at the end of a run or an epoch).
            let next_agent = same_epoch.map(|(n, _)| &n.agents[k]);
            let neighbor_values: Vec<DVector<f64>> = match next_agent {
                Some(na) => na.neighbor_values.clone(),
                None => cost.graph().neighbors(a.agent).iter().map(|&j| coop[j].clone()).collect(),
            };
            let step = self.incremental.step_for(cost, a.agent);
            let target = cost.pg_update(a.agent, y, &neighbor_values, step);
            let gap_sq = (&target - y).norm_squared();
            let label = case_label(tracking_error_sq, gap_sq, self.config.gamma_for(a.agent));
            let tracking = recomputed_tracking(rec, k);

            if let (true, Some(na)) = (self.config.bookkeeping, next_agent) {
                let b_term = match (label, &na.incremental) {
                    (CaseLabel::B, Some(cand)) => Some(
                        candidate_tracking(rec, a.agent, &na.state, cand) - tracking
                            - self.incremental.descent_constant(cost, a.agent) * gap_sq,
                    ),
                    _ => None,
                };
                bound += b_term.unwrap_or(-stage);
            }

            agents.push(AgentDiagnostics {
                agent: a.agent,
                tracking_cost: tracking,
                coupling_cost: cost.partial_cost(a.agent, y.as_slice(), &a.neighbor_values),
                tracking_error_sq,
                stationarity_gap: gap_sq.sqrt(),
                label,
                constraint_margin: a.constraint_margin,
                iterations: a.solution.iterations,
            });
        }
        let distance = cost.coop_set_distance(&coop);
        let (coop_distance, distance_is_proxy) = match distance {
            Ok(d) => (d.value, d.is_proxy),
            Err(_) => (f64::NAN, false),
        };
        DiagnosticsRecord {
            time: rec.time,
            epoch: rec.epoch,
            value_function: value,
            coop_cost: cost.global_cost(&coop),
            coop_distance,
            distance_is_proxy,
            min_constraint_margin: rec.agents.iter().map(|a| a.constraint_margin).fold(f64::INFINITY, f64::min),
            total_iterations: rec.agents.iter().map(|a| a.solution.iterations).sum(),
            value_change: same_epoch.filter(|_| self.config.lyapunov).map(|(_, v)| v - value),
            descent_bound: same_epoch.filter(|_| self.config.bookkeeping).map(|_| bound),
            agents,
        }
    }
}

/// Tracking cost of a candidate plan from state `x`, with the candidate's
/// own cooperation output as reference.
fn candidate_tracking(rec: &StepRecord, agent: usize, x: &DVector<f64>, cand: &Candidate) -> f64 {
    let spec = &rec.specs[agent];
    let nb = vec![DVector::zeros(rec.cost.output_dim()); rec.cost.graph().degree(agent)];
    let problem = LocalProblem::new(agent, &spec.model, &rec.cost, &spec.weights, rec.horizon, x.clone(), nb)
        .expect("recorded problem is well-formed");
    let states = rollout(&spec.model, x, &cand.inputs).expect("candidate has model dimensions");
    tracking_cost(&problem, &states, &cand.inputs, &cand.coop_output).expect("candidate has horizon length")
}

/// Worst observed ratios of the consensus sandwich
/// `λ₂(L)·d² ≤ V^c ≤ m·λ_max(L)·d²`, where `d` is the distance to the
/// consensus set restricted to the common output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub lambda2: f64,
    pub lambda_max: f64,
    pub samples: usize,
    /// Smallest `V^c / (λ₂ d²)`; below 1 means the lower bound failed.
    pub min_lower_ratio: f64,
    /// Largest `V^c / (m λ_max d²)`; above 1 means the upper bound failed.
    pub max_upper_ratio: f64,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// The upper bound carries an extra factor `m`.
    pub upper_slack_factor: f64,
}

/// Samples stacked outputs `y_i ∈ Y_i` and evaluates the sandwich. Returns
/// `None` for nonconvex (formation) costs.
pub fn sandwich_check(cost: &CooperationCost, samples: usize, seed: u64) -> Option<SandwichReport> {
    if !cost.is_convex() {
        return None;
    }
    let eig = SymmetricEigen::new(cost.graph().laplacian()).eigenvalues;
    let mut sorted: Vec<f64> = eig.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let lambda2 = sorted.get(1).copied().unwrap_or(0.0);
    let lambda_max = *sorted.last().expect("nonempty graph");
    let m = cost.num_agents() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SandwichReport {
        lambda2,
        lambda_max,
        samples: 0,
        min_lower_ratio: f64::INFINITY,
        max_upper_ratio: 0.0,
        lower_violations: 0,
        upper_violations: 0,
        upper_slack_factor: m,
    };
    for _ in 0..samples {
        let ys: Vec<DVector<f64>> = cost
            .output_sets()
            .iter()
            .map(|s| DVector::from_vec(s.sample(&mut rng, 10.0)))
            .collect();
        let Ok(d) = cost.coop_set_distance(&ys) else {
            continue;
        };
        let d2 = d.value * d.value;
        if d2 <= 1e-18 {
            continue;
        }
        let v = cost.global_cost(&ys);
        let lower = v / (lambda2 * d2);
        let upper = v / (m * lambda_max * d2);
        report.samples += 1;
        report.min_lower_ratio = report.min_lower_ratio.min(lower);
        report.max_upper_ratio = report.max_upper_ratio.max(upper);
        if lower < 1.0 - 1e-9 {
            report.lower_violations += 1;
        }
        if upper > 1.0 + 1e-9 {
            report.upper_violations += 1;
        }
    }
    Some(report)
}

/// Empirical constants behind the case-split threshold `γ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCalibration {
    pub gamma: f64,
    /// Largest sampled ratio of optimal tracking cost to `‖x − x_c‖²_Q`.
    pub c_u: f64,
    /// Largest `Q`-norm radius around sampled equilibria on which the
    /// tracking problem was feasible for every sample.
    pub epsilon: f64,
    /// Largest sampled `‖T(y) − y‖²`.
    pub c_y: f64,
    /// Sampled Lipschitz constant of the equilibrium-state map.
    pub l_gx: f64,
    pub kappa: f64,
    pub c_theta: f64,
    /// Set when `c_θ ≤ 0` and only the radius-based bounds were used.
    pub c_theta_nonpositive: bool,
}

const CALIBRATION_RADII: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];
const CALIBRATION_SAMPLES: usize = 6;

/// Estimates `γ_i ≤ min(ε²/c_Y, ε²/(4 c_u c_Y), c_θ/(4 c_u²))` with
/// `c_θ = κ − 2θ² L_gx² λ_max(Q) c_u` from sampled tracking problems.
pub fn calibrate_gamma(
    spec: &AgentSpec,
    cost: &CooperationCost,
    agent: usize,
    incremental: &IncrementalConfig,
    horizon: usize,
    ocp: &OcpConfig,
    seed: u64,
) -> GammaCalibration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = &spec.model;
    let y_set = model.coop_output_set();
    let q = spec.weights.state();
    let lambda_q = SymmetricEigen::new(q.clone()).eigenvalues.max();
    let n = model.state_dim();

    // Fixed-output tracking problems: an isolated one-agent cost keeps the
    // coupling term out of the objective.
    let alone = crate::graph::Graph::new(1, &[]).expect("single node graph");
    let lonely_cost = crate::cooperation::consensus_cost(&alone, vec![y_set.clone()]).expect("one output set");
    let optimal_tracking = |x: &DVector<f64>, y: &DVector<f64>| -> Option<f64> {
        let problem = LocalProblem::new(0, model, &lonely_cost, &spec.weights, horizon, x.clone(), Vec::new()).ok()?;
        let start = Candidate::stationary(model, horizon, y.clone()).inputs;
        solve_tracking(&problem, y, &start, ocp).ok().map(|(_, ev)| ev.tracking)
    };

    let mut equilibria = Vec::new();
    for _ in 0..CALIBRATION_SAMPLES {
        // Stay off the boundary of Y so that nearby states are admissible.
        let raw = DVector::from_vec(y_set.sample(&mut rng, 10.0));
        let center = DVector::from_column_slice(y_set.interior_point());
        equilibria.push(&center + (raw - &center) * 0.8);
    }
    let mut epsilon: f64 = 0.0;
    let mut c_u: f64 = 0.0;
    for &radius in &CALIBRATION_RADII {
        let mut all_ok = true;
        let mut ratios = Vec::new();
        for y in &equilibria {
            let xc = model.equilibrium_state(y);
            let dir = DVector::from_fn(n, |_, _| 2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0);
            let qn = weighted_sq(q, &dir).sqrt();
            let x = &xc + dir * (radius / qn);
            if !model.state_set().contains(x.as_slice(), 0.0) {
                all_ok = false;
                break;
            }
            match optimal_tracking(&x, y) {
                Some(w) => ratios.push(w / (radius * radius)),
                None => {
                    all_ok = false;
                    break;
                }
            }
        }
        if all_ok {
            epsilon = radius;
            c_u = ratios.into_iter().fold(c_u, f64::max);
            break;
        }
    }

    let mut c_y: f64 = 0.0;
    let mut l_gx: f64 = 0.0;
    let step = incremental.step_for(cost, agent);
    for _ in 0..50 {
        let y = DVector::from_vec(cost.output_set(agent).sample(&mut rng, 10.0));
        let nb: Vec<DVector<f64>> = cost
            .graph()
            .neighbors(agent)
            .iter()
            .map(|&j| DVector::from_vec(cost.output_set(j).sample(&mut rng, 10.0)))
            .collect();
        let t = cost.pg_update(agent, &y, &nb, step);
        c_y = c_y.max((&t - &y).norm_squared());
        let other = DVector::from_vec(y_set.sample(&mut rng, 10.0));
        let dy = (&other - &y).norm();
        if dy > 1e-9 {
            let dx = (model.equilibrium_state(&other) - model.equilibrium_state(&y)).norm();
            l_gx = l_gx.max(dx / dy);
        }
    }

    let theta = incremental.relaxation;
    let kappa = incremental.descent_constant(cost, agent);
    let c_theta = kappa - theta * theta * 2.0 * l_gx * l_gx * lambda_q * c_u;
    let eps2 = epsilon * epsilon;
    let c_y_safe = c_y.max(f64::MIN_POSITIVE);
    let c_u_safe = c_u.max(f64::MIN_POSITIVE);
    let mut gamma = (eps2 / c_y_safe).min(eps2 / (4.0 * c_u_safe * c_y_safe));
    let c_theta_nonpositive = c_theta <= 0.0;
    if !c_theta_nonpositive {
        gamma = gamma.min(c_theta / (4.0 * c_u_safe * c_u_safe));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        gamma = 1.0;
    }
    GammaCalibration {
        gamma,
        c_u,
        epsilon,
        c_y,
        l_gx,
        kappa,
        c_theta,
        c_theta_nonpositive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooperation::{consensus_cost, CooperationSetSpec};
    use crate::dynamics::{double_integrator_model, ConstraintSet, PlanarRegion};
    use crate::graph::Graph;
    use crate::ocp::TrackingWeights;
    use crate::orchestrator::{run, Swarm, SwarmConfig};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn spec() -> AgentSpec {
        AgentSpec {
            model: double_integrator_model(PlanarRegion::A),
            weights: TrackingWeights::scaled_identity(4, 2, 1.0, 1.0).unwrap(),
        }
    }

    fn swarm(states: Vec<DVector<f64>>, edges: &[(usize, usize)], horizon: usize) -> Swarm {
        let m = states.len();
        Swarm::initialize(
            vec![spec(); m],
            Graph::new(m, edges).unwrap(),
            CooperationSetSpec::Consensus,
            states,
            None,
            Vec::new(),
            SwarmConfig {
                horizon,
                ..SwarmConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn value_function_zero_at_cooperation_equilibrium() {
        let s = swarm(vec![dv(&[0.2, 0.1, 0.0, 0.0]); 2], &[(0, 1)], 4);
        assert_eq!(value_function(s.record()), 0.0);
    }

    #[test]
    fn single_agent_value_is_tracking_cost() {
        let s = swarm(vec![dv(&[0.5, 0.5, 0.1, 0.0])], &[], 1);
        let rec = s.record();
        let v = value_function(rec);
        assert!((v - rec.agents[0].solution.tracking_cost).abs() < 1e-12);
    }

    #[test]
    fn value_function_counts_coupling_once_per_directed_edge() {
        let s = swarm(
            vec![dv(&[-0.5, 1.0, 0.0, 0.0]), dv(&[0.5, 0.0, 0.0, 0.0]), dv(&[0.0, -1.0, 0.0, 0.0])],
            &[(0, 1), (1, 2)],
            5,
        );
        let rec = s.record();
        let objectives: f64 = rec.agents.iter().map(|a| a.solution.tracking_cost).sum();
        let coop = rec.coop_outputs();
        let mut edges = 0.0;
        for (i, j) in rec.cost.graph().edges() {
            edges += 2.0 * (&coop[i] - &coop[j]).norm_squared();
        }
        assert!((value_function(rec) - (objectives + edges)).abs() < 1e-9);
    }

    #[test]
    fn lyapunov_check_flags_increases() {
        assert!(lyapunov_check(&[1.0, 1.0, 1.0], 1e-6).is_empty());
        assert_eq!(lyapunov_check(&[3.0, 2.0, 2.5, 1.0], 1e-6), vec![1]);
    }

    #[test]
    fn case_labels() {
        assert_eq!(case_label(0.0, 0.0, 1.0), CaseLabel::B);
        assert_eq!(case_label(5.0, 0.0, 1.0), CaseLabel::A);
        assert_eq!(case_label(1.0, 2.0, 0.5), CaseLabel::B);
    }

    #[test]
    fn monitor_bookkeeping_holds_on_small_consensus() {
        let mut s = swarm(
            vec![dv(&[-0.8, 2.0, 0.0, 0.0]), dv(&[0.6, 0.5, 0.0, 0.0]), dv(&[0.0, -1.5, 0.0, 0.0])],
            &[(0, 1), (1, 2)],
            6,
        );
        let mut monitor = Monitor::new(MonitorConfig::default(), IncrementalConfig::default());
        let mut out = Vec::new();
        run(&mut s, 8, |r| out.extend(monitor.observe(r))).unwrap();
        out.extend(monitor.finish());
        assert_eq!(out.len(), 9);
        for d in &out[..8] {
            assert_eq!(d.lyapunov_ok(1e-6), Some(true), "t = {}", d.time);
            assert_eq!(d.bookkeeping_ok(1e-6), Some(true), "t = {}", d.time);
        }
        assert_eq!(out[8].value_change, None);
    }

    #[test]
    fn sandwich_two_agent_path() {
        let big = ConstraintSet::boxed(vec![-10.0; 2], vec![10.0; 2]).unwrap();
        let c = consensus_cost(&Graph::new(2, &[(0, 1)]).unwrap(), vec![big.clone(), big]).unwrap();
        let ys = [dv(&[0.0, 0.0]), dv(&[2.0, 0.0])];
        assert_eq!(c.global_cost(&ys), 8.0);
        let d = c.coop_set_distance(&ys).unwrap().value;
        assert!(2.0 * d * d <= 8.0 + 1e-9);
        let report = sandwich_check(&c, 200, 3).unwrap();
        assert!((report.lambda2 - 2.0).abs() < 1e-12);
        assert_eq!(report.upper_violations, 0);
        assert_eq!(report.lower_violations, 0);
    }

    #[test]
    fn gamma_calibration_is_positive() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let s = spec();
        let cost = consensus_cost(&g, vec![s.model.coop_output_set().clone(); 2]).unwrap();
        let cal = calibrate_gamma(&s, &cost, 0, &IncrementalConfig::default(), 6, &OcpConfig::default(), 1);
        assert!(cal.gamma > 0.0 && cal.epsilon > 0.0 && cal.c_u > 0.0);
        assert!((cal.kappa - 8.0).abs() < 1e-12);
        assert!((cal.l_gx - 1.0).abs() < 1e-9);
    }
}
