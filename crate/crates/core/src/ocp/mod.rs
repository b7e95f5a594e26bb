//! One agent's finite-horizon problem: track a self-chosen cooperation
//! equilibrium, pay for disagreement with neighbors, and reach the chosen
//! equilibrium exactly at the end of the horizon.

mod candidates;
mod shooting;

pub use candidates::{
    incremental_candidate, perturb, perturbed_candidate, shifted_candidate, solve_tracking, IncrementalConfig,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cooperation::CooperationCost;
use crate::dynamics::{rollout, AgentModel};
use crate::solver::{solve_nlp, SolveStatus, SolverConfig, SolverError};
use shooting::ShootingProblem;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OcpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("agent {agent}: no feasible solution ({reason})")]
    Infeasible { agent: usize, reason: String },
    #[error("agent {agent}: auxiliary tracking problem has no feasible solution")]
    TrackingInfeasible { agent: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Positive definite stage-cost weights `Q` (states) and `R` (inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingWeights {
    state: DMatrix<f64>,
    input: DMatrix<f64>,
}

const EIGENVALUE_FLOOR: f64 = 1e-12;

impl TrackingWeights {
    pub fn new(state: DMatrix<f64>, input: DMatrix<f64>) -> Result<Self, OcpError> {
        for (name, m) in [("state", &state), ("input", &input)] {
            if !m.is_square() || m.nrows() == 0 {
                return Err(OcpError::Weights(format!("{name} weight must be square")));
            }
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                return Err(OcpError::Weights(format!("{name} weight must be symmetric")));
            }
            let min_eig = SymmetricEigen::new(m.clone()).eigenvalues.min();
            if min_eig.is_nan() || min_eig <= EIGENVALUE_FLOOR {
                return Err(OcpError::Weights(format!(
                    "{name} weight must be positive definite (smallest eigenvalue {min_eig})"
                )));
            }
        }
        Ok(Self { state, input })
    }

    /// `Q = state_scale·I`, `R = input_scale·I`.
    pub fn scaled_identity(
        state_dim: usize,
        input_dim: usize,
        state_scale: f64,
        input_scale: f64,
    ) -> Result<Self, OcpError> {
        Self::new(
            DMatrix::identity(state_dim, state_dim) * state_scale,
            DMatrix::identity(input_dim, input_dim) * input_scale,
        )
    }

    pub fn state(&self) -> &DMatrix<f64> {
        &self.state
    }

    pub fn input(&self) -> &DMatrix<f64> {
        &self.input
    }
}

/// Tolerances deciding whether a point is accepted as feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcpConfig {
    pub solver: SolverConfig,
    /// Max-norm bound on `x(N) − g_x(y_c)`.
    pub terminal_tol: f64,
    /// Bound on state-constraint violation along the horizon.
    pub constraint_tol: f64,
}

impl Default for OcpConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            terminal_tol: 1e-6,
            constraint_tol: 1e-6,
        }
    }
}

/// Agent `agent`'s problem at one time step.
#[derive(Debug, Clone)]
pub struct LocalProblem<'a> {
    pub agent: usize,
    pub model: &'a AgentModel,
    pub cost: &'a CooperationCost,
    pub weights: &'a TrackingWeights,
    pub horizon: usize,
    pub state: DVector<f64>,
    /// Communicated outputs, aligned with `cost.graph().neighbors(agent)`.
    pub neighbor_values: Vec<DVector<f64>>,
}

impl<'a> LocalProblem<'a> {
    pub fn new(
        agent: usize,
        model: &'a AgentModel,
        cost: &'a CooperationCost,
        weights: &'a TrackingWeights,
        horizon: usize,
        state: DVector<f64>,
        neighbor_values: Vec<DVector<f64>>,
    ) -> Result<Self, OcpError> {
        if horizon == 0 {
            return Err(OcpError::Horizon);
        }
        if agent >= cost.num_agents() {
            return Err(OcpError::Dimension(format!("agent {agent} not in cooperation graph")));
        }
        if state.len() != model.state_dim() {
            return Err(OcpError::Dimension(format!(
                "state has length {}, model expects {}",
                state.len(),
                model.state_dim()
            )));
        }
        if weights.state().nrows() != model.state_dim() || weights.input().nrows() != model.input_dim() {
            return Err(OcpError::Dimension("weight sizes do not match the model".into()));
        }
        if model.output_dim() != cost.output_dim() {
            return Err(OcpError::Dimension("model output and cooperation cost differ".into()));
        }
        let degree = cost.graph().degree(agent);
        if neighbor_values.len() != degree || neighbor_values.iter().any(|v| v.len() != cost.output_dim()) {
            return Err(OcpError::Dimension(format!(
                "agent {agent} needs {degree} neighbor outputs of length {}",
                cost.output_dim()
            )));
        }
        Ok(Self {
            agent,
            model,
            cost,
            weights,
            horizon,
            state,
            neighbor_values,
        })
    }

    /// `Σ_{j∈N_i} V_ij(y, ȳ_j) + V_ji(ȳ_j, y)`.
    pub fn coupling_cost(&self, y: &[f64]) -> f64 {
        self.cost.partial_cost(self.agent, y, &self.neighbor_values)
    }

    fn check_inputs(&self, inputs: &[DVector<f64>]) -> Result<(), OcpError> {
        if inputs.len() != self.horizon || inputs.iter().any(|u| u.len() != self.model.input_dim()) {
            return Err(OcpError::Dimension(format!(
                "expected {} inputs of length {}",
                self.horizon,
                self.model.input_dim()
            )));
        }
        Ok(())
    }

    /// Rollout, objective split and constraint residuals of a point.
    pub fn evaluate(&self, inputs: &[DVector<f64>], coop_output: &DVector<f64>) -> Result<Evaluation, OcpError> {
        self.check_inputs(inputs)?;
        if coop_output.len() != self.model.output_dim() {
            return Err(OcpError::Dimension("cooperation output has wrong length".into()));
        }
        let states = rollout(self.model, &self.state, inputs).map_err(|e| OcpError::Dimension(e.to_string()))?;
        let tracking = tracking_cost(self, &states, inputs, coop_output)?;
        let coupling = self.coupling_cost(coop_output.as_slice());
        let xc = self.model.equilibrium_state(coop_output);
        let terminal_residual = (&states[self.horizon] - xc).amax();
        let state_violation = states[1..self.horizon]
            .iter()
            .map(|x| self.model.state_set().violation(x.as_slice()))
            .fold(0.0, f64::max);
        let input_violation = inputs
            .iter()
            .map(|u| self.model.input_set().violation(u.as_slice()))
            .fold(0.0, f64::max);
        let output_violation = self.model.coop_output_set().violation(coop_output.as_slice());
        Ok(Evaluation {
            states,
            tracking,
            coupling,
            terminal_residual,
            state_violation,
            input_violation,
            output_violation,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub states: Vec<DVector<f64>>,
    pub tracking: f64,
    pub coupling: f64,
    pub terminal_residual: f64,
    pub state_violation: f64,
    pub input_violation: f64,
    pub output_violation: f64,
}

/// Inputs and cooperation output are kept inside their sets by projection,
/// so only a rounding-level slack is allowed for them.
const PROJECTED_SET_TOL: f64 = 1e-9;

impl Evaluation {
    pub fn objective(&self) -> f64 {
        self.tracking + self.coupling
    }

    pub fn is_feasible(&self, cfg: &OcpConfig) -> bool {
        self.objective().is_finite()
            && self.terminal_residual <= cfg.terminal_tol
            && self.state_violation <= cfg.constraint_tol
            && self.input_violation <= PROJECTED_SET_TOL
            && self.output_violation <= PROJECTED_SET_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    Shifted,
    Incremental,
    Perturbed,
    /// Constructed directly, e.g. a resting trajectory for a new agent.
    Stationary,
}

/// A warm start or fallback for [`solve_local`].
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub inputs: Vec<DVector<f64>>,
    pub coop_output: DVector<f64>,
}

impl Candidate {
    /// Equilibrium inputs held over the horizon, with output `y`.
    pub fn stationary(model: &AgentModel, horizon: usize, y: DVector<f64>) -> Self {
        let u = model.equilibrium_input(&y);
        Self {
            kind: CandidateKind::Stationary,
            inputs: vec![u; horizon],
            coop_output: y,
        }
    }
}

/// Where an accepted solution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionSource {
    Optimizer(SolveStatus),
    Fallback(CandidateKind),
}

impl SolutionSource {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Optimizer(SolveStatus::Converged) => "converged",
            Self::Optimizer(SolveStatus::MaxIterations) => "max_iterations",
            Self::Fallback(CandidateKind::Shifted) => "fallback_shifted",
            Self::Fallback(CandidateKind::Incremental) => "fallback_incremental",
            Self::Fallback(CandidateKind::Perturbed) => "fallback_perturbed",
            Self::Fallback(CandidateKind::Stationary) => "fallback_stationary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    pub inputs: Vec<DVector<f64>>,
    pub coop_output: DVector<f64>,
    /// `x(0|t), …, x(N|t)`.
    pub states: Vec<DVector<f64>>,
    pub objective: f64,
    pub tracking_cost: f64,
    pub coupling_cost: f64,
    pub terminal_residual: f64,
    pub source: SolutionSource,
    pub iterations: usize,
}

impl LocalSolution {
    fn from_evaluation(inputs: Vec<DVector<f64>>, coop_output: DVector<f64>, ev: Evaluation, source: SolutionSource, iterations: usize) -> Self {
        Self {
            objective: ev.objective(),
            tracking_cost: ev.tracking,
            coupling_cost: ev.coupling,
            terminal_residual: ev.terminal_residual,
            states: ev.states,
            inputs,
            coop_output,
            source,
            iterations,
        }
    }

    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn first_input(&self) -> &DVector<f64> {
        &self.inputs[0]
    }
}

/// `Σ_{k<N} ‖x(k) − g_x(y_c)‖²_Q + ‖u(k) − g_u(y_c)‖²_R`; the terminal cost
/// vanishes under the terminal equality constraint.
pub fn tracking_cost(
    problem: &LocalProblem<'_>,
    states: &[DVector<f64>],
    inputs: &[DVector<f64>],
    coop_output: &DVector<f64>,
) -> Result<f64, OcpError> {
    problem.check_inputs(inputs)?;
    if states.len() < problem.horizon {
        return Err(OcpError::Dimension(format!(
            "need at least {} states, got {}",
            problem.horizon,
            states.len()
        )));
    }
    let xc = problem.model.equilibrium_state(coop_output);
    let uc = problem.model.equilibrium_input(coop_output);
    let q = problem.weights.state();
    let r = problem.weights.input();
    let mut total = 0.0;
    for (x, u) in states.iter().zip(inputs) {
        let dx = x - &xc;
        let du = u - &uc;
        total += dx.dot(&(q * &dx)) + du.dot(&(r * &du));
    }
    Ok(total)
}

/// Local objective: tracking cost plus both directions of every coupling term.
pub fn objective(problem: &LocalProblem<'_>, inputs: &[DVector<f64>], coop_output: &DVector<f64>) -> Result<f64, OcpError> {
    Ok(problem.evaluate(inputs, coop_output)?.objective())
}

/// Warm start for [`solve_local`]. The optimizer starts at `start` if given,
/// otherwise at the best feasible fallback. Every feasible candidate (the
/// start included) bounds the accepted objective from above.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarmStart {
    pub start: Option<Candidate>,
    pub fallbacks: Vec<Candidate>,
}

impl WarmStart {
    pub fn from_candidate(candidate: Candidate) -> Self {
        Self {
            start: None,
            fallbacks: vec![candidate],
        }
    }
}

/// Gradient of the local objective with respect to `[u_0, …, u_{N−1}, y_c]`
/// (no constraint terms), computed by reverse accumulation through the rollout.
pub fn objective_gradient(problem: &LocalProblem<'_>, decision: &[f64]) -> Vec<f64> {
    use crate::solver::NlpSpec;
    let shooting = ShootingProblem::new(problem, None);
    let mut grad = vec![0.0; decision.len()];
    shooting.gradient(decision, &vec![0.0; shooting.num_eq()], &vec![0.0; shooting.num_ineq()], &mut grad);
    grad
}

/// Local objective as a function of the stacked decision vector.
pub fn objective_of_decision(problem: &LocalProblem<'_>, decision: &[f64]) -> f64 {
    use crate::solver::NlpSpec;
    let shooting = ShootingProblem::new(problem, None);
    let mut eq = vec![0.0; shooting.num_eq()];
    let mut ineq = vec![0.0; shooting.num_ineq()];
    shooting.evaluate(decision, &mut eq, &mut ineq)
}

/// Equilibrium inputs toward the projection of the current output.
pub fn default_guess(problem: &LocalProblem<'_>) -> Candidate {
    let y = DVector::from_vec(
        problem
            .model
            .coop_output_set()
            .project(problem.model.output(&problem.state).as_slice()),
    );
    Candidate::stationary(problem.model, problem.horizon, y)
}

/// Solves the agent's problem. The optimizer's point is accepted only if it
/// is feasible and no worse than every feasible candidate; otherwise the
/// best feasible candidate is returned.
pub fn solve_local(problem: &LocalProblem<'_>, warm: &WarmStart, cfg: &OcpConfig) -> Result<LocalSolution, OcpError> {
    if problem.model.state_set().violation(problem.state.as_slice()) > cfg.constraint_tol {
        return Err(OcpError::Infeasible {
            agent: problem.agent,
            reason: "current state violates the state constraints".into(),
        });
    }
    let mut best: Option<(f64, &Candidate, Evaluation)> = None;
    for cand in warm.start.iter().chain(&warm.fallbacks) {
        let ev = problem.evaluate(&cand.inputs, &cand.coop_output)?;
        if ev.is_feasible(cfg) && best.as_ref().is_none_or(|(obj, _, _)| ev.objective() < *obj) {
            best = Some((ev.objective(), cand, ev));
        }
    }

    let guess;
    let start = match (&warm.start, &best) {
        (Some(s), _) => s,
        (None, Some((_, c, _))) => *c,
        (None, None) => {
            guess = warm.fallbacks.first().cloned().unwrap_or_else(|| default_guess(problem));
            &guess
        }
    };
    let shooting = ShootingProblem::new(problem, None);
    let z0 = shooting.pack(&start.inputs, &start.coop_output);
    let optimized = match solve_nlp(&shooting, &z0, &cfg.solver) {
        Ok(sol) => Some(sol),
        Err(SolverError::NonFiniteObjective { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let iterations = optimized.as_ref().map_or(0, |s| s.inner_iterations);

    if let Some(sol) = optimized {
        let (inputs, y) = shooting.unpack(&sol.point);
        let ev = problem.evaluate(&inputs, &y)?;
        let beats = best.as_ref().is_none_or(|(obj, _, _)| ev.objective() <= *obj);
        if ev.is_feasible(cfg) && beats {
            let source = SolutionSource::Optimizer(sol.status);
            return Ok(LocalSolution::from_evaluation(inputs, y, ev, source, iterations));
        }
    }
    match best {
        Some((_, cand, ev)) => Ok(LocalSolution::from_evaluation(
            cand.inputs.clone(),
            cand.coop_output.clone(),
            ev,
            SolutionSource::Fallback(cand.kind),
            iterations,
        )),
        None => Err(OcpError::Infeasible {
            agent: problem.agent,
            reason: "optimizer found no feasible point and no feasible candidate was supplied".into(),
        }),
    }
}
