use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::shooting::ShootingProblem;
use super::{Candidate, CandidateKind, Evaluation, LocalProblem, LocalSolution, OcpConfig, OcpError};
use crate::cooperation::CooperationCost;
use crate::dynamics::AgentModel;
use crate::solver::solve_nlp;

/// Previous inputs shifted by one step with the equilibrium input appended;
/// the cooperation output is kept.
pub fn shifted_candidate(prev: &LocalSolution, model: &AgentModel) -> Candidate {
    let mut inputs: Vec<DVector<f64>> = prev.inputs[1..].to_vec();
    inputs.push(model.equilibrium_input(&prev.coop_output));
    Candidate {
        kind: CandidateKind::Shifted,
        inputs,
        coop_output: prev.coop_output.clone(),
    }
}

/// Shifted candidate whose cooperation output is moved by a seeded uniform
/// perturbation of max-norm `magnitude`, then projected back onto the
/// agent's output set.
pub fn perturbed_candidate(prev: &LocalSolution, model: &AgentModel, magnitude: f64, seed: u64) -> Candidate {
    perturb(shifted_candidate(prev, model), model, magnitude, seed)
}

/// Applies the same seeded output perturbation to an arbitrary candidate.
pub fn perturb(mut cand: Candidate, model: &AgentModel, magnitude: f64, seed: u64) -> Candidate {
    cand.kind = CandidateKind::Perturbed;
    if magnitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let moved: Vec<f64> = cand
            .coop_output
            .iter()
            .map(|v| v + magnitude * (2.0 * rng.gen::<f64>() - 1.0))
            .collect();
        cand.coop_output = DVector::from_vec(model.coop_output_set().project(&moved));
    }
    cand
}

/// Relaxation `θ` and gradient step `θ̃` of the incremental candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncrementalConfig {
    pub relaxation: f64,
    /// `None` selects `min(0.1, 1/L_i)`.
    pub step: Option<f64>,
}

impl Default for IncrementalConfig {
    fn default() -> Self {
        Self {
            relaxation: 1.0,
            step: None,
        }
    }
}

impl IncrementalConfig {
    pub fn step_for(&self, cost: &CooperationCost, agent: usize) -> f64 {
        self.step.unwrap_or_else(|| {
            let l = cost.lipschitz(agent);
            if l > 0.0 {
                (1.0 / l).min(0.1)
            } else {
                0.1
            }
        })
    }

    /// `κ = (2θ − θ̃ L θ²) / (2θ̃)`, the guaranteed coupling-cost decrease
    /// per squared projected-gradient step.
    pub fn descent_constant(&self, cost: &CooperationCost, agent: usize) -> f64 {
        let theta = self.relaxation;
        let step = self.step_for(cost, agent);
        (2.0 * theta - step * cost.lipschitz(agent) * theta * theta) / (2.0 * step)
    }
}

/// Moves the previous cooperation output a fraction `θ` along the projected
/// gradient step `T(y) − y` (computed with `problem`'s neighbor values) and
/// finds inputs reaching the new equilibrium from `problem.state`.
pub fn incremental_candidate(
    problem: &LocalProblem<'_>,
    prev: &LocalSolution,
    incr: &IncrementalConfig,
    cfg: &OcpConfig,
) -> Result<Candidate, OcpError> {
    let i = problem.agent;
    let y = &prev.coop_output;
    let step = incr.step_for(problem.cost, i);
    let target = problem.cost.pg_update(i, y, &problem.neighbor_values, step);
    let moved = y + (target - y) * incr.relaxation;
    // Convex combination of two points of Y; projecting only removes rounding.
    let coop_output = DVector::from_vec(problem.model.coop_output_set().project(moved.as_slice()));

    let shifted = shifted_candidate(prev, problem.model);
    let (inputs, _) = solve_tracking(problem, &coop_output, &shifted.inputs, cfg)?;
    Ok(Candidate {
        kind: CandidateKind::Incremental,
        inputs,
        coop_output,
    })
}

/// Steers `problem.state` to the equilibrium of a fixed cooperation output,
/// starting from `start` inputs. Fails with `TrackingInfeasible` unless the
/// result satisfies every constraint.
pub fn solve_tracking(
    problem: &LocalProblem<'_>,
    coop_output: &DVector<f64>,
    start: &[DVector<f64>],
    cfg: &OcpConfig,
) -> Result<(Vec<DVector<f64>>, Evaluation), OcpError> {
    let infeasible = OcpError::TrackingInfeasible { agent: problem.agent };
    let tracking = ShootingProblem::new(problem, Some(coop_output.clone()));
    let z0 = tracking.pack(start, coop_output);
    let sol = solve_nlp(&tracking, &z0, &cfg.solver).map_err(|_| infeasible.clone())?;
    let (inputs, _) = tracking.unpack(&sol.point);
    let ev = problem.evaluate(&inputs, coop_output)?;
    if !ev.is_feasible(cfg) {
        return Err(infeasible);
    }
    Ok((inputs, ev))
}
