//! Agent models: discrete-time dynamics, output maps, constraint sets and
//! closed-form equilibrium maps from outputs to steady states and inputs.

mod constraint;
mod models;

pub use constraint::{ConstraintSet, HalfSpace};
pub use models::{
    double_integrator_model, quadcopter_model, DoubleIntegrator, PlanarRegion, Quadcopter, GRAVITY,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid constraint set: {0}")]
    InvalidSet(String),
    #[error("invalid model parameter: {0}")]
    Parameter(String),
}

/// Discrete-time dynamics `x⁺ = f(x, u)` with output `y = h(x)` and an
/// analytic parametrization of steady states by their output.
///
/// All methods write into caller-provided slices so that rollouts inside the
/// optimizer do not allocate. The `*_vjp` methods accumulate (`+=`) the
/// vector-Jacobian product with `adj` into their gradient arguments.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    fn step_into(&self, x: &[f64], u: &[f64], next: &mut [f64]);

    /// `dx += (∂f/∂x)ᵀ adj`, `du += (∂f/∂u)ᵀ adj`.
    fn step_vjp(&self, x: &[f64], u: &[f64], adj: &[f64], dx: &mut [f64], du: &mut [f64]);

    fn output_into(&self, x: &[f64], y: &mut [f64]);

    fn equilibrium_state_into(&self, y: &[f64], x: &mut [f64]);

    fn equilibrium_input_into(&self, y: &[f64], u: &mut [f64]);

    /// `dy += (∂g_x/∂y)ᵀ adj_x + (∂g_u/∂y)ᵀ adj_u`.
    fn equilibrium_vjp(&self, y: &[f64], adj_x: &[f64], adj_u: &[f64], dy: &mut [f64]);
}

/// One agent: dynamics plus state, input and cooperation-output constraints.
#[derive(Clone)]
pub struct AgentModel {
    name: String,
    dynamics: Arc<dyn Dynamics>,
    state_set: ConstraintSet,
    input_set: ConstraintSet,
    coop_output_set: ConstraintSet,
}

impl fmt::Debug for AgentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AgentModel")
            .field("name", &self.name)
            .field("dynamics", &self.dynamics)
            .finish_non_exhaustive()
    }
}

impl AgentModel {
    /// The input set must be a box: the optimizer keeps inputs feasible by
    /// clipping.
    pub fn new(
        name: impl Into<String>,
        dynamics: Arc<dyn Dynamics>,
        state_set: ConstraintSet,
        input_set: ConstraintSet,
        coop_output_set: ConstraintSet,
    ) -> Result<Self, DynamicsError> {
        let check = |expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(DynamicsError::Dimension { expected, found })
            }
        };
        check(dynamics.state_dim(), state_set.dim())?;
        check(dynamics.input_dim(), input_set.dim())?;
        check(dynamics.output_dim(), coop_output_set.dim())?;
        if !input_set.is_box() {
            return Err(DynamicsError::InvalidSet("input set must be a box".into()));
        }
        Ok(Self {
            name: name.into(),
            dynamics,
            state_set,
            input_set,
            coop_output_set,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.dynamics.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.dynamics.output_dim()
    }

    pub fn state_set(&self) -> &ConstraintSet {
        &self.state_set
    }

    pub fn input_set(&self) -> &ConstraintSet {
        &self.input_set
    }

    pub fn coop_output_set(&self) -> &ConstraintSet {
        &self.coop_output_set
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut next = DVector::zeros(self.state_dim());
        self.dynamics.step_into(x.as_slice(), u.as_slice(), next.as_mut_slice());
        next
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.output_dim());
        self.dynamics.output_into(x.as_slice(), y.as_mut_slice());
        y
    }

    pub fn equilibrium_state(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.state_dim());
        self.dynamics.equilibrium_state_into(y.as_slice(), x.as_mut_slice());
        x
    }

    pub fn equilibrium_input(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut u = DVector::zeros(self.input_dim());
        self.dynamics.equilibrium_input_into(y.as_slice(), u.as_mut_slice());
        u
    }

    /// Smallest constraint margin of a state/input pair (negative if violated).
    pub fn pair_margin(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.state_set
            .margin(x.as_slice())
            .min(self.input_set.margin(u.as_slice()))
    }
}

/// State sequence of length `inputs.len() + 1` starting at `x0`.
pub fn rollout(
    model: &AgentModel,
    x0: &DVector<f64>,
    inputs: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>, DynamicsError> {
    let n = model.state_dim();
    if x0.len() != n {
        return Err(DynamicsError::Dimension {
            expected: n,
            found: x0.len(),
        });
    }
    if let Some(u) = inputs.iter().find(|u| u.len() != model.input_dim()) {
        return Err(DynamicsError::Dimension {
            expected: model.input_dim(),
            found: u.len(),
        });
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for u in inputs {
        let next = model.step(states.last().expect("nonempty"), u);
        states.push(next);
    }
    Ok(states)
}

/// True iff `z` satisfies every box and half-space constraint within `tol`.
pub fn check_membership(set: &ConstraintSet, z: &DVector<f64>, tol: f64) -> bool {
    set.contains(z.as_slice(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn rollout_without_inputs_is_initial_state() {
        let m = double_integrator_model(PlanarRegion::A);
        let x0 = dv(&[0.5, 1.0, 0.0, 0.0]);
        assert_eq!(rollout(&m, &x0, &[]).unwrap(), vec![x0]);
    }

    #[test]
    fn rollout_accelerating_double_integrator() {
        let m = double_integrator_model(PlanarRegion::A);
        let u = dv(&[0.25, 0.0]);
        let xs = rollout(&m, &DVector::zeros(4), &[u.clone(), u]).unwrap();
        let pos: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        let vel: Vec<f64> = xs.iter().map(|x| x[2]).collect();
        assert_eq!(pos, vec![0.0, 0.0, 0.25]);
        assert_eq!(vel, vec![0.0, 0.25, 0.5]);
    }

    #[test]
    fn rollout_rejects_bad_dimensions() {
        let m = double_integrator_model(PlanarRegion::B);
        assert!(rollout(&m, &DVector::zeros(3), &[]).is_err());
        assert!(rollout(&m, &DVector::zeros(4), &[DVector::zeros(3)]).is_err());
    }

    #[test]
    fn membership_on_appendix_sets() {
        let b = ConstraintSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        assert!(check_membership(&b, &dv(&[1.0]), 0.0));
        assert!(!check_membership(&b, &dv(&[1.001]), 1e-6));
        let c = double_integrator_model(PlanarRegion::C);
        assert!(check_membership(c.state_set(), &dv(&[3.0, 0.0, 0.0, 0.0]), 0.0));
    }
}
