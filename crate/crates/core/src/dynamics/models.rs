use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use super::{AgentModel, ConstraintSet, Dynamics, DynamicsError};

pub const GRAVITY: f64 = 9.81;

const THRUST_GAIN: f64 = 0.91;
const VELOCITY_LIMIT: f64 = 0.25;
const INPUT_LIMIT: f64 = 0.25;

/// Planar point mass with unit sampling time: positions integrate
/// velocities, velocities integrate inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleIntegrator;

impl Dynamics for DoubleIntegrator {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn step_into(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        next[0] = x[0] + x[2];
        next[1] = x[1] + x[3];
        next[2] = x[2] + u[0];
        next[3] = x[3] + u[1];
    }

    fn step_vjp(&self, _x: &[f64], _u: &[f64], adj: &[f64], dx: &mut [f64], du: &mut [f64]) {
        dx[0] += adj[0];
        dx[1] += adj[1];
        dx[2] += adj[0] + adj[2];
        dx[3] += adj[1] + adj[3];
        du[0] += adj[2];
        du[1] += adj[3];
    }

    fn output_into(&self, x: &[f64], y: &mut [f64]) {
        y[0] = x[0];
        y[1] = x[1];
    }

    fn equilibrium_state_into(&self, y: &[f64], x: &mut [f64]) {
        x[0] = y[0];
        x[1] = y[1];
        x[2] = 0.0;
        x[3] = 0.0;
    }

    fn equilibrium_input_into(&self, _y: &[f64], u: &mut [f64]) {
        u[0] = 0.0;
        u[1] = 0.0;
    }

    fn equilibrium_vjp(&self, _y: &[f64], adj_x: &[f64], _adj_u: &[f64], dy: &mut [f64]) {
        dy[0] += adj_x[0];
        dy[1] += adj_x[1];
    }
}

/// Which of the three planar position regions of the consensus example an
/// agent is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanarRegion {
    /// Tall rectangle `[-1.1, 1.1] × [-2.1, 4.1]`.
    A,
    /// Wide rectangle `[-1.1, 4.1] × [-2.1, 2.1]`.
    B,
    /// Slightly skewed diamond around the origin.
    C,
}

const REGION_C_VERTICES: [[f64; 2]; 4] = [[3.1, -0.1], [-0.1, 3.1], [-3.1, -0.1], [-0.1, -3.1]];
const REGION_C_OUTPUT_VERTICES: [[f64; 2]; 4] = [[3.0, 0.0], [0.0, 3.0], [-3.0, 0.0], [0.0, -3.0]];

/// Double integrator confined to `region` with `|velocity|∞ ≤ 0.25` and
/// `|u|∞ ≤ 0.25`. The cooperation outputs live in the region shrunk by 0.1.
pub fn double_integrator_model(region: PlanarRegion) -> AgentModel {
    let v = VELOCITY_LIMIT;
    let inf = f64::INFINITY;
    let (state_set, output_set) = match region {
        PlanarRegion::A => (
            ConstraintSet::boxed(vec![-1.1, -2.1, -v, -v], vec![1.1, 4.1, v, v]),
            ConstraintSet::boxed(vec![-1.0, -2.0], vec![1.0, 4.0]),
        ),
        PlanarRegion::B => (
            ConstraintSet::boxed(vec![-1.1, -2.1, -v, -v], vec![4.1, 2.1, v, v]),
            ConstraintSet::boxed(vec![-1.0, -2.0], vec![4.0, 2.0]),
        ),
        PlanarRegion::C => (
            ConstraintSet::boxed(vec![-inf, -inf, -v, -v], vec![inf, inf, v, v])
                .and_then(|s| s.with_polygon((0, 1), &REGION_C_VERTICES)),
            ConstraintSet::unbounded(2).with_polygon((0, 1), &REGION_C_OUTPUT_VERTICES),
        ),
    };
    let input_set = ConstraintSet::boxed(vec![-INPUT_LIMIT; 2], vec![INPUT_LIMIT; 2]);
    AgentModel::new(
        format!("double_integrator_{region:?}").to_lowercase(),
        Arc::new(DoubleIntegrator),
        state_set.expect("region sets are valid"),
        input_set.expect("input box is valid"),
        output_set.expect("output sets are valid"),
    )
    .expect("double integrator dimensions are consistent")
}

/// Quadcopter with small-angle attitude dynamics, Euler-discretized with
/// step `h`. State: position (3), velocity (3), roll/pitch (2), their
/// rates (2). Inputs: roll/pitch commands and thrust.
#[derive(Debug, Clone, Copy)]
pub struct Quadcopter {
    h: f64,
}

impl Quadcopter {
    pub fn new(h: f64) -> Result<Self, DynamicsError> {
        if h > 0.0 && h.is_finite() {
            Ok(Self { h })
        } else {
            Err(DynamicsError::Parameter(format!("time step must be positive, got {h}")))
        }
    }

    pub fn time_step(&self) -> f64 {
        self.h
    }

    /// Continuous-time rates `ẋ = f(x, u)`.
    pub fn rates(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        dx[0] = x[3];
        dx[1] = x[4];
        dx[2] = x[5];
        dx[3] = GRAVITY * x[6].tan();
        dx[4] = GRAVITY * x[7].tan();
        dx[5] = -GRAVITY + THRUST_GAIN * u[2];
        dx[6] = -8.0 * x[6] + x[8];
        dx[7] = -8.0 * x[7] + x[9];
        dx[8] = 10.0 * (-x[6] + u[0]);
        dx[9] = 10.0 * (-x[7] + u[1]);
    }
}

impl Dynamics for Quadcopter {
    fn state_dim(&self) -> usize {
        10
    }

    fn input_dim(&self) -> usize {
        3
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn step_into(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        self.rates(x, u, next);
        for (n, xi) in next.iter_mut().zip(x) {
            *n = xi + self.h * *n;
        }
    }

    fn step_vjp(&self, x: &[f64], _u: &[f64], adj: &[f64], dx: &mut [f64], du: &mut [f64]) {
        let h = self.h;
        for (d, a) in dx.iter_mut().zip(adj) {
            *d += a;
        }
        let sec2 = |a: f64| {
            let c = a.cos();
            1.0 / (c * c)
        };
        dx[3] += h * adj[0];
        dx[4] += h * adj[1];
        dx[5] += h * adj[2];
        dx[6] += h * (GRAVITY * sec2(x[6]) * adj[3] - 8.0 * adj[6] - 10.0 * adj[8]);
        dx[7] += h * (GRAVITY * sec2(x[7]) * adj[4] - 8.0 * adj[7] - 10.0 * adj[9]);
        dx[8] += h * adj[6];
        dx[9] += h * adj[7];
        du[0] += h * 10.0 * adj[8];
        du[1] += h * 10.0 * adj[9];
        du[2] += h * THRUST_GAIN * adj[5];
    }

    fn output_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&x[..3]);
    }

    fn equilibrium_state_into(&self, y: &[f64], x: &mut [f64]) {
        x.fill(0.0);
        x[..3].copy_from_slice(y);
    }

    fn equilibrium_input_into(&self, _y: &[f64], u: &mut [f64]) {
        u[0] = 0.0;
        u[1] = 0.0;
        u[2] = GRAVITY / THRUST_GAIN;
    }

    fn equilibrium_vjp(&self, _y: &[f64], adj_x: &[f64], _adj_u: &[f64], dy: &mut [f64]) {
        for (d, a) in dy.iter_mut().zip(adj_x) {
            *d += a;
        }
    }
}

/// Quadcopter agent with `‖x‖∞ ≤ 10`, attitude commands in `[-π/2, π/2]`,
/// thrust in `[0, 2g]` and cooperation outputs in `[-8, 8]² × [0, 8]`.
pub fn quadcopter_model(h: f64) -> Result<AgentModel, DynamicsError> {
    let dynamics = Quadcopter::new(h)?;
    AgentModel::new(
        "quadcopter",
        Arc::new(dynamics),
        ConstraintSet::boxed(vec![-10.0; 10], vec![10.0; 10])?,
        ConstraintSet::boxed(
            vec![-FRAC_PI_2, -FRAC_PI_2, 0.0],
            vec![FRAC_PI_2, FRAC_PI_2, 2.0 * GRAVITY],
        )?,
        ConstraintSet::boxed(vec![-8.0, -8.0, 0.0], vec![8.0, 8.0, 8.0])?,
    )
}
