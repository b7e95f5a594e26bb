//! Single-shooting NLP for one agent. Decision vector layout:
//! `[u_0, …, u_{N−1}, y_c]`, or only the inputs when the cooperation output
//! is held fixed (auxiliary tracking problem).

use nalgebra::DVector;

use super::LocalProblem;
use crate::solver::NlpSpec;

/// One scalar state constraint `row(x) ≤ 0`.
#[derive(Debug, Clone)]
enum StateRow {
    Upper(usize, f64),
    Lower(usize, f64),
    Half(usize),
}

pub(crate) struct ShootingProblem<'p, 'a> {
    problem: &'p LocalProblem<'a>,
    fixed_output: Option<DVector<f64>>,
    rows: Vec<StateRow>,
}

impl<'p, 'a> ShootingProblem<'p, 'a> {
    pub(crate) fn new(problem: &'p LocalProblem<'a>, fixed_output: Option<DVector<f64>>) -> Self {
        let set = problem.model.state_set();
        let mut rows = Vec::new();
        for k in 0..set.dim() {
            if set.upper()[k].is_finite() {
                rows.push(StateRow::Upper(k, set.upper()[k]));
            }
            if set.lower()[k].is_finite() {
                rows.push(StateRow::Lower(k, set.lower()[k]));
            }
        }
        rows.extend((0..set.halfspaces().len()).map(StateRow::Half));
        Self {
            problem,
            fixed_output,
            rows,
        }
    }

    fn q(&self) -> usize {
        self.problem.model.input_dim()
    }

    fn n(&self) -> usize {
        self.problem.model.state_dim()
    }

    fn inputs_len(&self) -> usize {
        self.problem.horizon * self.q()
    }

    fn output<'z>(&'z self, z: &'z [f64]) -> &'z [f64] {
        match &self.fixed_output {
            Some(y) => y.as_slice(),
            None => &z[self.inputs_len()..],
        }
    }

    /// Packs inputs and (unless fixed) the cooperation output.
    pub(crate) fn pack(&self, inputs: &[DVector<f64>], y: &DVector<f64>) -> Vec<f64> {
        let mut z: Vec<f64> = inputs.iter().flat_map(|u| u.iter().copied()).collect();
        if self.fixed_output.is_none() {
            z.extend(y.iter().copied());
        }
        z
    }

    pub(crate) fn unpack(&self, z: &[f64]) -> (Vec<DVector<f64>>, DVector<f64>) {
        let q = self.q();
        let inputs = (0..self.problem.horizon)
            .map(|k| DVector::from_column_slice(&z[k * q..(k + 1) * q]))
            .collect();
        (inputs, DVector::from_column_slice(self.output(z)))
    }

    fn row_value(&self, row: &StateRow, x: &[f64]) -> f64 {
        match *row {
            StateRow::Upper(k, b) => x[k] - b,
            StateRow::Lower(k, b) => b - x[k],
            StateRow::Half(h) => -self.problem.model.state_set().halfspaces()[h].slack(x),
        }
    }

    fn row_gradient(&self, row: &StateRow, weight: f64, g: &mut [f64]) {
        match *row {
            StateRow::Upper(k, _) => g[k] += weight,
            StateRow::Lower(k, _) => g[k] -= weight,
            StateRow::Half(h) => {
                let normal = &self.problem.model.state_set().halfspaces()[h].normal;
                for (gi, a) in g.iter_mut().zip(normal.iter()) {
                    *gi += weight * a;
                }
            }
        }
    }

    /// States `x_0..x_N` stacked into one buffer.
    fn rollout(&self, z: &[f64]) -> Vec<f64> {
        let (n, q) = (self.n(), self.q());
        let dynamics = self.problem.model.dynamics();
        let mut xs = vec![0.0; n * (self.problem.horizon + 1)];
        xs[..n].copy_from_slice(self.problem.state.as_slice());
        for k in 0..self.problem.horizon {
            let (done, rest) = xs.split_at_mut((k + 1) * n);
            dynamics.step_into(&done[k * n..], &z[k * q..(k + 1) * q], &mut rest[..n]);
        }
        xs
    }

    fn equilibrium(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dynamics = self.problem.model.dynamics();
        let mut xc = vec![0.0; self.n()];
        let mut uc = vec![0.0; self.q()];
        dynamics.equilibrium_state_into(y, &mut xc);
        dynamics.equilibrium_input_into(y, &mut uc);
        (xc, uc)
    }
}

/// `‖v‖²_M` for a dense symmetric `M`, with `v = a − b`.
fn weighted_sq(m: &nalgebra::DMatrix<f64>, a: &[f64], b: &[f64], diff: &mut [f64]) -> f64 {
    for ((d, x), y) in diff.iter_mut().zip(a).zip(b) {
        *d = x - y;
    }
    let mut total = 0.0;
    for r in 0..diff.len() {
        let mut acc = 0.0;
        for c in 0..diff.len() {
            acc += m[(r, c)] * diff[c];
        }
        total += diff[r] * acc;
    }
    total
}

/// `out += 2 M (a − b)`.
fn weighted_grad(m: &nalgebra::DMatrix<f64>, a: &[f64], b: &[f64], out: &mut [f64]) {
    for r in 0..out.len() {
        let mut acc = 0.0;
        for c in 0..out.len() {
            acc += m[(r, c)] * (a[c] - b[c]);
        }
        out[r] += 2.0 * acc;
    }
}

impl NlpSpec for ShootingProblem<'_, '_> {
    fn dim(&self) -> usize {
        self.inputs_len()
            + if self.fixed_output.is_some() {
                0
            } else {
                self.problem.model.output_dim()
            }
    }

    fn num_eq(&self) -> usize {
        self.n()
    }

    fn num_ineq(&self) -> usize {
        self.rows.len() * self.problem.horizon.saturating_sub(1)
    }

    fn evaluate(&self, z: &[f64], eq: &mut [f64], ineq: &mut [f64]) -> f64 {
        let (n, q, horizon) = (self.n(), self.q(), self.problem.horizon);
        let y = self.output(z);
        let xs = self.rollout(z);
        let (xc, uc) = self.equilibrium(y);
        let weights = &self.problem.weights;
        let mut dx = vec![0.0; n];
        let mut du = vec![0.0; q];
        let mut f = 0.0;
        for k in 0..horizon {
            f += weighted_sq(weights.state(), &xs[k * n..(k + 1) * n], &xc, &mut dx);
            f += weighted_sq(weights.input(), &z[k * q..(k + 1) * q], &uc, &mut du);
        }
        f += self.problem.coupling_cost(y);
        for (e, (x, c)) in eq.iter_mut().zip(xs[horizon * n..].iter().zip(&xc)) {
            *e = x - c;
        }
        let mut idx = 0;
        for k in 1..horizon {
            let x = &xs[k * n..(k + 1) * n];
            for row in &self.rows {
                ineq[idx] = self.row_value(row, x);
                idx += 1;
            }
        }
        f
    }

    fn gradient(&self, z: &[f64], eq_weights: &[f64], ineq_weights: &[f64], grad: &mut [f64]) {
        let (n, q, horizon) = (self.n(), self.q(), self.problem.horizon);
        let dynamics = self.problem.model.dynamics();
        let y = self.output(z);
        let xs = self.rollout(z);
        let (xc, uc) = self.equilibrium(y);
        let weights = &self.problem.weights;
        grad.fill(0.0);

        // Accumulated tracking sensitivities with respect to x_c and u_c.
        let mut sum_x = eq_weights.to_vec();
        let mut sum_u = vec![0.0; q];
        let mut costate = eq_weights.to_vec();
        let mut next_costate = vec![0.0; n];
        let mut track_x = vec![0.0; n];
        for k in (0..horizon).rev() {
            let x = &xs[k * n..(k + 1) * n];
            let u = &z[k * q..(k + 1) * q];
            track_x.fill(0.0);
            weighted_grad(weights.state(), x, &xc, &mut track_x);
            let du = &mut grad[k * q..(k + 1) * q];
            weighted_grad(weights.input(), u, &uc, du);
            for (s, d) in sum_u.iter_mut().zip(du.iter()) {
                *s += d;
            }
            for (s, t) in sum_x.iter_mut().zip(&track_x) {
                *s += t;
            }
            next_costate.copy_from_slice(&track_x);
            if k >= 1 {
                let base = (k - 1) * self.rows.len();
                for (r, row) in self.rows.iter().enumerate() {
                    let w = ineq_weights[base + r];
                    if w != 0.0 {
                        self.row_gradient(row, w, &mut next_costate);
                    }
                }
            }
            dynamics.step_vjp(x, u, &costate, &mut next_costate, du);
            std::mem::swap(&mut costate, &mut next_costate);
        }

        if self.fixed_output.is_none() {
            let offset = self.inputs_len();
            let dy = &mut grad[offset..];
            for s in sum_x.iter_mut() {
                *s = -*s;
            }
            for s in sum_u.iter_mut() {
                *s = -*s;
            }
            dynamics.equilibrium_vjp(y, &sum_x, &sum_u, dy);
            self.problem
                .cost
                .partial_gradient_into(self.problem.agent, y, &self.problem.neighbor_values, dy);
        }
    }

    fn project(&self, z: &mut [f64]) {
        let q = self.q();
        let input_set = self.problem.model.input_set();
        for chunk in z[..self.inputs_len()].chunks_mut(q) {
            for ((v, l), u) in chunk.iter_mut().zip(input_set.lower()).zip(input_set.upper()) {
                *v = v.clamp(*l, *u);
            }
        }
        if self.fixed_output.is_none() {
            let offset = self.inputs_len();
            let projected = self.problem.model.coop_output_set().project(&z[offset..]);
            z[offset..].copy_from_slice(&projected);
        }
    }
}
