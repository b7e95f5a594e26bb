//! Augmented-Lagrangian outer loop with a projected-gradient inner loop.
//!
//! Equality constraints `c(z) = 0` and inequality constraints `g(z) ≤ 0`
//! are priced into the merit function
//!
//! ```text
//! Φ(z) = f(z) + Σ λ_j c_j + ρ/2 Σ c_j² + 1/(2ρ) Σ (max(0, μ_k + ρ g_k)² − μ_k²)
//! ```
//!
//! while the "projectable" part of the feasible set (boxes, small
//! polytopes) is kept exact by projecting every iterate. The inner loop
//! takes Barzilai-Borwein scaled projected-gradient steps with a monotone
//! Armijo backtracking search, so `Φ` never increases within an inner solve.

use serde::{Deserialize, Serialize};

use super::SolverError;

/// A smooth NLP whose evaluators are pure functions of the decision vector.
pub trait NlpSpec {
    fn dim(&self) -> usize;

    fn num_eq(&self) -> usize {
        0
    }

    fn num_ineq(&self) -> usize {
        0
    }

    /// Returns `f(z)` and writes `c(z)` and `g(z)` into the given buffers.
    fn evaluate(&self, z: &[f64], eq: &mut [f64], ineq: &mut [f64]) -> f64;

    /// Writes `∇f(z) + Σ eq_weights_j ∇c_j(z) + Σ ineq_weights_k ∇g_k(z)` into `grad`.
    fn gradient(&self, z: &[f64], eq_weights: &[f64], ineq_weights: &[f64], grad: &mut [f64]);

    /// Euclidean projection onto the projectable set, in place.
    fn project(&self, z: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    pub constraint_tol: f64,
    pub gradient_tol: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Step shrink factor per backtracking trial.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: 30,
            max_inner_iterations: 400,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e8,
            constraint_tol: 1e-6,
            gradient_tol: 1e-6,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("initial_penalty", self.initial_penalty),
            ("max_penalty", self.max_penalty),
            ("constraint_tol", self.constraint_tol),
            ("gradient_tol", self.gradient_tol),
            ("armijo", self.armijo),
            ("backtrack", self.backtrack),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.penalty_growth <= 1.0 {
            return Err(SolverError::Config("penalty_growth must exceed 1".into()));
        }
        if self.backtrack >= 1.0 || self.armijo >= 1.0 {
            return Err(SolverError::Config("armijo and backtrack must lie in (0, 1)".into()));
        }
        if self.max_outer_iterations == 0 || self.max_inner_iterations == 0 || self.max_backtracks == 0 {
            return Err(SolverError::Config("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlpSolution {
    pub point: Vec<f64>,
    pub objective: f64,
    /// Max-norm of equality residuals and positive inequality parts.
    pub violation: f64,
    /// Max-norm of the projected Lagrangian gradient at `point`.
    pub projected_gradient: f64,
    pub status: SolveStatus,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

struct Merit<'a, P: NlpSpec + ?Sized> {
    problem: &'a P,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    rho: f64,
    eq: Vec<f64>,
    ineq: Vec<f64>,
    eq_w: Vec<f64>,
    ineq_w: Vec<f64>,
}

struct Evaluated {
    merit: f64,
    objective: f64,
    violation: f64,
}

impl<'a, P: NlpSpec + ?Sized> Merit<'a, P> {
    fn new(problem: &'a P, rho: f64) -> Self {
        let (ne, ni) = (problem.num_eq(), problem.num_ineq());
        Self {
            problem,
            lambda: vec![0.0; ne],
            mu: vec![0.0; ni],
            rho,
            eq: vec![0.0; ne],
            ineq: vec![0.0; ni],
            eq_w: vec![0.0; ne],
            ineq_w: vec![0.0; ni],
        }
    }

    fn eval(&mut self, z: &[f64]) -> Evaluated {
        let f = self.problem.evaluate(z, &mut self.eq, &mut self.ineq);
        let rho = self.rho;
        let mut merit = f;
        let mut violation: f64 = 0.0;
        for (c, l) in self.eq.iter().zip(&self.lambda) {
            merit += l * c + 0.5 * rho * c * c;
            violation = violation.max(c.abs());
        }
        for (g, m) in self.ineq.iter().zip(&self.mu) {
            let shifted = (m + rho * g).max(0.0);
            merit += (shifted * shifted - m * m) / (2.0 * rho);
            violation = violation.max(g.max(0.0));
        }
        Evaluated {
            merit,
            objective: f,
            violation,
        }
    }

    /// Gradient of the merit at `z`; relies on `eq`/`ineq` holding values at `z`.
    fn gradient_after_eval(&mut self, z: &[f64], grad: &mut [f64]) {
        let rho = self.rho;
        for ((w, c), l) in self.eq_w.iter_mut().zip(&self.eq).zip(&self.lambda) {
            *w = l + rho * c;
        }
        for ((w, g), m) in self.ineq_w.iter_mut().zip(&self.ineq).zip(&self.mu) {
            *w = (m + rho * g).max(0.0);
        }
        self.problem.gradient(z, &self.eq_w, &self.ineq_w, grad);
    }

    fn update_multipliers(&mut self, max_multiplier: f64) {
        let rho = self.rho;
        for (l, c) in self.lambda.iter_mut().zip(&self.eq) {
            *l = (*l + rho * c).clamp(-max_multiplier, max_multiplier);
        }
        for (m, g) in self.mu.iter_mut().zip(&self.ineq) {
            *m = (*m + rho * g).clamp(0.0, max_multiplier);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖P(z − grad) − z‖∞`, the first-order stationarity measure on the projectable set.
fn projected_gradient_norm<P: NlpSpec + ?Sized>(problem: &P, z: &[f64], grad: &[f64], scratch: &mut [f64]) -> f64 {
    for ((s, zi), gi) in scratch.iter_mut().zip(z).zip(grad) {
        *s = zi - gi;
    }
    problem.project(scratch);
    scratch
        .iter()
        .zip(z)
        .fold(0.0, |acc, (p, zi)| acc.max((p - zi).abs()))
}

struct InnerOutcome {
    point: Vec<f64>,
    evaluated: Evaluated,
    projected_gradient: f64,
    iterations: usize,
}

fn inner_solve<P: NlpSpec + ?Sized>(
    merit: &mut Merit<'_, P>,
    start: Vec<f64>,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<InnerOutcome, SolverError> {
    let n = start.len();
    let mut z = start;
    let mut ev = merit.eval(&z);
    if !ev.merit.is_finite() {
        return Err(SolverError::NonFiniteObjective { iterate: z });
    }
    let mut grad = vec![0.0; n];
    merit.gradient_after_eval(&z, &mut grad);
    let mut scratch = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];

    let mut pg = projected_gradient_norm(merit.problem, &z, &grad, &mut scratch);
    let mut alpha = if pg > 0.0 { (1.0 / pg).clamp(1e-10, 1e6) } else { 1.0 };
    let mut iterations = 0;

    while pg > tol && iterations < cfg.max_inner_iterations {
        iterations += 1;
        for ((d, zi), gi) in dir.iter_mut().zip(&z).zip(&grad) {
            *d = zi - alpha * gi;
        }
        merit.problem.project(&mut dir);
        for (d, zi) in dir.iter_mut().zip(&z) {
            *d -= zi;
        }
        let slope = dot(&grad, &dir);
        if slope >= 0.0 {
            // Step too small to register a descent direction numerically.
            break;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            for ((t, zi), d) in trial.iter_mut().zip(&z).zip(&dir) {
                *t = zi + step * d;
            }
            let cand = merit.eval(&trial);
            if cand.merit.is_finite() && cand.merit <= ev.merit + cfg.armijo * step * slope {
                accepted = Some(cand);
                break;
            }
            step *= cfg.backtrack;
        }
        let Some(cand) = accepted else {
            break;
        };
        debug_assert!(cand.merit <= ev.merit);

        merit.gradient_after_eval(&trial, &mut trial_grad);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for k in 0..n {
            let s = trial[k] - z[k];
            let y = trial_grad[k] - grad[k];
            ss += s * s;
            sy += s * y;
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e6) } else { 1e6 };

        std::mem::swap(&mut z, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        ev = cand;
        pg = projected_gradient_norm(merit.problem, &z, &grad, &mut scratch);
    }

    // Leave the constraint buffers consistent with the returned point.
    let evaluated = merit.eval(&z);
    Ok(InnerOutcome {
        point: z,
        evaluated,
        projected_gradient: pg,
        iterations,
    })
}

/// Solves `problem` from `start` (projected first). Deterministic given its inputs.
pub fn solve_nlp<P: NlpSpec + ?Sized>(
    problem: &P,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<NlpSolution, SolverError> {
    cfg.validate()?;
    if start.len() != problem.dim() {
        return Err(SolverError::Dimension(format!(
            "start has length {}, problem dimension is {}",
            start.len(),
            problem.dim()
        )));
    }
    let mut z = start.to_vec();
    problem.project(&mut z);

    let mut merit = Merit::new(problem, cfg.initial_penalty);
    let max_multiplier = 1e12;
    let mut prev_violation = f64::INFINITY;
    let mut inner_total = 0;
    let mut best: Option<NlpSolution> = None;

    for outer in 0..cfg.max_outer_iterations {
        let inner_tol = cfg.gradient_tol.max(1e-2 * 0.1f64.powi(outer as i32));
        let out = inner_solve(&mut merit, z, inner_tol, cfg)?;
        inner_total += out.iterations;
        z = out.point;
        let violation = out.evaluated.violation;

        // The merit gradient at z with the old multipliers equals the
        // Lagrangian gradient with the updated ones.
        let candidate = NlpSolution {
            point: z.clone(),
            objective: out.evaluated.objective,
            violation,
            projected_gradient: out.projected_gradient,
            status: SolveStatus::MaxIterations,
            outer_iterations: outer + 1,
            inner_iterations: inner_total,
        };
        let converged = violation <= cfg.constraint_tol && out.projected_gradient <= cfg.gradient_tol;
        if converged {
            return Ok(NlpSolution {
                status: SolveStatus::Converged,
                ..candidate
            });
        }
        best = Some(match best {
            None => candidate,
            Some(b) => better_of(b, candidate, cfg.constraint_tol),
        });

        merit.update_multipliers(max_multiplier);
        if violation > 0.25 * prev_violation {
            merit.rho = (merit.rho * cfg.penalty_growth).min(cfg.max_penalty);
        }
        prev_violation = violation;
    }

    let mut best = best.expect("at least one outer iteration runs");
    best.inner_iterations = inner_total;
    best.outer_iterations = cfg.max_outer_iterations;
    Ok(best)
}

fn better_of(a: NlpSolution, b: NlpSolution, tol: f64) -> NlpSolution {
    let a_feas = a.violation <= tol;
    let b_feas = b.violation <= tol;
    match (a_feas, b_feas) {
        (true, true) => {
            if b.objective <= a.objective {
                b
            } else {
                a
            }
        }
        (false, true) => b,
        (true, false) => a,
        (false, false) => {
            if b.violation <= a.violation {
                b
            } else {
                a
            }
        }
    }
}
