use coopmpc::cooperation::{consensus_cost, CooperationSetSpec};
use coopmpc::dynamics::{double_integrator_model, quadcopter_model, rollout, AgentModel, ConstraintSet, PlanarRegion};
use coopmpc::graph::Graph;
use coopmpc::ocp::{shifted_candidate, solve_local, LocalProblem, OcpConfig, TrackingWeights, WarmStart};
use coopmpc::orchestrator::{run, AgentSpec, ExecutionMode, Swarm, SwarmConfig};
use coopmpc::solver::{solve_nlp, solve_qp, NlpSpec, QpSpec, SolverConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn region(k: u8) -> PlanarRegion {
    [PlanarRegion::A, PlanarRegion::B, PlanarRegion::C][k as usize % 3]
}

fn sample(set: &ConstraintSet, seed: u64) -> DVector<f64> {
    DVector::from_vec(set.sample(&mut ChaCha8Rng::seed_from_u64(seed), 10.0))
}

fn models() -> Vec<AgentModel> {
    vec![
        double_integrator_model(PlanarRegion::A),
        double_integrator_model(PlanarRegion::C),
        quadcopter_model(0.1).unwrap(),
    ]
}

proptest! {
    #[test]
    fn equilibria_are_fixed_points(which in 0usize..3, seed in any::<u64>()) {
        let model = &models()[which];
        let y = sample(model.coop_output_set(), seed);
        let x = model.equilibrium_state(&y);
        let u = model.equilibrium_input(&y);
        prop_assert!((model.step(&x, &u) - &x).amax() < 1e-12);
        prop_assert!((model.output(&x) - &y).amax() < 1e-12);
    }

    #[test]
    fn rollouts_compose(which in 0usize..3, split in 0usize..=6, seed in any::<u64>()) {
        let model = &models()[which];
        let x0 = sample(model.state_set(), seed);
        let inputs: Vec<_> = (0..6).map(|k| sample(model.input_set(), seed.wrapping_add(k + 1))).collect();
        let whole = rollout(model, &x0, &inputs).unwrap();
        let head = rollout(model, &x0, &inputs[..split]).unwrap();
        let tail = rollout(model, head.last().unwrap(), &inputs[split..]).unwrap();
        prop_assert_eq!(whole.len(), 7);
        prop_assert_eq!(&whole[split..], &tail[..]);
    }

    #[test]
    fn consensus_cost_is_twice_laplacian_form(
        m in 2usize..6,
        extra in proptest::collection::vec((0usize..6, 0usize..6), 0..6),
        seed in any::<u64>(),
    ) {
        let mut edges: Vec<(usize, usize)> = (1..m).map(|j| (j - 1, j)).collect();
        edges.extend(extra.into_iter().map(|(a, b)| (a % m, b % m)).filter(|(a, b)| a < b));
        edges.sort_unstable();
        edges.dedup();
        let graph = Graph::new(m, &edges).unwrap();
        let big = ConstraintSet::boxed(vec![-10.0; 2], vec![10.0; 2]).unwrap();
        let cost = consensus_cost(&graph, vec![big.clone(); m]).unwrap();
        let ys: Vec<_> = (0..m).map(|i| sample(&big, seed.wrapping_add(i as u64))).collect();
        let lap = graph.laplacian();
        let mut quad = 0.0;
        for d in 0..2 {
            let v = DVector::from_fn(m, |i, _| ys[i][d]);
            quad += v.dot(&(&lap * &v));
        }
        let v = cost.global_cost(&ys);
        prop_assert!((v - 2.0 * quad).abs() <= 1e-9 * (1.0 + v));
    }

    #[test]
    fn projection_is_a_projection(k in 0u8..3, point in proptest::collection::vec(-8.0f64..8.0, 2), seed in any::<u64>()) {
        let set = double_integrator_model(region(k)).coop_output_set().clone();
        let p = set.project(&point);
        prop_assert!(set.contains(&p, 1e-9));
        let again = set.project(&p);
        prop_assert!((again[0] - p[0]).abs() < 1e-9 && (again[1] - p[1]).abs() < 1e-9);
        // Obtuse-angle characterization against another point of the set.
        let w = sample(&set, seed);
        let inner = (point[0] - p[0]) * (w[0] - p[0]) + (point[1] - p[1]) * (w[1] - p[1]);
        prop_assert!(inner <= 1e-8);
    }
}

/// Convex quadratic over a box with a few linear inequalities, posed for
/// the augmented-Lagrangian solver.
struct BoxQp {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl NlpSpec for BoxQp {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn num_ineq(&self) -> usize {
        self.rhs.len()
    }

    fn evaluate(&self, z: &[f64], _eq: &mut [f64], ineq: &mut [f64]) -> f64 {
        let z = DVector::from_column_slice(z);
        let g = &self.rows * &z - &self.rhs;
        ineq.copy_from_slice(g.as_slice());
        0.5 * z.dot(&(&self.hessian * &z)) + self.linear.dot(&z)
    }

    fn gradient(&self, z: &[f64], _eq_weights: &[f64], ineq_weights: &[f64], grad: &mut [f64]) {
        let z = DVector::from_column_slice(z);
        let g = &self.hessian * &z + &self.linear + self.rows.transpose() * DVector::from_column_slice(ineq_weights);
        grad.copy_from_slice(g.as_slice());
    }

    fn project(&self, z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    }
}

#[test]
fn qp_and_nlp_agree_on_random_instances() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(0..=2);
        let root = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let hessian = &root * root.transpose() + DMatrix::identity(n, n) * 0.5;
        let linear = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
        let rows = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let rhs = DVector::from_fn(m, |_, _| rng.gen_range(0.1..1.0));

        let mut g = DMatrix::zeros(m + 2 * n, n);
        let mut h = DVector::zeros(m + 2 * n);
        g.rows_mut(0, m).copy_from(&rows);
        h.rows_mut(0, m).copy_from(&rhs);
        for i in 0..n {
            g[(m + 2 * i, i)] = 1.0;
            g[(m + 2 * i + 1, i)] = -1.0;
            h[m + 2 * i] = 1.0;
            h[m + 2 * i + 1] = 1.0;
        }
        let qp = QpSpec::new(hessian.clone(), linear.clone())
            .unwrap()
            .with_inequalities(g, h)
            .unwrap();
        let exact = solve_qp(&qp).unwrap();

        let nlp = BoxQp {
            hessian,
            linear,
            rows,
            rhs,
        };
        let cfg = SolverConfig {
            max_inner_iterations: 2000,
            gradient_tol: 1e-9,
            constraint_tol: 1e-9,
            ..SolverConfig::default()
        };
        let approx = solve_nlp(&nlp, &vec![0.0; n], &cfg).unwrap();
        assert!(approx.violation <= 1e-7, "violation {}", approx.violation);
        worst = worst.max((approx.objective - exact.value).abs());
    }
    assert!(worst <= 1e-6, "worst objective gap {worst}");
}

fn unit_spec(region: PlanarRegion) -> AgentSpec {
    AgentSpec {
        model: double_integrator_model(region),
        weights: TrackingWeights::scaled_identity(4, 2, 1.0, 1.0).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_never_worse_than_shifted_candidate(k in 0u8..3, seed in any::<u64>(), horizon in 3usize..8) {
        let spec = unit_spec(region(k));
        let model = &spec.model;
        let graph = Graph::new(2, &[(0, 1)]).unwrap();
        let cost = consensus_cost(&graph, vec![model.coop_output_set().clone(); 2]).unwrap();
        let y = sample(model.coop_output_set(), seed);
        let nb = vec![sample(model.coop_output_set(), seed ^ 0x55)];
        let x = model.equilibrium_state(&y);
        let problem = LocalProblem::new(0, model, &cost, &spec.weights, horizon, x.clone(), nb).unwrap();
        // A previous plan resting at y: its shift is feasible from x.
        let rest = solve_local(
            &problem,
            &WarmStart::from_candidate(coopmpc::ocp::Candidate::stationary(model, horizon, y.clone())),
            &OcpConfig::default(),
        ).unwrap();
        let shifted = shifted_candidate(&rest, model);
        let next_x = model.step(&x, &rest.inputs[0]);
        let next = LocalProblem::new(0, model, &cost, &spec.weights, horizon, next_x, problem.neighbor_values.clone()).unwrap();
        let bound = next.evaluate(&shifted.inputs, &shifted.coop_output).unwrap();
        let sol = solve_local(&next, &WarmStart::from_candidate(shifted), &OcpConfig::default()).unwrap();
        prop_assert!(sol.terminal_residual <= 1e-6);
        if bound.is_feasible(&OcpConfig::default()) {
            prop_assert!(sol.objective <= bound.objective() + 1e-12);
        }
    }

    #[test]
    fn parallel_schedule_reproduces_sequential(m in 2usize..6, extra in proptest::collection::vec((0usize..6, 0usize..6), 0..4), seed in any::<u64>()) {
        let mut edges: Vec<(usize, usize)> = (1..m).map(|j| (j - 1, j)).collect();
        edges.extend(extra.into_iter().map(|(a, b)| (a % m, b % m)).filter(|(a, b)| a < b));
        edges.sort_unstable();
        edges.dedup();
        let specs: Vec<_> = (0..m).map(|i| unit_spec(region(i as u8))).collect();
        let states: Vec<_> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let y = sample(s.model.coop_output_set(), seed.wrapping_add(i as u64));
                s.model.equilibrium_state(&(y * 0.5))
            })
            .collect();
        let build = |mode| {
            Swarm::initialize(
                specs.clone(),
                Graph::new(m, &edges).unwrap(),
                CooperationSetSpec::Consensus,
                states.clone(),
                None,
                Vec::new(),
                SwarmConfig { horizon: 5, mode, ..SwarmConfig::default() },
            )
            .unwrap()
        };
        let mut seq = build(ExecutionMode::Sequential);
        let mut par = build(ExecutionMode::Parallel);
        let a = run(&mut seq, 3, |_| {}).unwrap();
        let b = run(&mut par, 3, |_| {}).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.agents.iter().zip(&rb.agents) {
                prop_assert_eq!(&x.state, &y.state);
                prop_assert_eq!(&x.solution.inputs, &y.solution.inputs);
                prop_assert_eq!(&x.solution.coop_output, &y.solution.coop_output);
            }
        }
    }
}
