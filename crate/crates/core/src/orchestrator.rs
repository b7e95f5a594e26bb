//! The sequential closed loop: at every time step the agents optimize in
//! index order, each publishing its cooperation output before the next one
//! starts, and then all agents apply the first input of their plan.
//!
//! Agent `i` solving at time `t` sees `y_c,j(t)` for neighbors `j < i` and
//! `y_c,j(t − 1)` for neighbors `j > i`. The optional parallel mode runs
//! agents concurrently in groups chosen so that these reads are unchanged.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cooperation::{cooperation_cost, CooperationCost, CooperationError, CooperationSetSpec};
use crate::dynamics::AgentModel;
use crate::graph::{Graph, GraphError};
use crate::ocp::{
    default_guess, incremental_candidate, perturb, shifted_candidate, Candidate, IncrementalConfig, LocalProblem,
    LocalSolution, OcpConfig, OcpError, TrackingWeights, WarmStart,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OrchestratorError {
    #[error("agent {agent} has no feasible initial problem: {source}")]
    InitialInfeasible { agent: usize, source: OcpError },
    #[error("time {time}, agent {agent}: {source}")]
    Infeasible { time: usize, agent: usize, source: OcpError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cooperation(#[from] CooperationError),
    #[error("invalid swarm setup: {0}")]
    Setup(String),
}

/// Model and stage-cost weights of one agent.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub model: AgentModel,
    pub weights: TrackingWeights,
}

/// Seeded perturbation of the optimizer's starting cooperation output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub magnitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    #[default]
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub horizon: usize,
    pub ocp: OcpConfig,
    pub incremental: IncrementalConfig,
    /// Offer the incremental candidate as a second fallback.
    pub use_incremental: bool,
    pub perturbation: Option<Perturbation>,
    pub mode: ExecutionMode,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            ocp: OcpConfig::default(),
            incremental: IncrementalConfig::default(),
            use_incremental: true,
            perturbation: None,
            mode: ExecutionMode::Sequential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JoiningAgent {
    pub spec: AgentSpec,
    pub state: DVector<f64>,
    /// Cooperation output published on joining.
    pub coop_output: DVector<f64>,
}

/// Graph change taking effect once every agent has finished step `time`
/// and applied its input; new agents take part from step `time + 1`.
#[derive(Debug, Clone)]
pub struct TopologyEvent {
    pub time: usize,
    pub graph: Graph,
    pub cooperation: CooperationSetSpec,
    pub joining: Vec<JoiningAgent>,
}

/// Last cooperation output published by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Published {
    pub value: DVector<f64>,
    /// Time step of the solve that produced it; `None` for the initial guess.
    pub time: Option<usize>,
}

/// Lossless, instantaneous message store: one slot per agent holding its
/// latest published cooperation output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mailbox {
    slots: Vec<Published>,
}

impl Mailbox {
    pub fn publish(&mut self, agent: usize, value: DVector<f64>, time: usize) {
        self.slots[agent] = Published {
            value,
            time: Some(time),
        };
    }

    pub fn get(&self, agent: usize) -> &Published {
        &self.slots[agent]
    }

    /// Values of `agent`'s neighbors, aligned with `graph.neighbors(agent)`.
    pub fn read(&self, graph: &Graph, agent: usize) -> (Vec<DVector<f64>>, Vec<Option<usize>>) {
        graph
            .neighbors(agent)
            .iter()
            .map(|&j| (self.slots[j].value.clone(), self.slots[j].time))
            .unzip()
    }
}

/// One agent at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub agent: usize,
    pub state: DVector<f64>,
    pub input: DVector<f64>,
    pub output: DVector<f64>,
    pub solution: LocalSolution,
    /// Neighbor outputs used in the solve and the steps they were published at.
    pub neighbor_values: Vec<DVector<f64>>,
    pub neighbor_times: Vec<Option<usize>>,
    pub shifted: Option<Candidate>,
    pub incremental: Option<Candidate>,
    /// Smallest constraint margin of the applied state/input pair.
    pub constraint_margin: f64,
}

/// Everything that happened at one time step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub time: usize,
    /// Incremented by every topology event.
    pub epoch: usize,
    pub horizon: usize,
    pub cost: Arc<CooperationCost>,
    pub specs: Arc<Vec<AgentSpec>>,
    pub agents: Vec<AgentRecord>,
}

impl StepRecord {
    pub fn coop_outputs(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| a.solution.coop_output.clone()).collect()
    }

    pub fn outputs(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| a.output.clone()).collect()
    }
}

/// Agent groups that may optimize concurrently without changing any read
/// of the sequential order.
///
/// Agent `i` gets level `1 + max level of its neighbors j < i` (0 if none);
/// a level is a group. Agents in one group are pairwise non-adjacent, every
/// earlier neighbor sits in an earlier group and every later neighbor in a
/// later group, so processing groups in order with a barrier between them
/// reproduces the sequential mailbox reads exactly.
pub fn parallel_groups(graph: &Graph) -> Vec<Vec<usize>> {
    let mut level = vec![0usize; graph.len()];
    for i in 0..graph.len() {
        level[i] = graph
            .neighbors(i)
            .iter()
            .filter(|&&j| j < i)
            .map(|&j| level[j] + 1)
            .max()
            .unwrap_or(0);
    }
    let depth = level.iter().max().map_or(0, |l| l + 1);
    let mut groups = vec![Vec::new(); depth];
    for (i, &l) in level.iter().enumerate() {
        groups[l].push(i);
    }
    groups
}

/// Seed for agent `agent`'s perturbation at `time`, independent of the
/// execution order.
fn perturbation_seed(seed: u64, time: usize, agent: usize) -> u64 {
    // SplitMix64 finalizer over the packed triple.
    let mut z = seed ^ ((time as u64) << 20) ^ (agent as u64);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Closed-loop state of the whole swarm.
#[derive(Debug, Clone)]
pub struct Swarm {
    time: usize,
    epoch: usize,
    config: SwarmConfig,
    specs: Arc<Vec<AgentSpec>>,
    cost: Arc<CooperationCost>,
    states: Vec<DVector<f64>>,
    mailbox: Mailbox,
    current: StepRecord,
    events: Vec<TopologyEvent>,
}

impl Swarm {
    /// Solves every agent's problem at `t = 0`, with each neighbor's initial
    /// output standing in for the not-yet-published cooperation outputs, or
    /// with `initial_guesses` when given.
    pub fn initialize(
        agents: Vec<AgentSpec>,
        graph: Graph,
        cooperation: CooperationSetSpec,
        initial_states: Vec<DVector<f64>>,
        initial_guesses: Option<Vec<DVector<f64>>>,
        mut events: Vec<TopologyEvent>,
        config: SwarmConfig,
    ) -> Result<Self, OrchestratorError> {
        let m = agents.len();
        if graph.len() != m || initial_states.len() != m {
            return Err(OrchestratorError::Setup(format!(
                "{m} agents, {} graph nodes, {} initial states",
                graph.len(),
                initial_states.len()
            )));
        }
        if config.horizon == 0 {
            return Err(OrchestratorError::Setup("horizon must be at least 1".into()));
        }
        if let Some((i, _)) = agents
            .iter()
            .zip(&initial_states)
            .enumerate()
            .find(|(_, (a, x))| a.model.state_dim() != x.len())
        {
            return Err(OrchestratorError::Setup(format!("initial state of agent {i} has wrong length")));
        }
        events.sort_by_key(|e| e.time);
        let mut expected = m;
        for e in &events {
            expected += e.joining.len();
            if e.graph.len() != expected {
                return Err(OrchestratorError::Setup(format!(
                    "event at t = {} has {} graph nodes, expected {expected}",
                    e.time,
                    e.graph.len()
                )));
            }
        }
        let sets = agents.iter().map(|a| a.model.coop_output_set().clone()).collect();
        let cost = Arc::new(cooperation_cost(&graph, &cooperation, sets)?);
        let guesses = match initial_guesses {
            Some(g) if g.len() == m => g,
            Some(_) => return Err(OrchestratorError::Setup("one initial guess per agent required".into())),
            None => agents.iter().zip(&initial_states).map(|(a, x)| a.model.output(x)).collect(),
        };
        let mailbox = Mailbox {
            slots: guesses.into_iter().map(|value| Published { value, time: None }).collect(),
        };
        let specs = Arc::new(agents);
        let mut swarm = Self {
            time: 0,
            epoch: 0,
            current: StepRecord {
                time: 0,
                epoch: 0,
                horizon: config.horizon,
                cost: Arc::clone(&cost),
                specs: Arc::clone(&specs),
                agents: Vec::new(),
            },
            config,
            specs,
            cost,
            states: initial_states,
            mailbox,
            events,
        };
        swarm.current = swarm.solve_all(None).map_err(|e| match e {
            OrchestratorError::Infeasible { agent, source, .. } => OrchestratorError::InitialInfeasible { agent, source },
            other => other,
        })?;
        Ok(swarm)
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn num_agents(&self) -> usize {
        self.specs.len()
    }

    pub fn cost(&self) -> &CooperationCost {
        &self.cost
    }

    pub fn specs(&self) -> &[AgentSpec] {
        &self.specs
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }

    pub fn mailbox(&self) -> &Mailbox {
        &self.mailbox
    }

    /// Record of the current time step (states, plans, applied inputs).
    pub fn record(&self) -> &StepRecord {
        &self.current
    }

    pub fn set_mode(&mut self, mode: ExecutionMode) {
        self.config.mode = mode;
    }

    /// Applies the current inputs, processes topology events scheduled for
    /// the finished step, and solves all problems at the next time.
    pub fn step(&mut self) -> Result<&StepRecord, OrchestratorError> {
        let finished = self.time;
        for rec in &self.current.agents {
            let spec = &self.specs[rec.agent];
            self.states[rec.agent] = spec.model.step(&rec.state, &rec.input);
        }
        let mut previous: Vec<Option<LocalSolution>> =
            self.current.agents.iter().map(|r| Some(r.solution.clone())).collect();

        while self.events.first().is_some_and(|e| e.time == finished) {
            let event = self.events.remove(0);
            self.apply_event(event, &mut previous)?;
        }
        self.time = finished + 1;
        self.current = self.solve_all(Some(&previous))?;
        Ok(&self.current)
    }

    fn apply_event(&mut self, event: TopologyEvent, previous: &mut Vec<Option<LocalSolution>>) -> Result<(), OrchestratorError> {
        let mut specs: Vec<AgentSpec> = self.specs.as_ref().clone();
        for joining in event.joining {
            let model = &joining.spec.model;
            if joining.state.len() != model.state_dim() || joining.coop_output.len() != model.output_dim() {
                return Err(OrchestratorError::Setup("joining agent has wrong dimensions".into()));
            }
            let idx = specs.len();
            let cand = Candidate::stationary(model, self.config.horizon, joining.coop_output.clone());
            let states = vec![joining.state.clone(); self.config.horizon + 1];
            let xc = model.equilibrium_state(&joining.coop_output);
            let resting = LocalSolution {
                inputs: cand.inputs,
                coop_output: cand.coop_output,
                terminal_residual: (&joining.state - xc).amax(),
                states,
                objective: 0.0,
                tracking_cost: 0.0,
                coupling_cost: 0.0,
                source: crate::ocp::SolutionSource::Fallback(crate::ocp::CandidateKind::Stationary),
                iterations: 0,
            };
            self.mailbox.slots.push(Published {
                value: joining.coop_output,
                time: Some(event.time),
            });
            self.states.push(joining.state);
            previous.push(Some(resting));
            specs.push(joining.spec);
            debug_assert_eq!(idx + 1, specs.len());
        }
        let sets = specs.iter().map(|a| a.model.coop_output_set().clone()).collect();
        self.cost = Arc::new(cooperation_cost(&event.graph, &event.cooperation, sets)?);
        self.specs = Arc::new(specs);
        self.epoch += 1;
        Ok(())
    }

    fn solve_all(&mut self, previous: Option<&[Option<LocalSolution>]>) -> Result<StepRecord, OrchestratorError> {
        let m = self.num_agents();
        let mut records: Vec<Option<AgentRecord>> = vec![None; m];
        let groups = match self.config.mode {
            ExecutionMode::Sequential => (0..m).map(|i| vec![i]).collect(),
            ExecutionMode::Parallel => parallel_groups(self.cost.graph()),
        };
        for group in groups {
            let results: Vec<Result<AgentRecord, OrchestratorError>> = if group.len() == 1 {
                vec![self.solve_agent(group[0], previous)]
            } else {
                let this = &*self;
                std::thread::scope(|scope| {
                    let handles: Vec<_> = group
                        .iter()
                        .map(|&i| scope.spawn(move || this.solve_agent(i, previous)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("agent solve panicked"))
                        .collect()
                })
            };
            // Publish at the barrier, in index order.
            for result in results {
                let rec = result?;
                self.mailbox
                    .publish(rec.agent, rec.solution.coop_output.clone(), self.time);
                let i = rec.agent;
                records[i] = Some(rec);
            }
        }
        Ok(StepRecord {
            time: self.time,
            epoch: self.epoch,
            horizon: self.config.horizon,
            cost: Arc::clone(&self.cost),
            specs: Arc::clone(&self.specs),
            agents: records.into_iter().map(|r| r.expect("every agent solved")).collect(),
        })
    }

    fn solve_agent(&self, i: usize, previous: Option<&[Option<LocalSolution>]>) -> Result<AgentRecord, OrchestratorError> {
        let spec = &self.specs[i];
        let model = &spec.model;
        let cfg = &self.config;
        let fail = |source| OrchestratorError::Infeasible {
            time: self.time,
            agent: i,
            source,
        };
        let (neighbor_values, neighbor_times) = self.mailbox.read(self.cost.graph(), i);
        let problem = LocalProblem::new(
            i,
            model,
            &self.cost,
            &spec.weights,
            cfg.horizon,
            self.states[i].clone(),
            neighbor_values.clone(),
        )
        .map_err(fail)?;

        let prev = previous.and_then(|p| p[i].as_ref());
        let shifted = prev.map(|p| shifted_candidate(p, model));
        let incremental = match prev {
            Some(p) if cfg.use_incremental => match incremental_candidate(&problem, p, &cfg.incremental, &cfg.ocp) {
                Ok(c) => Some(c),
                Err(OcpError::TrackingInfeasible { .. }) => None,
                Err(e) => return Err(fail(e)),
            },
            _ => None,
        };
        let start = cfg.perturbation.filter(|p| p.magnitude > 0.0).map(|p| {
            let base = shifted.clone().unwrap_or_else(|| default_guess(&problem));
            perturb(base, model, p.magnitude, perturbation_seed(p.seed, self.time, i))
        });
        let warm = WarmStart {
            start,
            fallbacks: shifted.iter().chain(&incremental).cloned().collect(),
        };
        let solution = crate::ocp::solve_local(&problem, &warm, &cfg.ocp).map_err(fail)?;
        let state = self.states[i].clone();
        let input = solution.first_input().clone();
        Ok(AgentRecord {
            agent: i,
            output: model.output(&state),
            constraint_margin: model.pair_margin(&state, &input),
            state,
            input,
            solution,
            neighbor_values,
            neighbor_times,
            shifted,
            incremental,
        })
    }
}

/// Runs `steps` closed-loop steps after the current one, passing each record
/// (the current one first) to `sink`. Returns the `steps + 1` records.
pub fn run<F>(swarm: &mut Swarm, steps: usize, mut sink: F) -> Result<Vec<StepRecord>, OrchestratorError>
where
    F: FnMut(&StepRecord),
{
    let mut trace = Vec::with_capacity(steps + 1);
    sink(swarm.record());
    trace.push(swarm.record().clone());
    for _ in 0..steps {
        let rec = swarm.step()?;
        sink(rec);
        trace.push(rec.clone());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{double_integrator_model, PlanarRegion};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn agent(region: PlanarRegion) -> AgentSpec {
        AgentSpec {
            model: double_integrator_model(region),
            weights: TrackingWeights::scaled_identity(4, 2, 1.0, 1.0).unwrap(),
        }
    }

    fn consensus_swarm(states: Vec<DVector<f64>>, edges: &[(usize, usize)], mode: ExecutionMode) -> Swarm {
        let m = states.len();
        Swarm::initialize(
            vec![agent(PlanarRegion::A); m],
            Graph::new(m, edges).unwrap(),
            CooperationSetSpec::Consensus,
            states,
            None,
            Vec::new(),
            SwarmConfig {
                horizon: 6,
                mode,
                ..SwarmConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn groups_of_appendix_graph() {
        let g = Graph::new(4, &[(0, 1), (0, 3), (2, 3)]).unwrap();
        assert_eq!(parallel_groups(&g), vec![vec![0, 2], vec![1, 3]]);
        for group in parallel_groups(&g) {
            for &a in &group {
                assert!(group.iter().all(|&b| !g.are_adjacent(a, b)));
            }
        }
    }

    #[test]
    fn groups_of_complete_graph_are_singletons() {
        let g = Graph::complete(3).unwrap();
        assert_eq!(parallel_groups(&g), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn groups_keep_path_sequential() {
        // Greedy coloring would put agents 0 and 2 together, letting 2 read
        // agent 1's value from the previous step.
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(parallel_groups(&g), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let x = dv(&[0.3, 0.2, 0.0, 0.0]);
        let mut swarm = consensus_swarm(vec![x.clone(); 3], &[(0, 1), (1, 2)], ExecutionMode::Sequential);
        for _ in 0..3 {
            let rec = swarm.step().unwrap();
            for a in &rec.agents {
                assert_eq!(a.state, x);
                assert_eq!(a.solution.coop_output, dv(&[0.3, 0.2]));
                assert_eq!(a.solution.objective, 0.0);
            }
        }
    }

    #[test]
    fn mailbox_read_rule() {
        let states = vec![
            dv(&[0.0, 0.0, 0.0, 0.0]),
            dv(&[0.5, 0.5, 0.0, 0.0]),
            dv(&[-0.5, 1.0, 0.0, 0.0]),
        ];
        let mut swarm = consensus_swarm(states, &[(0, 1), (1, 2)], ExecutionMode::Sequential);
        let init = swarm.record().clone();
        assert_eq!(init.agents[0].neighbor_times, vec![None]);
        assert_eq!(init.agents[1].neighbor_times, vec![Some(0), None]);
        let rec = swarm.step().unwrap().clone();
        assert_eq!(rec.agents[1].neighbor_times, vec![Some(1), Some(0)]);
        assert_eq!(rec.agents[1].neighbor_values[0], rec.agents[0].solution.coop_output);
        assert_eq!(rec.agents[1].neighbor_values[1], init.agents[2].solution.coop_output);
    }

    #[test]
    fn closed_loop_applies_first_inputs() {
        let states = vec![dv(&[0.0, 0.0, 0.0, 0.0]), dv(&[0.8, 0.5, 0.0, 0.0])];
        let mut swarm = consensus_swarm(states, &[(0, 1)], ExecutionMode::Sequential);
        let before = swarm.record().clone();
        let after = swarm.step().unwrap();
        for (a, b) in before.agents.iter().zip(&after.agents) {
            let model = &before.specs[a.agent].model;
            assert_eq!(b.state, model.step(&a.state, &a.input));
            assert!(b.constraint_margin >= -1e-6);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let states = vec![
            dv(&[-1.0, 3.0, 0.0, 0.0]),
            dv(&[0.5, 1.0, 0.0, 0.0]),
            dv(&[0.9, -1.5, 0.0, 0.0]),
            dv(&[-0.5, 0.0, 0.0, 0.0]),
        ];
        let edges = [(0, 1), (0, 3), (2, 3)];
        let mut seq = consensus_swarm(states.clone(), &edges, ExecutionMode::Sequential);
        let mut par = consensus_swarm(states, &edges, ExecutionMode::Parallel);
        let a = run(&mut seq, 4, |_| {}).unwrap();
        let b = run(&mut par, 4, |_| {}).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.agents, rb.agents);
        }
    }

    #[test]
    fn run_zero_steps_returns_initial_record() {
        let mut swarm = consensus_swarm(vec![dv(&[0.0, 0.0, 0.0, 0.0]); 2], &[(0, 1)], ExecutionMode::Sequential);
        let mut seen = 0;
        let trace = run(&mut swarm, 0, |_| seen += 1).unwrap();
        assert_eq!((trace.len(), seen), (1, 1));
    }

    #[test]
    fn joining_agent_enters_after_event_step() {
        let states = vec![dv(&[0.0, 0.0, 0.0, 0.0]), dv(&[0.5, 0.0, 0.0, 0.0])];
        let event = TopologyEvent {
            time: 1,
            graph: Graph::new(3, &[(0, 1), (1, 2)]).unwrap(),
            cooperation: CooperationSetSpec::Consensus,
            joining: vec![JoiningAgent {
                spec: agent(PlanarRegion::A),
                state: dv(&[0.0, 1.0, 0.0, 0.0]),
                coop_output: dv(&[0.0, 1.0]),
            }],
        };
        let mut swarm = Swarm::initialize(
            vec![agent(PlanarRegion::A); 2],
            Graph::new(2, &[(0, 1)]).unwrap(),
            CooperationSetSpec::Consensus,
            states,
            None,
            vec![event],
            SwarmConfig {
                horizon: 6,
                ..SwarmConfig::default()
            },
        )
        .unwrap();
        assert_eq!(swarm.step().unwrap().agents.len(), 2);
        let rec = swarm.step().unwrap();
        assert_eq!((rec.time, rec.epoch, rec.agents.len()), (2, 1, 3));
        // Agent 1 reads the joining agent's announced output.
        assert_eq!(rec.agents[1].neighbor_values[1], dv(&[0.0, 1.0]));
        assert_eq!(rec.agents[1].neighbor_times[1], Some(1));
        assert_eq!(rec.agents[2].state, dv(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn initial_infeasibility_names_agent() {
        let err = Swarm::initialize(
            vec![agent(PlanarRegion::A); 2],
            Graph::new(2, &[(0, 1)]).unwrap(),
            CooperationSetSpec::Consensus,
            vec![dv(&[0.0, 0.0, 0.0, 0.0]), dv(&[5.0, 0.0, 0.0, 0.0])],
            None,
            Vec::new(),
            SwarmConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, OrchestratorError::InitialInfeasible { agent: 1, .. }));
    }
}
