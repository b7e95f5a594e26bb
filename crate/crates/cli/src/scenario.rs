//! Scenario files: a TOML description of agents, graph, cooperation goal,
//! solver settings and topology events. See `docs/formats.md` for the
//! grammar.

use std::path::Path;

use coopmpc::cooperation::{CooperationSetSpec, FormationSpec};
use coopmpc::diagnostics::MonitorConfig;
use coopmpc::dynamics::{double_integrator_model, quadcopter_model, AgentModel, PlanarRegion};
use coopmpc::graph::Graph;
use coopmpc::ocp::{IncrementalConfig, OcpConfig, TrackingWeights};
use coopmpc::orchestrator::{AgentSpec, JoiningAgent, TopologyEvent};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Malformed scenario text. Line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Well-formed scenario that violates a model or graph constraint.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {message}")]
pub struct ValidationError {
    /// Dotted path of the offending field, e.g. `agents[2].state`.
    pub field: String,
    pub message: String,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    DoubleIntegrator { region: PlanarRegion },
    Quadcopter {
        #[serde(default = "default_sample_time")]
        sample_time: f64,
    },
}

fn default_sample_time() -> f64 {
    0.1
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl ModelConfig {
    pub fn build(&self) -> Result<AgentModel, String> {
        match *self {
            Self::DoubleIntegrator { region } => Ok(double_integrator_model(region)),
            Self::Quadcopter { sample_time } => quadcopter_model(sample_time).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub model: ModelConfig,
    pub state: Vec<f64>,
    /// Multiplier of the identity state weight.
    #[serde(default = "one")]
    pub q: f64,
    /// Multiplier of the identity input weight.
    #[serde(default = "one")]
    pub r: f64,
    /// Cooperation output announced before the agent's first solve. Defaults
    /// to the agent's initial output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coop_output: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CooperationConfig {
    Consensus,
    /// Equal planar distance on every edge, plus altitude consensus when
    /// `altitude` is set.
    Formation {
        distance: f64,
        #[serde(default = "yes")]
        altitude: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    /// Applied after the inputs of step `time` are applied.
    pub time: usize,
    pub edges: Vec<[usize; 2]>,
    /// Defaults to the scenario's cooperation goal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooperation: Option<CooperationConfig>,
    #[serde(default)]
    pub joining: Vec<AgentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub steps: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    /// Max-norm of the seeded warm-start perturbation of cooperation outputs.
    #[serde(default)]
    pub perturbation: f64,
    pub agents: Vec<AgentConfig>,
    pub edges: Vec<[usize; 2]>,
    pub cooperation: CooperationConfig,
    #[serde(default)]
    pub ocp: OcpConfig,
    #[serde(default)]
    pub incremental: IncrementalConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub events: Vec<EventConfig>,
}

fn default_horizon() -> usize {
    10
}

/// Line and column (1-based) of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ScenarioConfig {
    /// Parses and validates scenario text.
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| position(text, s.start));
            ParseError {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return Err(invalid("perturbation", "must be a finite nonnegative number"));
        }
        if self.agents.is_empty() {
            return Err(invalid("agents", "at least one agent is required"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            validate_agent(a, &format!("agents[{i}]"))?;
        }
        let output_dim = self.agents[0].model.build().map_err(|e| invalid("agents[0].model", e))?.output_dim();
        let mut count = self.agents.len();
        let all_agents = self.agents.iter().chain(self.events.iter().flat_map(|e| &e.joining));
        for (i, a) in all_agents.enumerate() {
            let dim = a.model.build().map_err(|e| invalid("agents.model", e))?.output_dim();
            if dim != output_dim {
                return Err(invalid(
                    format!("agent {i} model"),
                    format!("output dimension {dim} differs from {output_dim}"),
                ));
            }
        }
        self.graph(0).map_err(|e| invalid("edges", e))?;
        validate_cooperation(&self.cooperation, output_dim, "cooperation")?;
        self.ocp.solver.validate().map_err(|e| invalid("ocp.solver", e.to_string()))?;
        if !(self.ocp.terminal_tol > 0.0 && self.ocp.constraint_tol > 0.0) {
            return Err(invalid("ocp", "tolerances must be positive"));
        }
        if !(self.incremental.relaxation > 0.0 && self.incremental.relaxation <= 1.0) {
            return Err(invalid("incremental.relaxation", "must lie in (0, 1]"));
        }
        if let Some(s) = self.incremental.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("incremental.step", "must be positive"));
            }
        }
        self.monitor.validate().map_err(|e| invalid("monitor", e))?;
        let mut last = 0;
        for (k, e) in self.events.iter().enumerate() {
            let field = format!("events[{k}]");
            if e.time < last {
                return Err(invalid(format!("{field}.time"), "events must be listed in time order"));
            }
            last = e.time;
            for (j, a) in e.joining.iter().enumerate() {
                validate_agent(a, &format!("{field}.joining[{j}]"))?;
            }
            count += e.joining.len();
            Graph::new(count, &edge_pairs(&e.edges)).map_err(|err| invalid(format!("{field}.edges"), err.to_string()))?;
            if let Some(c) = &e.cooperation {
                validate_cooperation(c, output_dim, &format!("{field}.cooperation"))?;
            }
        }
        Ok(())
    }

    /// Graph in force during epoch `epoch` (0 before any event).
    pub fn graph(&self, epoch: usize) -> Result<Graph, String> {
        let (m, edges) = if epoch == 0 {
            (self.agents.len(), &self.edges)
        } else {
            let e = &self.events[epoch - 1];
            let joined: usize = self.events[..epoch].iter().map(|e| e.joining.len()).sum();
            (self.agents.len() + joined, &e.edges)
        };
        Graph::new(m, &edge_pairs(edges)).map_err(|e| e.to_string())
    }

    pub fn cooperation_spec(&self, epoch: usize) -> Result<CooperationSetSpec, String> {
        let coop = self.events[..epoch]
            .iter()
            .rev()
            .find_map(|e| e.cooperation.as_ref())
            .unwrap_or(&self.cooperation);
        coop.build(&self.graph(epoch)?)
    }

    /// Every agent that ever takes part, initial agents first.
    pub fn all_agents(&self) -> impl Iterator<Item = &AgentConfig> {
        self.agents.iter().chain(self.events.iter().flat_map(|e| &e.joining))
    }

    pub fn agent_specs(&self) -> Result<Vec<AgentSpec>, ValidationError> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.spec().map_err(|e| invalid(format!("agents[{i}]"), e)))
            .collect()
    }

    pub fn initial_states(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| DVector::from_column_slice(&a.state)).collect()
    }

    /// Announced outputs before the first solve, when any agent sets one.
    pub fn initial_guesses(&self) -> Result<Option<Vec<DVector<f64>>>, ValidationError> {
        if self.agents.iter().all(|a| a.coop_output.is_none()) {
            return Ok(None);
        }
        let specs = self.agent_specs()?;
        Ok(Some(
            self.agents
                .iter()
                .zip(&specs)
                .map(|(a, s)| match &a.coop_output {
                    Some(y) => DVector::from_column_slice(y),
                    None => s.model.output(&DVector::from_column_slice(&a.state)),
                })
                .collect(),
        ))
    }

    pub fn topology_events(&self) -> Result<Vec<TopologyEvent>, ValidationError> {
        let mut out = Vec::with_capacity(self.events.len());
        for (k, e) in self.events.iter().enumerate() {
            let field = format!("events[{k}]");
            let graph = self.graph(k + 1).map_err(|err| invalid(format!("{field}.edges"), err))?;
            let cooperation = self.cooperation_spec(k + 1).map_err(|err| invalid(format!("{field}.cooperation"), err))?;
            let mut joining = Vec::with_capacity(e.joining.len());
            for (j, a) in e.joining.iter().enumerate() {
                let spec = a.spec().map_err(|err| invalid(format!("{field}.joining[{j}]"), err))?;
                let state = DVector::from_column_slice(&a.state);
                let coop_output = match &a.coop_output {
                    Some(y) => DVector::from_column_slice(y),
                    None => spec.model.output(&state),
                };
                joining.push(JoiningAgent {
                    spec,
                    state,
                    coop_output,
                });
            }
            out.push(TopologyEvent {
                time: e.time,
                graph,
                cooperation,
                joining,
            });
        }
        Ok(out)
    }
}

fn edge_pairs(edges: &[[usize; 2]]) -> Vec<(usize, usize)> {
    edges.iter().map(|e| (e[0], e[1])).collect()
}

impl AgentConfig {
    pub fn spec(&self) -> Result<AgentSpec, String> {
        let model = self.model.build()?;
        let weights = TrackingWeights::scaled_identity(model.state_dim(), model.input_dim(), self.q, self.r)
            .map_err(|e| e.to_string())?;
        Ok(AgentSpec { model, weights })
    }
}

impl CooperationConfig {
    pub fn build(&self, graph: &Graph) -> Result<CooperationSetSpec, String> {
        match *self {
            Self::Consensus => Ok(CooperationSetSpec::Consensus),
            Self::Formation { distance, altitude } => FormationSpec::uniform(graph, distance, altitude)
                .map(CooperationSetSpec::Formation)
                .map_err(|e| e.to_string()),
        }
    }
}

fn validate_agent(a: &AgentConfig, field: &str) -> Result<(), ValidationError> {
    let model = a.model.build().map_err(|e| invalid(format!("{field}.model"), e))?;
    if a.state.len() != model.state_dim() {
        return Err(invalid(
            format!("{field}.state"),
            format!("expected {} entries, found {}", model.state_dim(), a.state.len()),
        ));
    }
    if a.state.iter().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{field}.state"), "entries must be finite"));
    }
    for (name, w) in [("q", a.q), ("r", a.r)] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(invalid(format!("{field}.{name}"), "must be a positive number"));
        }
    }
    if let Some(y) = &a.coop_output {
        if y.len() != model.output_dim() {
            return Err(invalid(
                format!("{field}.coop_output"),
                format!("expected {} entries, found {}", model.output_dim(), y.len()),
            ));
        }
        if !model.coop_output_set().contains(y, 1e-9) {
            return Err(invalid(format!("{field}.coop_output"), "outside the agent's output set"));
        }
    }
    Ok(())
}

fn validate_cooperation(c: &CooperationConfig, output_dim: usize, field: &str) -> Result<(), ValidationError> {
    if let CooperationConfig::Formation { distance, altitude } = *c {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(invalid(format!("{field}.distance"), "must be positive"));
        }
        let needed = if altitude { 3 } else { 2 };
        if output_dim < needed {
            return Err(invalid(
                field,
                format!("formation needs {needed} output coordinates, models have {output_dim}"),
            ));
        }
    }
    Ok(())
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::parse(&text)
}

/// Resolves a built-in scenario name, or else reads the path.
pub fn resolve_scenario(name_or_path: &str) -> Result<ScenarioConfig, LoadError> {
    match builtin(name_or_path) {
        Some(c) => Ok(c),
        None => load_scenario(Path::new(name_or_path)),
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["consensus-appendix-b", "formation-v-b", "formation-appendix-c"];

/// One-line descriptions matching [`BUILTIN_NAMES`].
pub const BUILTIN_DESCRIPTIONS: [&str; 3] = [
    "four double integrators reach output consensus; a fifth joins after step 19",
    "three quadcopters form a unit triangle from stacked initial positions",
    "the quadcopter formation with slightly perturbed planar initial positions",
];

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    match name {
        "consensus-appendix-b" => Some(consensus_appendix_b()),
        "formation-v-b" => Some(formation(name, &[[0.0, 0.0]; 3], 600, 1e-3)),
        "formation-appendix-c" => Some(formation(name, &[[1e-5, 0.0], [-1e-5, 1e-5], [-1e-5, -1e-5]], 300, 0.0)),
        _ => None,
    }
}

fn planar_agent(region: PlanarRegion, position: [f64; 2]) -> AgentConfig {
    AgentConfig {
        model: ModelConfig::DoubleIntegrator { region },
        state: vec![position[0], position[1], 0.0, 0.0],
        q: 1.0,
        r: 1.0,
        coop_output: None,
    }
}

fn consensus_appendix_b() -> ScenarioConfig {
    use PlanarRegion::{A, B, C};
    let mut joining = planar_agent(C, [0.0, -2.0]);
    joining.coop_output = Some(vec![0.0, -2.0]);
    ScenarioConfig {
        name: "consensus-appendix-b".into(),
        steps: 40,
        horizon: 10,
        seed: 0,
        perturbation: 0.0,
        agents: vec![
            planar_agent(A, [-1.0, 4.0]),
            planar_agent(B, [2.0, 1.8]),
            planar_agent(B, [3.0, -1.5]),
            planar_agent(C, [-2.0, 0.0]),
        ],
        edges: vec![[0, 1], [0, 3], [2, 3]],
        cooperation: CooperationConfig::Consensus,
        ocp: OcpConfig::default(),
        incremental: IncrementalConfig::default(),
        monitor: MonitorConfig::default(),
        events: vec![EventConfig {
            time: 19,
            edges: vec![[0, 3], [2, 3], [1, 2], [4, 3], [2, 4]],
            cooperation: None,
            joining: vec![joining],
        }],
    }
}

/// Tracking weight multiplier of the quadcopter scenarios. With unit weights
/// the tracking cost outweighs the formation cost's negative curvature at
/// coincident planar positions, so no agent ever gains by moving apart.
pub const FORMATION_WEIGHT: f64 = 0.1;

fn formation(name: &str, planar: &[[f64; 2]; 3], steps: usize, perturbation: f64) -> ScenarioConfig {
    let agents = planar
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut state = vec![0.0; 10];
            state[0] = p[0];
            state[1] = p[1];
            state[2] = (i + 1) as f64;
            AgentConfig {
                model: ModelConfig::Quadcopter { sample_time: 0.1 },
                state,
                q: FORMATION_WEIGHT,
                r: FORMATION_WEIGHT,
                coop_output: None,
            }
        })
        .collect();
    ScenarioConfig {
        name: name.into(),
        steps,
        horizon: 10,
        seed: 0,
        perturbation,
        agents,
        edges: vec![[0, 1], [0, 2], [1, 2]],
        cooperation: CooperationConfig::Formation {
            distance: 1.0,
            altitude: true,
        },
        ocp: OcpConfig::default(),
        incremental: IncrementalConfig::default(),
        monitor: MonitorConfig::default(),
        events: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate_and_round_trip() {
        for name in BUILTIN_NAMES {
            let c = builtin(name).unwrap();
            c.validate().unwrap();
            assert_eq!(ScenarioConfig::parse(&c.to_toml()).unwrap(), c, "{name}");
        }
    }

    #[test]
    fn consensus_builtin_layout() {
        let c = builtin("consensus-appendix-b").unwrap();
        assert_eq!(c.agents.len(), 4);
        assert_eq!(c.events.len(), 1);
        assert_eq!(c.events[0].time, 19);
        assert_eq!(c.graph(1).unwrap().len(), 5);
        assert_eq!(c.graph(1).unwrap().neighbors(4), &[2, 3]);
        assert!(c.graph(0).unwrap().are_adjacent(0, 1));
        assert!(!c.graph(1).unwrap().are_adjacent(0, 1));
    }

    #[test]
    fn formation_builtins_differ_in_planar_offsets() {
        let b = builtin("formation-v-b").unwrap();
        let c = builtin("formation-appendix-c").unwrap();
        assert_eq!(b.perturbation, 1e-3);
        assert_eq!(c.perturbation, 0.0);
        assert_eq!(c.agents[1].state[..3], [-1e-5, 1e-5, 2.0]);
        assert_eq!(b.agents[2].state[..3], [0.0, 0.0, 3.0]);
    }

    #[test]
    fn unknown_field_is_a_parse_error_with_position() {
        let text = builtin("formation-v-b").unwrap().to_toml();
        let text = text.replacen('\n', "\nbogus = 3\n", 1);
        match ScenarioConfig::parse(&text) {
            Err(LoadError::Parse(e)) => {
                assert!(e.message.contains("bogus"), "{}", e.message);
                assert_eq!(e.line, 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line_and_column() {
        let e = match ScenarioConfig::parse("name = \"x\"\nsteps = = 3\n") {
            Err(LoadError::Parse(e)) => e,
            other => panic!("{other:?}"),
        };
        assert_eq!(e.line, 2);
        assert!(e.column >= 7);
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = builtin("consensus-appendix-b").unwrap();
        c.agents[2].state.pop();
        assert_eq!(c.validate().unwrap_err().field, "agents[2].state");

        let mut c = builtin("consensus-appendix-b").unwrap();
        c.edges.push([1, 1]);
        assert_eq!(c.validate().unwrap_err().field, "edges");

        let mut c = builtin("consensus-appendix-b").unwrap();
        c.cooperation = CooperationConfig::Formation {
            distance: 1.0,
            altitude: true,
        };
        assert_eq!(c.validate().unwrap_err().field, "cooperation");

        let mut c = builtin("formation-v-b").unwrap();
        c.agents[0].q = 0.0;
        assert_eq!(c.validate().unwrap_err().field, "agents[0].q");

        let mut c = builtin("consensus-appendix-b").unwrap();
        c.events[0].edges.pop();
        c.events[0].edges.pop();
        assert_eq!(c.validate().unwrap_err().field, "events[0].edges");
    }

    #[test]
    fn position_counts_from_one() {
        assert_eq!(position("ab\ncd", 0), (1, 1));
        assert_eq!(position("ab\ncd", 4), (2, 2));
    }
}
