use std::fs::{self, File};
use std::path::{Path, PathBuf};

use coopmpc::cooperation::cooperation_cost;
use coopmpc::diagnostics::{calibrate_gamma, sandwich_check, DiagnosticsRecord, GammaCalibration, Monitor, SandwichReport};
use coopmpc::dynamics::AgentModel;
use coopmpc::ocp::{perturbed_candidate, Candidate, LocalSolution};
use coopmpc::orchestrator::{run, ExecutionMode, OrchestratorError, Perturbation, StepRecord, Swarm, SwarmConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::output::{DiagnosticsWriter, TraceLayout, TraceWriter};
use crate::scenario::{LoadError, ScenarioConfig, ValidationError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("scenario setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Infeasible(OrchestratorError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        Self::Load(LoadError::Validation(e))
    }
}

impl CliError {
    /// 0 ok, 2 infeasible, 3 configuration error, 4 IO error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Infeasible(_) => 2,
            Self::Load(LoadError::Io { .. }) | Self::Io { .. } => 4,
            Self::Load(_) | Self::Setup(_) => 3,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Shifted candidate whose cooperation output is moved by a seeded uniform
/// vector of max-norm `magnitude` and projected back onto the output set.
pub fn perturbed_warm_start(solution: &LocalSolution, model: &AgentModel, magnitude: f64, seed: u64) -> Candidate {
    perturbed_candidate(solution, model, magnitude, seed)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub parallel: bool,
}

/// Derived per-agent constants, one entry per epoch in which the agent
/// takes part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConstants {
    pub epoch: usize,
    pub agent: usize,
    pub lipschitz: f64,
    pub step: f64,
    pub kappa: f64,
    /// Threshold used by the case split (configured or calibrated).
    pub gamma: f64,
    pub calibration: GammaCalibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub steps_completed: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// Steps `t` with `V(t+1) − V(t)` above the Lyapunov slack.
    pub lyapunov_violations: Vec<usize>,
    /// Steps `t` exceeding the per-step descent bound.
    pub bookkeeping_violations: Vec<usize>,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub scenario: ScenarioConfig,
    pub parallel: bool,
    pub constants: Vec<AgentConstants>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sandwich: Option<SandwichReport>,
    pub summary: RunSummary,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub header: RunHeader,
    pub trace: Vec<StepRecord>,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

const SANDWICH_SAMPLES: usize = 500;

/// Constants of every agent in every epoch, with `γ` calibrated where the
/// monitor configuration leaves it open.
pub fn agent_constants(config: &ScenarioConfig) -> Result<Vec<AgentConstants>, CliError> {
    let specs: Vec<_> = config
        .all_agents()
        .map(|a| a.spec().map_err(CliError::Setup))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for epoch in 0..=config.events.len() {
        let graph = config.graph(epoch).map_err(CliError::Setup)?;
        let coop = config.cooperation_spec(epoch).map_err(CliError::Setup)?;
        let sets = specs[..graph.len()].iter().map(|s| s.model.coop_output_set().clone()).collect();
        let cost = cooperation_cost(&graph, &coop, sets).map_err(|e| CliError::Setup(e.to_string()))?;
        for (agent, spec) in specs[..graph.len()].iter().enumerate() {
            let calibration = calibrate_gamma(
                spec,
                &cost,
                agent,
                &config.incremental,
                config.horizon,
                &config.ocp,
                config.seed ^ ((epoch as u64) << 32 | agent as u64),
            );
            let gamma = config.monitor.gamma.get(agent).copied().unwrap_or(calibration.gamma);
            out.push(AgentConstants {
                epoch,
                agent,
                lipschitz: cost.lipschitz(agent),
                step: config.incremental.step_for(&cost, agent),
                kappa: config.incremental.descent_constant(&cost, agent),
                gamma,
                calibration,
            });
        }
    }
    Ok(out)
}

/// Runs a validated scenario and writes `trace.csv`, `diagnostics.csv` and
/// `run.json` into `out_dir` (created if missing).
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, options: RunOptions) -> Result<RunOutcome, CliError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(io_error(out_dir))?;

    let constants = agent_constants(config)?;
    let mut monitor_config = config.monitor.clone();
    if monitor_config.gamma.is_empty() {
        let agents = config.all_agents().count();
        monitor_config.gamma = (0..agents)
            .map(|i| {
                constants
                    .iter()
                    .filter(|c| c.agent == i)
                    .map(|c| c.gamma)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
    }

    let specs = config.agent_specs()?;
    let layout = config.all_agents().try_fold(
        TraceLayout {
            state: 0,
            input: 0,
            output: 0,
        },
        |l, a| {
            let m = a.model.build().map_err(CliError::Setup)?;
            Ok::<_, CliError>(TraceLayout {
                state: l.state.max(m.state_dim()),
                input: l.input.max(m.input_dim()),
                output: l.output.max(m.output_dim()),
            })
        },
    )?;
    let graph = config.graph(0).map_err(CliError::Setup)?;
    let cooperation = config.cooperation_spec(0).map_err(CliError::Setup)?;
    let swarm_config = SwarmConfig {
        horizon: config.horizon,
        ocp: config.ocp.clone(),
        incremental: config.incremental.clone(),
        perturbation: (config.perturbation > 0.0).then_some(Perturbation {
            magnitude: config.perturbation,
            seed: config.seed,
        }),
        mode: if options.parallel {
            ExecutionMode::Parallel
        } else {
            ExecutionMode::Sequential
        },
        ..SwarmConfig::default()
    };

    let trace_path = out_dir.join("trace.csv");
    let diag_path = out_dir.join("diagnostics.csv");
    let json_path = out_dir.join("run.json");
    let mut trace_out =
        TraceWriter::create(File::create(&trace_path).map_err(io_error(&trace_path))?, layout).map_err(csv_error(&trace_path))?;
    let mut diag_out =
        DiagnosticsWriter::create(File::create(&diag_path).map_err(io_error(&diag_path))?).map_err(csv_error(&diag_path))?;

    let mut monitor = Monitor::new(monitor_config.clone(), config.incremental.clone());
    let mut diagnostics = Vec::new();
    let mut write_error: Option<CliError> = None;
    let mut steps_completed = 0;
    let mut sink = |rec: &StepRecord| {
        steps_completed = rec.time;
        if write_error.is_some() {
            return;
        }
        if let Err(e) = trace_out.write(rec) {
            write_error = Some(csv_error(&trace_path)(e));
        }
        if let Some(d) = monitor.observe(rec) {
            if let Err(e) = diag_out.write(&d) {
                write_error = Some(csv_error(&diag_path)(e));
            }
            diagnostics.push(d);
        }
    };

    let result = Swarm::initialize(
        specs,
        graph,
        cooperation,
        config.initial_states(),
        config.initial_guesses()?,
        config.topology_events()?,
        swarm_config,
    )
    .and_then(|mut swarm| run(&mut swarm, config.steps, &mut sink));
    if let Some(d) = monitor.finish() {
        diag_out.write(&d).map_err(csv_error(&diag_path))?;
        diagnostics.push(d);
    }
    if let Some(e) = write_error {
        return Err(e);
    }
    trace_out.finish().map_err(io_error(&trace_path))?;
    diag_out.finish().map_err(io_error(&diag_path))?;

    let (status, error, trace) = match result {
        Ok(trace) => (RunStatus::Completed, None, trace),
        Err(e @ (OrchestratorError::Infeasible { .. } | OrchestratorError::InitialInfeasible { .. })) => {
            (RunStatus::Infeasible, Some(e), Vec::new())
        }
        Err(e) => return Err(CliError::Setup(e.to_string())),
    };
    let sandwich = trace.first().and_then(|r| sandwich_check(&r.cost, SANDWICH_SAMPLES, config.seed));
    let summary = RunSummary {
        status,
        steps_completed,
        error: error.as_ref().map(ToString::to_string),
        lyapunov_violations: diagnostics
            .iter()
            .filter(|d| d.lyapunov_ok(monitor_config.lyapunov_slack) == Some(false))
            .map(|d| d.time)
            .collect(),
        bookkeeping_violations: diagnostics
            .iter()
            .filter(|d| d.bookkeeping_ok(monitor_config.bookkeeping_slack) == Some(false))
            .map(|d| d.time)
            .collect(),
    };
    let header = RunHeader {
        scenario: config.clone(),
        parallel: options.parallel,
        constants,
        sandwich,
        summary,
    };
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&json_path, json + "\n").map_err(io_error(&json_path))?;
    if let Some(e) = error {
        return Err(CliError::Infeasible(e));
    }
    Ok(RunOutcome {
        header,
        trace,
        diagnostics,
    })
}
