use std::fs;
use std::process::Command;

use coopmpc_cli::scenario::{builtin, load_scenario, LoadError};
use coopmpc_cli::{run_scenario, RunHeader, RunOptions};

fn short(name: &str, steps: usize) -> coopmpc_cli::ScenarioConfig {
    let mut c = builtin(name).unwrap();
    c.steps = steps;
    c
}

#[test]
fn golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&short("consensus-appendix-b", 1), dir.path(), RunOptions::default()).unwrap();
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "t,agent,epoch,x0,x1,x2,x3,u0,u1,y0,y1,yc0,yc1,status,objective,iterations"
    );
    assert_eq!(trace.lines().count(), 1 + 2 * 4);
    let diags = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(
        diags.lines().next().unwrap(),
        "t,epoch,agent,value_function,coop_cost,coop_distance,distance_is_proxy,min_constraint_margin,\
         total_iterations,value_change,descent_bound,tracking_cost,coupling_cost,tracking_error,\
         stationarity_gap,label,constraint_margin,iterations"
    );
    let header: RunHeader = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(header.scenario, short("consensus-appendix-b", 1));
    assert_eq!(header.constants.len(), 4 + 5);
    assert!(header.constants.iter().all(|c| c.gamma > 0.0 && c.kappa > 0.0));
}

#[test]
fn quadcopter_trace_has_ten_states() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&short("formation-v-b", 0), dir.path(), RunOptions::default()).unwrap();
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    assert!(header.starts_with("t,agent,epoch,x0,x1,x2,x3,x4,x5,x6,x7,x8,x9,u0,u1,u2,y0,y1,y2,yc0,yc1,yc2,"));
    assert_eq!(trace.lines().count(), 1 + 3);
}

#[test]
fn seeded_runs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut config = short("formation-v-b", 3);
    config.seed = 42;
    run_scenario(&config, a.path(), RunOptions::default()).unwrap();
    run_scenario(&config, b.path(), RunOptions::default()).unwrap();
    for file in ["trace.csv", "diagnostics.csv", "run.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn missing_output_directory_is_created() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a/b/c");
    run_scenario(&short("consensus-appendix-b", 0), &nested, RunOptions::default()).unwrap();
    assert!(nested.join("trace.csv").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let err = run_scenario(&short("consensus-appendix-b", 0), &blocker.join("out"), RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn infeasible_start_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = short("consensus-appendix-b", 2);
    config.agents[0].state = vec![-1.0, 4.0, 0.24, 0.25];
    let err = run_scenario(&config, dir.path(), RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    let header: RunHeader = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert!(header.summary.error.is_some());
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in coopmpc_cli::BUILTIN_NAMES {
        let path = dir.path().join(format!("{name}.toml"));
        let config = builtin(name).unwrap();
        fs::write(&path, config.to_toml()).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), config);
    }
    match load_scenario(&dir.path().join("missing.toml")) {
        Err(LoadError::Io { .. }) => {}
        other => panic!("expected IO error, got {other:?}"),
    }
}

fn coopmpc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coopmpc"))
}

#[test]
fn command_line_surface() {
    let out = coopmpc().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let listing = String::from_utf8(out.stdout).unwrap();
    for name in coopmpc_cli::BUILTIN_NAMES {
        assert!(listing.contains(name));
    }

    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, builtin("formation-appendix-c").unwrap().to_toml()).unwrap();
    assert_eq!(coopmpc().arg("validate").arg(&good).status().unwrap().code(), Some(0));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "name = \"x\"\nsteps = -1\n").unwrap();
    let out = coopmpc().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("2:"));

    assert_eq!(
        coopmpc().arg("validate").arg(dir.path().join("none.toml")).status().unwrap().code(),
        Some(4)
    );

    let out_dir = dir.path().join("run");
    let status = coopmpc()
        .args(["run", "consensus-appendix-b", "--steps", "2", "--seed", "3", "--parallel", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let header: RunHeader = serde_json::from_str(&fs::read_to_string(out_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(header.scenario.steps, 2);
    assert_eq!(header.scenario.seed, 3);
    assert!(header.parallel);
}
