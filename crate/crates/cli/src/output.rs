//! CSV schemas of `trace.csv` and `diagnostics.csv`. Column order is part of
//! the file format and documented in `docs/formats.md`.

use std::fs::File;
use std::io::{BufWriter, Write};

use coopmpc::diagnostics::DiagnosticsRecord;
use coopmpc::orchestrator::StepRecord;

pub const DIAGNOSTICS_COLUMNS: [&str; 18] = [
    "t",
    "epoch",
    "agent",
    "value_function",
    "coop_cost",
    "coop_distance",
    "distance_is_proxy",
    "min_constraint_margin",
    "total_iterations",
    "value_change",
    "descent_bound",
    "tracking_cost",
    "coupling_cost",
    "tracking_error",
    "stationarity_gap",
    "label",
    "constraint_margin",
    "iterations",
];

/// Widths of the per-agent vectors in `trace.csv`; agents with shorter
/// vectors leave the remaining cells empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceLayout {
    pub state: usize,
    pub input: usize,
    pub output: usize,
}

impl TraceLayout {
    /// `t,agent,epoch,x0..,u0..,y0..,yc0..,status,objective,iterations`.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["t", "agent", "epoch"].iter().map(|s| s.to_string()).collect();
        cols.extend((0..self.state).map(|k| format!("x{k}")));
        cols.extend((0..self.input).map(|k| format!("u{k}")));
        cols.extend((0..self.output).map(|k| format!("y{k}")));
        cols.extend((0..self.output).map(|k| format!("yc{k}")));
        cols.extend(["status", "objective", "iterations"].iter().map(|s| s.to_string()));
        cols
    }
}

fn padded(values: &[f64], width: usize, row: &mut Vec<String>) {
    row.extend(values.iter().map(f64::to_string));
    row.extend(std::iter::repeat_n(String::new(), width.saturating_sub(values.len())));
}

fn optional(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub struct TraceWriter {
    csv: csv::Writer<BufWriter<File>>,
    layout: TraceLayout,
}

impl TraceWriter {
    pub fn create(file: File, layout: TraceLayout) -> csv::Result<Self> {
        let mut csv = csv::Writer::from_writer(BufWriter::new(file));
        csv.write_record(layout.columns())?;
        Ok(Self { csv, layout })
    }

    pub fn write(&mut self, rec: &StepRecord) -> csv::Result<()> {
        for a in &rec.agents {
            let mut row = vec![rec.time.to_string(), a.agent.to_string(), rec.epoch.to_string()];
            padded(a.state.as_slice(), self.layout.state, &mut row);
            padded(a.input.as_slice(), self.layout.input, &mut row);
            padded(a.output.as_slice(), self.layout.output, &mut row);
            padded(a.solution.coop_output.as_slice(), self.layout.output, &mut row);
            row.push(a.solution.source.label().to_string());
            row.push(a.solution.objective.to_string());
            row.push(a.solution.iterations.to_string());
            self.csv.write_record(&row)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.csv.flush()?;
        self.csv.into_inner().map_err(|e| e.into_error())?.flush()
    }
}

pub struct DiagnosticsWriter {
    csv: csv::Writer<BufWriter<File>>,
}

impl DiagnosticsWriter {
    pub fn create(file: File) -> csv::Result<Self> {
        let mut csv = csv::Writer::from_writer(BufWriter::new(file));
        csv.write_record(DIAGNOSTICS_COLUMNS)?;
        Ok(Self { csv })
    }

    pub fn write(&mut self, d: &DiagnosticsRecord) -> csv::Result<()> {
        for a in &d.agents {
            let row = [
                d.time.to_string(),
                d.epoch.to_string(),
                a.agent.to_string(),
                d.value_function.to_string(),
                d.coop_cost.to_string(),
                d.coop_distance.to_string(),
                d.distance_is_proxy.to_string(),
                d.min_constraint_margin.to_string(),
                d.total_iterations.to_string(),
                optional(d.value_change),
                optional(d.descent_bound),
                a.tracking_cost.to_string(),
                a.coupling_cost.to_string(),
                a.tracking_error_sq.sqrt().to_string(),
                a.stationarity_gap.to_string(),
                a.label.as_str().to_string(),
                a.constraint_margin.to_string(),
                a.iterations.to_string(),
            ];
            self.csv.write_record(row)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.csv.flush()?;
        self.csv.into_inner().map_err(|e| e.into_error())?.flush()
    }
}
