//! Whole-run orchestration: stream in, artifacts out.
//!
//! Wraps a single-node run and renders everything a caller usually wants to
//! persist: the annotated stream, the decision log, the cost and traced-
//! fraction tables, and a small summary.

use thiserror::Error;

use crate::cost::{
    cost_csv, fraction_csv, simulate_cost, traced_fraction_report, CostError, CostParams,
    StructureError,
};
use crate::engine::{run_stream, ConfigError, Decision, EngineConfig};
use crate::task::TaskDescriptor;
use crate::text::serialize_annotated_stream;

pub const DEFAULT_FRACTION_WINDOW: usize = 5000;

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("engine produced a malformed annotated stream: {0}")]
    Structure(#[from] StructureError),
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub tasks: u64,
    pub traces_registered: usize,
    pub records: u64,
    pub replays: u64,
    pub final_wait_count: u64,
    pub total_cost_seconds: f64,
    pub untraced_cost_seconds: f64,
    pub speedup: f64,
    /// Last row of the windowed traced-fraction report (0 for an empty run).
    pub final_traced_fraction: f64,
}

/// Rendered outputs of one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub annotated_text: String,
    pub decisions_text: String,
    pub cost_csv: String,
    pub fraction_csv: String,
    pub summary: RunSummary,
}

pub fn run_to_artifacts(
    tasks: &[TaskDescriptor],
    config: EngineConfig,
    cost: &CostParams,
    fraction_window: usize,
) -> Result<RunArtifacts, PipelineError> {
    cost.validate()?;
    let run = run_stream(config, tasks)?;
    let report = simulate_cost(&run.events, cost)?;
    let fractions = traced_fraction_report(&run.events, fraction_window.max(1));

    let mut records = 0;
    let mut replays = 0;
    let mut decisions_text = String::new();
    for (pos, decision) in &run.log {
        if let Decision::TraceEmitted { record, .. } = decision {
            if *record {
                records += 1;
            } else {
                replays += 1;
            }
        }
        decisions_text.push_str(&format!("{pos} {decision}\n"));
    }

    let summary = RunSummary {
        tasks: report.task_count(),
        traces_registered: run.trace_count,
        records,
        replays,
        final_wait_count: run.final_wait_count,
        total_cost_seconds: report.total_seconds,
        untraced_cost_seconds: report.untraced_seconds(cost),
        speedup: report.speedup(cost),
        final_traced_fraction: fractions.last().map_or(0.0, |(_, f)| *f),
    };
    Ok(RunArtifacts {
        annotated_text: serialize_annotated_stream(&run.events),
        decisions_text,
        cost_csv: cost_csv(&report),
        fraction_csv: fraction_csv(&fractions),
        summary,
    })
}
