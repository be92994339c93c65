//! Python bindings over the core engine: stream generation, one-shot runs,
//! incremental pushes, replication checks, and the raw mining primitives.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use retrace_core::cost::CostParams;
use retrace_core::engine::{Engine as CoreEngine, EngineConfig};
use retrace_core::finder;
use retrace_core::finder::LatencyModel;
use retrace_core::generate::{generate as generate_tasks, GeneratorSpec};
use retrace_core::pipeline::run_to_artifacts;
use retrace_core::repeats::find_repeats;
use retrace_core::replayer::AnnotatedEvent;
use retrace_core::replication::{run_replicated, ReplicationConfig};
use retrace_core::text::{parse_task_stream, serialize_annotated_stream, serialize_task_stream};
use retrace_core::token::{hash_task, Token};

fn to_value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn lines(events: &[AnnotatedEvent]) -> Vec<String> {
    serialize_annotated_stream(events)
        .lines()
        .map(str::to_owned)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    min_trace_length: usize,
    max_trace_length: Option<usize>,
    batchsize: usize,
    multi_scale_factor: usize,
    workers: usize,
    latency_tokens: Option<u64>,
) -> PyResult<EngineConfig> {
    let config = EngineConfig {
        min_trace_length,
        max_trace_length,
        batch_size: batchsize,
        multi_scale_factor,
        workers,
        latency: latency_tokens.map_or(LatencyModel::Immediate, LatencyModel::FixedTokens),
        ..EngineConfig::default()
    };
    config.validate().map_err(to_value_error)?;
    Ok(config)
}

/// An incremental engine: feed task lines, collect annotated lines back.
///
/// Holds worker channels, so instances stay on the thread that made them.
#[pyclass(unsendable)]
struct Engine {
    inner: CoreEngine,
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (min_trace_length=25, max_trace_length=None, batchsize=5000,
                        multi_scale_factor=250, workers=1, latency_tokens=None))]
    fn new(
        min_trace_length: usize,
        max_trace_length: Option<usize>,
        batchsize: usize,
        multi_scale_factor: usize,
        workers: usize,
        latency_tokens: Option<u64>,
    ) -> PyResult<Self> {
        let config = build_config(
            min_trace_length,
            max_trace_length,
            batchsize,
            multi_scale_factor,
            workers,
            latency_tokens,
        )?;
        let inner = CoreEngine::new(config).map_err(to_value_error)?;
        Ok(Engine { inner })
    }

    /// Feed one or more task lines; returns the annotated lines released now.
    fn push(&mut self, text: &str) -> PyResult<Vec<String>> {
        let tasks = parse_task_stream(text).map_err(to_value_error)?;
        let mut events = Vec::new();
        for task in tasks {
            let out = self.inner.push(task);
            events.extend(out.events);
            if let Some(lag) = out.waits.iter().map(|w| w.lag).max() {
                self.inner.apply_wait_increase(lag);
            }
        }
        Ok(lines(&events))
    }

    /// Release everything still buffered.
    fn finish(&mut self) -> Vec<String> {
        let events = self.inner.finish();
        lines(&events)
    }

    #[getter]
    fn wait_count(&self) -> u64 {
        self.inner.wait_count()
    }

    #[getter]
    fn processed(&self) -> u64 {
        self.inner.processed()
    }

    #[getter]
    fn trace_count(&self) -> usize {
        self.inner.trace_count()
    }
}

/// Outputs and summary numbers of one complete run.
#[pyclass]
struct RunResult {
    #[pyo3(get)]
    annotated: String,
    #[pyo3(get)]
    decisions: String,
    #[pyo3(get)]
    cost_csv: String,
    #[pyo3(get)]
    fraction_csv: String,
    #[pyo3(get)]
    tasks: u64,
    #[pyo3(get)]
    traces_registered: usize,
    #[pyo3(get)]
    records: u64,
    #[pyo3(get)]
    replays: u64,
    #[pyo3(get)]
    final_wait_count: u64,
    #[pyo3(get)]
    total_cost_seconds: f64,
    #[pyo3(get)]
    untraced_cost_seconds: f64,
    #[pyo3(get)]
    speedup: f64,
    #[pyo3(get)]
    final_traced_fraction: f64,
}

#[pymethods]
impl RunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(tasks={}, traces_registered={}, records={}, replays={}, speedup={:.3})",
            self.tasks, self.traces_registered, self.records, self.replays, self.speedup
        )
    }
}

/// Generate a synthetic task stream as text.
///
/// Kinds: jacobi, periodic, periodic_with_noise, nested_loops, random.
#[pyfunction]
#[pyo3(signature = (kind, seed=0, iterations=100, period=10, noise_rate=0.0,
                    inner_a=8, inner_b=2, alphabet=50, length=1000))]
#[allow(clippy::too_many_arguments)]
fn generate(
    kind: &str,
    seed: u64,
    iterations: u64,
    period: u32,
    noise_rate: f64,
    inner_a: u32,
    inner_b: u32,
    alphabet: u32,
    length: u64,
) -> PyResult<String> {
    let spec = match kind {
        "jacobi" => GeneratorSpec::Jacobi { iterations },
        "periodic" => GeneratorSpec::Periodic { period, iterations },
        "periodic_with_noise" => GeneratorSpec::PeriodicWithNoise {
            period,
            iterations,
            noise_rate,
        },
        "nested_loops" => GeneratorSpec::NestedLoops {
            outer: iterations,
            inner_a,
            inner_b,
        },
        "random" => GeneratorSpec::Random { alphabet, length },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown stream kind {other:?}"
            )))
        }
    };
    Ok(serialize_task_stream(&generate_tasks(&spec, seed)))
}

/// Run the engine over a task stream given as text.
#[pyfunction]
#[pyo3(signature = (stream, min_trace_length=25, max_trace_length=None, batchsize=5000,
                    multi_scale_factor=250, workers=1, latency_tokens=None, window=5000))]
#[allow(clippy::too_many_arguments)]
fn run(
    stream: &str,
    min_trace_length: usize,
    max_trace_length: Option<usize>,
    batchsize: usize,
    multi_scale_factor: usize,
    workers: usize,
    latency_tokens: Option<u64>,
    window: usize,
) -> PyResult<RunResult> {
    if window < 1 {
        return Err(PyValueError::new_err("window must be at least 1"));
    }
    let tasks = parse_task_stream(stream).map_err(to_value_error)?;
    let config = build_config(
        min_trace_length,
        max_trace_length,
        batchsize,
        multi_scale_factor,
        workers,
        latency_tokens,
    )?;
    let artifacts = run_to_artifacts(&tasks, config, &CostParams::default(), window)
        .map_err(to_value_error)?;
    let s = artifacts.summary;
    Ok(RunResult {
        annotated: artifacts.annotated_text,
        decisions: artifacts.decisions_text,
        cost_csv: artifacts.cost_csv,
        fraction_csv: artifacts.fraction_csv,
        tasks: s.tasks,
        traces_registered: s.traces_registered,
        records: s.records,
        replays: s.replays,
        final_wait_count: s.final_wait_count,
        total_cost_seconds: s.total_cost_seconds,
        untraced_cost_seconds: s.untraced_cost_seconds,
        speedup: s.speedup,
        final_traced_fraction: s.final_traced_fraction,
    })
}

/// Run the stream on several simulated nodes with randomized mining
/// latencies; returns None when every node emits identical output, or a
/// description of the first divergence.
#[pyfunction]
#[pyo3(signature = (stream, nodes=4, seed=0, max_latency=100, min_trace_length=25,
                    max_trace_length=None, batchsize=5000, multi_scale_factor=250))]
#[allow(clippy::too_many_arguments)]
fn replicate(
    stream: &str,
    nodes: usize,
    seed: u64,
    max_latency: u64,
    min_trace_length: usize,
    max_trace_length: Option<usize>,
    batchsize: usize,
    multi_scale_factor: usize,
) -> PyResult<Option<String>> {
    if nodes < 2 {
        return Err(PyValueError::new_err(format!(
            "replication needs at least 2 nodes, got {nodes}"
        )));
    }
    let tasks = parse_task_stream(stream).map_err(to_value_error)?;
    let config = build_config(
        min_trace_length,
        max_trace_length,
        batchsize,
        multi_scale_factor,
        1,
        None,
    )?;
    let report = run_replicated(
        &tasks,
        &config,
        &ReplicationConfig {
            nodes,
            base_seed: seed,
            max_latency_tokens: max_latency,
        },
    )
    .map_err(to_value_error)?;
    Ok(report
        .divergence
        .map(|d| format!("node {}: {}", d.node, d.detail)))
}

/// Mine a token sequence once; returns (length, starts) per selected repeat.
#[pyfunction]
#[pyo3(signature = (tokens, min_len=1))]
fn find_repeat_spans(tokens: Vec<u64>, min_len: usize) -> PyResult<Vec<(usize, Vec<usize>)>> {
    if min_len < 1 {
        return Err(PyValueError::new_err("min_len must be at least 1"));
    }
    let tokens: Vec<Token> = tokens.into_iter().map(Token).collect();
    Ok(find_repeats(&tokens, min_len)
        .repeats
        .into_iter()
        .map(|r| (r.len(), r.occurrences))
        .collect())
}

/// Hash a single task line to its stream token.
#[pyfunction]
fn hash_line(line: &str) -> PyResult<u64> {
    let tasks = parse_task_stream(line).map_err(to_value_error)?;
    match tasks.as_slice() {
        [task] => Ok(hash_task(task).0),
        _ => Err(PyValueError::new_err(format!(
            "expected exactly one task line, got {}",
            tasks.len()
        ))),
    }
}

/// Exponent of the largest power of two dividing k.
#[pyfunction]
fn ruler(k: u64) -> PyResult<u32> {
    if k < 1 {
        return Err(PyValueError::new_err("k must be at least 1"));
    }
    Ok(finder::ruler(k))
}

/// Token slice analyzed by the k-th mining job at the given cadence, or
/// None when the job is skipped.
#[pyfunction]
#[pyo3(signature = (k, cadence=1))]
fn analysis_slice(k: u64, cadence: u64) -> PyResult<Option<(u64, u64)>> {
    if k < 1 || cadence < 1 {
        return Err(PyValueError::new_err("k and cadence must be at least 1"));
    }
    Ok(finder::analysis_slice(k, cadence))
}

#[pymodule]
fn retrace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Engine>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    m.add_function(wrap_pyfunction!(find_repeat_spans, m)?)?;
    m.add_function(wrap_pyfunction!(hash_line, m)?)?;
    m.add_function(wrap_pyfunction!(ruler, m)?)?;
    m.add_function(wrap_pyfunction!(analysis_slice, m)?)?;
    Ok(())
}
