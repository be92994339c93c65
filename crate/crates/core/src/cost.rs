//! Simulated analysis-cost model over annotated streams.
//!
//! Each task is charged by how it was emitted: plain tasks pay the full
//! per-task analysis cost, tasks inside a recording bracket pay a capture
//! surcharge, and tasks inside a replay bracket pay only the replay cost.
//! Each replayed bracket additionally pays a fixed begin overhead. The
//! baseline for speedup is the same stream with every task plain.

use thiserror::Error;

use crate::replayer::AnnotatedEvent;

/// Per-task costs in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    /// Plain task analysis cost.
    pub alpha: f64,
    /// Cost of a task while its trace is being recorded.
    pub alpha_m: f64,
    /// Cost of a task replayed from a trace.
    pub alpha_r: f64,
    /// Fixed overhead per replayed trace begin.
    pub begin_overhead: f64,
}

impl Default for CostParams {
    fn default() -> CostParams {
        CostParams {
            alpha: 1.0e-3,
            alpha_m: 1.2e-3,
            alpha_r: 1.0e-4,
            begin_overhead: 2.0e-4,
        }
    }
}

impl CostParams {
    /// Replay must be much cheaper than analysis, and recording at least as
    /// expensive as analysis.
    pub fn validate(&self) -> Result<(), CostError> {
        let rates = [self.alpha, self.alpha_m, self.alpha_r, self.begin_overhead];
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(CostError("cost rates must be finite"));
        }
        if self.alpha <= 0.0 {
            return Err(CostError("alpha must be positive"));
        }
        if self.alpha_r >= self.alpha {
            return Err(CostError("alpha_r must be below alpha"));
        }
        if self.alpha_m < self.alpha {
            return Err(CostError("alpha_m must be at least alpha"));
        }
        if self.begin_overhead < 0.0 {
            return Err(CostError("begin overhead must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid cost parameters: {0}")]
pub struct CostError(pub &'static str);

/// An annotated stream that is not properly bracketed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("event {index}: trace {inner} begins inside trace {outer}")]
    NestedTrace { index: usize, outer: u32, inner: u32 },
    #[error("event {index}: trace {found} ends without a begin")]
    UnmatchedEnd { index: usize, found: u32 },
    #[error("event {index}: trace {found} ends while trace {expected} is open")]
    MismatchedEnd {
        index: usize,
        expected: u32,
        found: u32,
    },
    #[error("event {index}: trace {id} contains no tasks")]
    EmptyTrace { index: usize, id: u32 },
    #[error("trace {id} is still open at the end of the stream")]
    UnclosedTrace { id: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeKind {
    Plain,
    Record,
    Replay,
    ReplayBegin,
}

impl ChargeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChargeKind::Plain => "plain",
            ChargeKind::Record => "record",
            ChargeKind::Replay => "replay",
            ChargeKind::ReplayBegin => "replay_begin",
        }
    }
}

/// One charge. `index` is the 0-based task position the charge attaches to;
/// a replay-begin overhead attaches to the first task of its bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeRow {
    pub index: u64,
    pub kind: ChargeKind,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostReport {
    pub rows: Vec<ChargeRow>,
    pub total_seconds: f64,
    pub plain_tasks: u64,
    pub recorded_tasks: u64,
    pub replayed_tasks: u64,
    pub replay_begins: u64,
}

impl CostReport {
    pub fn task_count(&self) -> u64 {
        self.plain_tasks + self.recorded_tasks + self.replayed_tasks
    }

    /// Cost of the same stream with every task plain.
    pub fn untraced_seconds(&self, params: &CostParams) -> f64 {
        self.task_count() as f64 * params.alpha
    }

    pub fn speedup(&self, params: &CostParams) -> f64 {
        self.untraced_seconds(params) / self.total_seconds
    }
}

/// Charges an annotated stream under the cost model.
pub fn simulate_cost(
    events: &[AnnotatedEvent],
    params: &CostParams,
) -> Result<CostReport, StructureError> {
    let mut report = CostReport::default();
    let mut open: Option<(u32, bool, usize, usize)> = None;
    let mut task_index = 0u64;

    for (index, event) in events.iter().enumerate() {
        match event {
            AnnotatedEvent::Task(_) => {
                let (kind, seconds) = match open {
                    None => (ChargeKind::Plain, params.alpha),
                    Some((_, true, _, _)) => (ChargeKind::Record, params.alpha_m),
                    Some((_, false, _, _)) => (ChargeKind::Replay, params.alpha_r),
                };
                match kind {
                    ChargeKind::Plain => report.plain_tasks += 1,
                    ChargeKind::Record => report.recorded_tasks += 1,
                    ChargeKind::Replay => report.replayed_tasks += 1,
                    ChargeKind::ReplayBegin => unreachable!(),
                }
                report.rows.push(ChargeRow {
                    index: task_index,
                    kind,
                    seconds,
                });
                report.total_seconds += seconds;
                task_index += 1;
            }
            AnnotatedEvent::TraceBegin { id, record } => {
                if let Some((outer, _, _, _)) = open {
                    return Err(StructureError::NestedTrace {
                        index,
                        outer,
                        inner: *id,
                    });
                }
                open = Some((*id, *record, index, task_index as usize));
                if !record {
                    report.replay_begins += 1;
                    report.rows.push(ChargeRow {
                        index: task_index,
                        kind: ChargeKind::ReplayBegin,
                        seconds: params.begin_overhead,
                    });
                    report.total_seconds += params.begin_overhead;
                }
            }
            AnnotatedEvent::TraceEnd { id } => match open.take() {
                None => {
                    return Err(StructureError::UnmatchedEnd {
                        index,
                        found: *id,
                    })
                }
                Some((begun, _, begin_index, tasks_at_begin)) => {
                    if begun != *id {
                        return Err(StructureError::MismatchedEnd {
                            index,
                            expected: begun,
                            found: *id,
                        });
                    }
                    if task_index as usize == tasks_at_begin {
                        return Err(StructureError::EmptyTrace {
                            index: begin_index,
                            id: *id,
                        });
                    }
                }
            },
        }
    }
    if let Some((id, _, _, _)) = open {
        return Err(StructureError::UnclosedTrace { id });
    }
    Ok(report)
}

/// Rolling traced fraction: row i is the fraction of the last
/// `min(i + 1, window)` tasks that were inside a trace bracket.
pub fn traced_fraction_report(events: &[AnnotatedEvent], window: usize) -> Vec<(u64, f64)> {
    assert!(window >= 1, "window must be positive");
    let mut traced: Vec<bool> = Vec::new();
    let mut depth = 0u32;
    for event in events {
        match event {
            AnnotatedEvent::Task(_) => traced.push(depth > 0),
            AnnotatedEvent::TraceBegin { .. } => depth += 1,
            AnnotatedEvent::TraceEnd { .. } => depth = depth.saturating_sub(1),
        }
    }
    let mut rows = Vec::with_capacity(traced.len());
    let mut in_window = 0usize;
    for i in 0..traced.len() {
        if traced[i] {
            in_window += 1;
        }
        if i >= window && traced[i - window] {
            in_window -= 1;
        }
        let width = (i + 1).min(window);
        rows.push((i as u64, in_window as f64 / width as f64));
    }
    rows
}

pub fn cost_csv(report: &CostReport) -> String {
    let mut out = String::from("index,kind,seconds\n");
    for row in &report.rows {
        out.push_str(&format!("{},{},{}\n", row.index, row.kind.as_str(), row.seconds));
    }
    out
}

pub fn fraction_csv(rows: &[(u64, f64)]) -> String {
    let mut out = String::from("index,fraction\n");
    for (i, f) in rows {
        out.push_str(&format!("{i},{f}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TaskDescriptor;

    fn task() -> AnnotatedEvent {
        AnnotatedEvent::Task(TaskDescriptor::new("t", vec![]))
    }

    fn bracket(id: u32, record: bool, len: usize) -> Vec<AnnotatedEvent> {
        let mut v = vec![AnnotatedEvent::TraceBegin { id, record }];
        v.extend((0..len).map(|_| task()));
        v.push(AnnotatedEvent::TraceEnd { id });
        v
    }

    #[test]
    fn charges_by_emission_kind() {
        let mut events = vec![task(), task()];
        events.extend(bracket(0, true, 3));
        events.extend(bracket(0, false, 3));
        let report = simulate_cost(&events, &CostParams::default()).unwrap();
        assert_eq!(report.plain_tasks, 2);
        assert_eq!(report.recorded_tasks, 3);
        assert_eq!(report.replayed_tasks, 3);
        assert_eq!(report.replay_begins, 1);
        let expected = 2.0 * 1.0e-3 + 3.0 * 1.2e-3 + 3.0 * 1.0e-4 + 2.0e-4;
        assert!((report.total_seconds - expected).abs() < 1e-12);
    }

    #[test]
    fn hundredfold_replay_reference_value() {
        // one 100-task trace recorded once and replayed 99 times
        let mut events = bracket(0, true, 100);
        for _ in 0..99 {
            events.extend(bracket(0, false, 100));
        }
        let params = CostParams::default();
        let report = simulate_cost(&events, &params).unwrap();
        assert!((report.total_seconds - 1.1298).abs() < 1e-9);
        assert!((report.untraced_seconds(&params) - 10.0).abs() < 1e-9);
        assert!((report.speedup(&params) - 10.0 / 1.1298).abs() < 1e-9);
    }

    #[test]
    fn structure_errors_are_reported() {
        let bad = vec![
            AnnotatedEvent::TraceBegin { id: 0, record: true },
            AnnotatedEvent::TraceBegin { id: 1, record: true },
        ];
        assert!(matches!(
            simulate_cost(&bad, &CostParams::default()),
            Err(StructureError::NestedTrace { .. })
        ));
        let bad = vec![AnnotatedEvent::TraceEnd { id: 0 }];
        assert!(matches!(
            simulate_cost(&bad, &CostParams::default()),
            Err(StructureError::UnmatchedEnd { .. })
        ));
        let bad = vec![
            AnnotatedEvent::TraceBegin { id: 0, record: true },
            task(),
            AnnotatedEvent::TraceEnd { id: 1 },
        ];
        assert!(matches!(
            simulate_cost(&bad, &CostParams::default()),
            Err(StructureError::MismatchedEnd { .. })
        ));
        let bad = vec![
            AnnotatedEvent::TraceBegin { id: 0, record: true },
            AnnotatedEvent::TraceEnd { id: 0 },
        ];
        assert!(matches!(
            simulate_cost(&bad, &CostParams::default()),
            Err(StructureError::EmptyTrace { .. })
        ));
        let bad = vec![AnnotatedEvent::TraceBegin { id: 0, record: true }, task()];
        assert!(matches!(
            simulate_cost(&bad, &CostParams::default()),
            Err(StructureError::UnclosedTrace { id: 0 })
        ));
    }

    #[test]
    fn fraction_window_rolls() {
        let mut events = vec![task(), task()];
        events.extend(bracket(0, true, 2));
        let rows = traced_fraction_report(&events, 2);
        let fractions: Vec<f64> = rows.iter().map(|(_, f)| *f).collect();
        assert_eq!(fractions, vec![0.0, 0.0, 0.5, 1.0]);
        let wide = traced_fraction_report(&events, 100);
        assert_eq!(wide.last().unwrap().1, 0.5);
    }

    #[test]
    fn csv_shapes() {
        let events = bracket(0, false, 1);
        let report = simulate_cost(&events, &CostParams::default()).unwrap();
        let csv = cost_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,kind,seconds");
        assert!(lines[1].starts_with("0,replay_begin,"));
        assert!(lines[2].starts_with("0,replay,"));
        let frows = traced_fraction_report(&events, 10);
        assert_eq!(fraction_csv(&frows), "index,fraction\n0,1\n");
    }
}
