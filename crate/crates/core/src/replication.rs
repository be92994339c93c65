//! Lockstep replication of one engine across simulated nodes.
//!
//! Every node runs the same configuration over the same stream but draws
//! its own per-job latencies from a node-specific seed. Nodes advance one
//! task at a time; after each task they agree on the largest observed lag
//! (the consensus is a max, so it commutes and every node applies the same
//! wait-count increase at the same stream position). With that single
//! agreed value, all node outputs must be bit-identical; the report carries
//! the first divergence if they are not.

use crate::engine::{ConfigError, Decision, Engine, EngineConfig};
use crate::finder::{splitmix64, LatencyModel};
use crate::replayer::AnnotatedEvent;
use crate::task::TaskDescriptor;

/// Replication setup: node count and the latency universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationConfig {
    pub nodes: usize,
    pub base_seed: u64,
    /// Upper bound of per-job simulated latency, in tokens.
    pub max_latency_tokens: u64,
}

/// One node's observable output.
#[derive(Debug)]
pub struct NodeRun {
    pub events: Vec<AnnotatedEvent>,
    /// (stream position, new wait count), in order of application.
    pub wait_trajectory: Vec<(u64, u64)>,
    pub waits_observed: usize,
    pub final_wait_count: u64,
}

/// First point where a node's output stopped matching node 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub node: usize,
    pub detail: String,
}

#[derive(Debug)]
pub struct ReplicationReport {
    pub nodes: Vec<NodeRun>,
    pub divergence: Option<Divergence>,
}

pub fn run_replicated(
    tasks: &[TaskDescriptor],
    config: &EngineConfig,
    replication: &ReplicationConfig,
) -> Result<ReplicationReport, ConfigError> {
    assert!(replication.nodes >= 1, "need at least one node");
    let mut engines = Vec::with_capacity(replication.nodes);
    for node in 0..replication.nodes {
        let mut cfg = config.clone();
        cfg.latency = LatencyModel::SeededTokens {
            seed: splitmix64(replication.base_seed ^ (node as u64).wrapping_mul(0xa076_1d64_78bd_642f)),
            max_tokens: replication.max_latency_tokens,
        };
        engines.push(Engine::new(cfg)?);
    }

    let mut events: Vec<Vec<AnnotatedEvent>> = vec![Vec::new(); replication.nodes];
    let mut waits_observed = vec![0usize; replication.nodes];
    for task in tasks {
        let mut agreed_lag: Option<u64> = None;
        for (node, engine) in engines.iter_mut().enumerate() {
            let out = engine.push(task.clone());
            events[node].extend(out.events);
            waits_observed[node] += out.waits.len();
            if let Some(lag) = out.waits.iter().map(|w| w.lag).max() {
                agreed_lag = Some(agreed_lag.map_or(lag, |a| a.max(lag)));
            }
        }
        if let Some(lag) = agreed_lag {
            for engine in engines.iter_mut() {
                engine.apply_wait_increase(lag);
            }
        }
    }
    for (node, engine) in engines.iter_mut().enumerate() {
        events[node].extend(engine.finish());
    }

    let mut nodes = Vec::with_capacity(replication.nodes);
    for (engine, (events, waits)) in engines
        .into_iter()
        .zip(events.into_iter().zip(waits_observed))
    {
        let final_wait_count = engine.wait_count();
        let wait_trajectory = engine
            .into_log()
            .into_iter()
            .filter_map(|(pos, d)| match d {
                Decision::WaitCountRaised { wait_count } => Some((pos, wait_count)),
                _ => None,
            })
            .collect();
        nodes.push(NodeRun {
            events,
            wait_trajectory,
            waits_observed: waits,
            final_wait_count,
        });
    }
    let divergence = first_divergence(&nodes);
    Ok(ReplicationReport { nodes, divergence })
}

fn first_divergence(nodes: &[NodeRun]) -> Option<Divergence> {
    let reference = nodes.first()?;
    for (node, run) in nodes.iter().enumerate().skip(1) {
        if run.wait_trajectory != reference.wait_trajectory {
            return Some(Divergence {
                node,
                detail: format!(
                    "wait trajectory {:?} differs from node 0 {:?}",
                    run.wait_trajectory, reference.wait_trajectory
                ),
            });
        }
        if run.events.len() != reference.events.len() {
            return Some(Divergence {
                node,
                detail: format!(
                    "emitted {} events, node 0 emitted {}",
                    run.events.len(),
                    reference.events.len()
                ),
            });
        }
        for (i, (a, b)) in reference.events.iter().zip(&run.events).enumerate() {
            if a != b {
                return Some(Divergence {
                    node,
                    detail: format!("event {i} is {b:?}, node 0 has {a:?}"),
                });
            }
        }
    }
    None
}
