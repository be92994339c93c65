//! Synthetic task-stream generators for experiments and tests.
//!
//! Everything is a pure function of (spec, seed): generators draw all
//! randomness from a counter-based ChaCha stream, so equal inputs give
//! byte-identical streams on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::task::{Privilege, RegionArg, TaskDescriptor};

/// What to generate.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// An iterative solver: dot/sub/div per iteration, input and output
    /// vectors swapping every iteration, so the descriptor stream has
    /// period 6 (two iterations).
    Jacobi { iterations: u64 },
    /// `iterations` repetitions of a block of `period` distinct tasks.
    Periodic { period: u32, iterations: u64 },
    /// Periodic blocks with an identical untraceable check task appearing
    /// between blocks with probability `period * noise_rate` (noise_rate is
    /// per token).
    PeriodicWithNoise {
        period: u32,
        iterations: u64,
        noise_rate: f64,
    },
    /// `outer` repetitions of: a head task, `inner_a` copies of one inner
    /// body, then `inner_b` copies of another.
    NestedLoops {
        outer: u64,
        inner_a: u32,
        inner_b: u32,
    },
    /// Uniform random tasks over an alphabet of the given size.
    Random { alphabet: u32, length: u64 },
}

/// Generates the stream for a spec. The seed only matters for specs that
/// draw randomness; deterministic specs ignore it.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Vec<TaskDescriptor> {
    match *spec {
        GeneratorSpec::Jacobi { iterations } => jacobi(iterations),
        GeneratorSpec::Periodic { period, iterations } => periodic(period, iterations),
        GeneratorSpec::PeriodicWithNoise {
            period,
            iterations,
            noise_rate,
        } => periodic_with_noise(period, iterations, noise_rate, seed),
        GeneratorSpec::NestedLoops {
            outer,
            inner_a,
            inner_b,
        } => nested_loops(outer, inner_a, inner_b),
        GeneratorSpec::Random { alphabet, length } => random(alphabet, length, seed),
    }
}

fn jacobi(iterations: u64) -> Vec<TaskDescriptor> {
    let mut tasks = Vec::with_capacity(iterations as usize * 3);
    for i in 0..iterations {
        let (x_in, x_out) = if i % 2 == 0 { ("x1", "x2") } else { ("x2", "x1") };
        tasks.push(TaskDescriptor::new(
            "dot",
            vec![
                RegionArg::new("coeffs", Privilege::Read, &["vals"]).with_partition("rows"),
                RegionArg::new(x_in, Privilege::Read, &["v"]),
                RegionArg::new("t1", Privilege::Write, &["v"]),
            ],
        ));
        tasks.push(TaskDescriptor::new(
            "sub",
            vec![
                RegionArg::new("rhs", Privilege::Read, &["v"]),
                RegionArg::new("t1", Privilege::Read, &["v"]),
                RegionArg::new("t2", Privilege::Write, &["v"]),
            ],
        ));
        tasks.push(TaskDescriptor::new(
            "div",
            vec![
                RegionArg::new("t2", Privilege::Read, &["v"]),
                RegionArg::new("diag", Privilege::Read, &["vals"]),
                RegionArg::new(x_out, Privilege::Write, &["v"]),
            ],
        ));
    }
    tasks
}

fn block_task(j: u32) -> TaskDescriptor {
    TaskDescriptor::new(
        format!("step{j}"),
        vec![RegionArg::new(format!("r{j}"), Privilege::ReadWrite, &["cell"])],
    )
}

fn periodic(period: u32, iterations: u64) -> Vec<TaskDescriptor> {
    let mut tasks = Vec::with_capacity((period as u64 * iterations) as usize);
    for _ in 0..iterations {
        for j in 0..period {
            tasks.push(block_task(j));
        }
    }
    tasks
}

fn periodic_with_noise(
    period: u32,
    iterations: u64,
    noise_rate: f64,
    seed: u64,
) -> Vec<TaskDescriptor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (period as f64 * noise_rate).clamp(0.0, 1.0);
    let check = TaskDescriptor::untraceable(
        "check",
        vec![RegionArg::new("residual", Privilege::Read, &["norm"])],
    );
    let mut tasks = Vec::new();
    for _ in 0..iterations {
        for j in 0..period {
            tasks.push(block_task(j));
        }
        if rng.random_bool(p) {
            tasks.push(check.clone());
        }
    }
    tasks
}

fn nested_loops(outer: u64, inner_a: u32, inner_b: u32) -> Vec<TaskDescriptor> {
    let mut tasks = Vec::new();
    for _ in 0..outer {
        tasks.push(TaskDescriptor::new(
            "advance",
            vec![RegionArg::new("time", Privilege::ReadWrite, &["step"])],
        ));
        for _ in 0..inner_a {
            tasks.push(TaskDescriptor::new(
                "stencil",
                vec![
                    RegionArg::new("grid", Privilege::Read, &["u"]).with_partition("halo"),
                    RegionArg::new("grid", Privilege::Write, &["u_next"]),
                ],
            ));
        }
        for _ in 0..inner_b {
            tasks.push(TaskDescriptor::new(
                "reduce",
                vec![
                    RegionArg::new("grid", Privilege::Read, &["u_next"]),
                    RegionArg::new("norms", Privilege::Reduce, &["l2"]),
                ],
            ));
        }
    }
    tasks
}

fn random(alphabet: u32, length: u64, seed: u64) -> Vec<TaskDescriptor> {
    let alphabet = alphabet.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..length)
        .map(|_| block_task(rng.random_range(0..alphabet)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repeats::find_repeats;
    use crate::token::tokenize_stream;

    #[test]
    fn jacobi_stream_has_period_six() {
        let tasks = jacobi(4);
        assert_eq!(tasks.len(), 12);
        let tokens = tokenize_stream(&tasks);
        for i in 0..6 {
            assert_eq!(tokens[i], tokens[i + 6]);
        }
        assert_ne!(tokens[0], tokens[3], "dot alternates with the vectors");
        assert_ne!(tokens[2], tokens[5], "div alternates with the vectors");
        assert_eq!(tokens[1], tokens[4], "sub does not touch the vectors");
        // 5 distinct descriptors, but the stream period is 6
        let distinct: std::collections::HashSet<_> = tokens[..6].iter().collect();
        assert_eq!(distinct.len(), 5);
    }

    #[test]
    fn jacobi_example_mines_one_period_repeat() {
        let tokens = tokenize_stream(&jacobi(4));
        let r = find_repeats(&tokens, 3);
        assert_eq!(r.repeats.len(), 1);
        assert_eq!(r.repeats[0].tokens.len(), 6);
        assert_eq!(r.repeats[0].occurrences, vec![0, 6]);
        assert_eq!(r.coverage(), 12);
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let spec = GeneratorSpec::PeriodicWithNoise {
            period: 10,
            iterations: 50,
            noise_rate: 0.02,
        };
        assert_eq!(generate(&spec, 9), generate(&spec, 9));
        let spec = GeneratorSpec::Random {
            alphabet: 5,
            length: 200,
        };
        assert_eq!(generate(&spec, 1), generate(&spec, 1));
        assert_ne!(generate(&spec, 1), generate(&spec, 2));
    }

    #[test]
    fn noise_tasks_are_untraceable_checks() {
        let spec = GeneratorSpec::PeriodicWithNoise {
            period: 5,
            iterations: 400,
            noise_rate: 0.1,
        };
        let tasks = generate(&spec, 3);
        let checks = tasks.iter().filter(|t| t.untraceable).count();
        assert!(checks > 100, "expected noise, got {checks}");
        assert!(tasks
            .iter()
            .filter(|t| t.untraceable)
            .all(|t| t.task_name == "check"));
    }

    #[test]
    fn nested_loops_shape() {
        let tasks = nested_loops(2, 3, 1);
        let names: Vec<&str> = tasks.iter().map(|t| t.task_name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "advance", "stencil", "stencil", "stencil", "reduce", "advance", "stencil",
                "stencil", "stencil", "reduce",
            ]
        );
    }
}
