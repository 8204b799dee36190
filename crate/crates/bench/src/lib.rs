//! Benchmark harness for the `memgrad` solvers: configuration, reference
//! optima, experiment runs, trace files and summary tables.

// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;
pub mod summary;

use std::collections::HashMap;

use rayon::prelude::*;

use config::{Method, RunConfig};
use experiment::{run_on, Experiment, ExperimentError, Instance};

/// Environment variable capping the number of worker threads of a batch.
pub const THREADS_VAR: &str = "MEMGRAD_THREADS";

/// Cartesian product of methods, bundle sizes and seeds over `base`.
/// Memoryless methods ignore the bundle sizes.
pub fn expand(base: &RunConfig, methods: &[Method], sizes: &[usize], seeds: &[u64]) -> Vec<RunConfig> {
    let mut out = Vec::new();
    for &seed in seeds {
        for &method in methods {
            let sizes: Vec<Option<usize>> = if method.fixed_capacity().is_some() || sizes.is_empty() {
                vec![base.m.filter(|_| method.fixed_capacity().is_none())]
            } else {
                sizes.iter().map(|&m| Some(m)).collect()
            };
            for m in sizes {
                let mut c = base.clone();
                c.method = method;
                c.m = m;
                c.problem.seed = seed;
                out.push(c);
            }
        }
    }
    out
}

fn instance_key(c: &RunConfig) -> String {
    format!("{:?}/{}", c.problem, c.ref_budget)
}

/// Thread count from [`THREADS_VAR`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_VAR).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Runs every configuration, sharing instances and reference optima between
/// runs on the same problem. Results keep the input order.
pub fn run_batch(configs: &[RunConfig], threads: Option<usize>) -> Vec<Result<Experiment, ExperimentError>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().expect("thread pool");
    pool.install(|| {
        let mut specs: Vec<&RunConfig> = Vec::new();
        let mut seen = HashMap::new();
        for c in configs {
            if c.validate().is_ok() && !seen.contains_key(&instance_key(c)) {
                seen.insert(instance_key(c), specs.len());
                specs.push(c);
            }
        }
        let instances: Vec<Result<Instance, ExperimentError>> =
            specs.par_iter().map(|c| Instance::prepare(&c.problem, c.ref_budget)).collect();
        configs
            .par_iter()
            .map(|c| {
                c.validate()?;
                match &instances[seen[&instance_key(c)]] {
                    Ok(instance) => run_on(c, instance),
                    Err(ExperimentError::Config(e)) => Err(config::ConfigError::Incompatible(e.to_string()).into()),
                    Err(ExperimentError::Solver(e)) => Err(ExperimentError::Solver(e.clone())),
                }
            })
            .collect()
    })
}
