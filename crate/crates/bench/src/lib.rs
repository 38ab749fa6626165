//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use pmiprof::benchmark::{find_task, register_builtin_tasks};
use pmiprof::{JointDistribution, JointDistributionExt, PairedSample, Seed};

/// A registry task by name.
pub fn task(name: &str) -> Arc<dyn JointDistribution> {
    let tasks = register_builtin_tasks();
    find_task(&tasks, name)
        .and_then(|t| t.build())
        .unwrap_or_else(|e| panic!("task {name}: {e}"))
}

pub fn task_sample(name: &str, n: usize) -> PairedSample {
    task(name).sample(Seed(1), n)
}
