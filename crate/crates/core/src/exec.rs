//! Pluggable job execution.
//!
//! Compute stages that parallelize across independent items (flow fields,
//! embedding batches) go through a [`JobRunner`] so the same code runs
//! single-threaded here and threaded in the companion crate. Results must not
//! depend on execution order: jobs write to disjoint output slots and all
//! merging happens index-ordered after `run` returns.

use alloc::boxed::Box;
use alloc::vec::Vec;

/// A batch executor. `run` returns once every job has finished. Jobs may
/// borrow from the caller's stack; the runner must not outlive them.
pub trait JobRunner {
    fn run<'scope>(&self, jobs: Vec<Box<dyn FnOnce() + Send + 'scope>>);
}

/// Runs jobs in submission order on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialRunner;

impl JobRunner for SerialRunner {
    fn run<'scope>(&self, jobs: Vec<Box<dyn FnOnce() + Send + 'scope>>) {
        for job in jobs {
            job();
        }
    }
}

/// Computes `f(0..n)` through `runner` and returns results in index order.
#[cfg(feature = "std")]
pub fn map_indexed<T, F>(runner: &dyn JobRunner, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    use std::sync::Mutex;

    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    let f = &f;
    let slots_ref = &slots;
    let jobs: Vec<Box<dyn FnOnce() + Send + '_>> = (0..n)
        .map(|i| {
            Box::new(move || {
                let value = f(i);
                slots_ref.lock().expect("worker panicked").as_mut_slice()[i] = Some(value);
            }) as Box<dyn FnOnce() + Send + '_>
        })
        .collect();
    runner.run(jobs);
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|s| s.expect("runner dropped a job"))
        .collect()
}
