//! Worker-pool job runner. Parallelism never changes results: jobs write
//! disjoint slots and all merging is index-ordered (see core's exec
//! contract), so `--threads 1` and `--threads 4` produce identical bytes.

use std::collections::VecDeque;
use std::sync::Mutex;

use poseforge_core::exec::JobRunner;

pub struct ThreadRunner {
    threads: usize,
}

impl ThreadRunner {
    pub fn new(threads: usize) -> Self {
        Self {
            threads: threads.max(1),
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl JobRunner for ThreadRunner {
    fn run<'scope>(&self, jobs: Vec<Box<dyn FnOnce() + Send + 'scope>>) {
        if self.threads == 1 || jobs.len() <= 1 {
            for job in jobs {
                job();
            }
            return;
        }
        let queue: Mutex<VecDeque<Box<dyn FnOnce() + Send + 'scope>>> = Mutex::new(jobs.into());
        let workers = self.threads;
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let job = queue.lock().expect("a worker panicked").pop_front();
                    match job {
                        Some(job) => job(),
                        None => break,
                    }
                });
            }
        });
    }
}

/// Thread count precedence: explicit flag, then POSEFORGE_THREADS, then
/// the machine's available parallelism.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    if let Some(n) = flag {
        return n.max(1);
    }
    if let Ok(env) = std::env::var("POSEFORGE_THREADS") {
        if let Ok(n) = env.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use poseforge_core::exec::map_indexed;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn all_jobs_run_exactly_once() {
        static COUNT: AtomicUsize = AtomicUsize::new(0);
        let runner = ThreadRunner::new(4);
        let jobs: Vec<Box<dyn FnOnce() + Send>> = (0..100)
            .map(|_| {
                Box::new(|| {
                    COUNT.fetch_add(1, Ordering::SeqCst);
                }) as Box<dyn FnOnce() + Send>
            })
            .collect();
        runner.run(jobs);
        assert_eq!(COUNT.load(Ordering::SeqCst), 100);
    }

    #[test]
    fn results_are_index_ordered_regardless_of_thread_count() {
        let serial: Vec<usize> = map_indexed(&ThreadRunner::new(1), 64, |i| i * i);
        let threaded: Vec<usize> = map_indexed(&ThreadRunner::new(4), 64, |i| i * i);
        assert_eq!(serial, threaded);
        assert_eq!(serial[9], 81);
    }

    #[test]
    fn flag_beats_env_beats_detection() {
        assert_eq!(resolve_threads(Some(3)), 3);
        assert_eq!(resolve_threads(Some(0)), 1);
        assert!(resolve_threads(None) >= 1);
    }
}
