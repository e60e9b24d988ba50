//! Threaded objective evaluation and a wall clock for time budgets.

use std::thread;
use std::time::Instant;

use priorimax_core::es::{Clock, Evaluation, Executor};

/// Splits each generation into contiguous chunks evaluated on scoped
/// threads. Results come back in input order, so the optimizer's output
/// does not depend on the worker count.
#[derive(Debug, Clone, Copy)]
pub struct ThreadedExecutor {
    workers: usize,
}

impl ThreadedExecutor {
    pub fn new(workers: usize) -> Self {
        Self { workers: workers.max(1) }
    }

    pub fn available() -> Self {
        Self::new(thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Executor for ThreadedExecutor {
    fn evaluate(&self, points: &[Vec<f64>], eval: &(dyn Fn(&[f64]) -> Evaluation + Sync)) -> Vec<Evaluation> {
        if self.workers == 1 || points.len() < 2 {
            return points.iter().map(|p| eval(p)).collect();
        }
        let chunk = points.len().div_ceil(self.workers);
        thread::scope(|s| {
            let handles: Vec<_> = points
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|p| eval(p)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("objective evaluation panicked"))
                .collect()
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
