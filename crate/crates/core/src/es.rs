//! Stochastic ranking evolution strategy for box- and equality-constrained
//! global maximization.
//!
//! A (μ, λ) strategy with log-normal step-size self-adaptation and a
//! differential variation step for the top parents. Constraint handling is
//! the stochastic-ranking bubble sort: adjacent individuals are compared by
//! objective when both are feasible or with probability `pf`, otherwise by
//! constraint violation.
//!
//! All randomness is drawn from ChaCha streams keyed by
//! `(generation, individual)`, so results do not depend on the order in
//! which an [`Executor`] evaluates a generation.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// A maximization problem with optional equality constraints `h(x) = 0`.
pub trait Problem: Sync {
    fn dimension(&self) -> usize;

    fn objective(&self, x: &[f64]) -> f64;

    fn equality_residuals(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// `Σ max(0, |hᵢ| − tol)²`; zero means feasible.
    pub violation: f64,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }

    /// Feasible beats infeasible, then higher value or lower violation.
    pub fn better_than(&self, other: &Evaluation) -> bool {
        if self.violation != other.violation {
            return self.violation < other.violation;
        }
        self.value > other.value
    }
}

pub fn violation(residuals: &[f64], tol: f64) -> f64 {
    residuals
        .iter()
        .map(|h| {
            let excess = (h.abs() - tol).max(0.0);
            excess * excess
        })
        .sum()
}

/// Evaluates a batch of points. Implementations may run in parallel but must
/// return results in input order.
pub trait Executor {
    fn evaluate(&self, points: &[Vec<f64>], eval: &(dyn Fn(&[f64]) -> Evaluation + Sync)) -> Vec<Evaluation>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn evaluate(&self, points: &[Vec<f64>], eval: &(dyn Fn(&[f64]) -> Evaluation + Sync)) -> Vec<Evaluation> {
        points.iter().map(|p| eval(p)).collect()
    }
}

/// Wall-clock source for time budgets.
pub trait Clock {
    fn elapsed_secs(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidBounds("lower and upper differ in length".to_string()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidBounds("bounds must be finite".to_string()));
            }
            if l > u {
                return Err(Error::InvalidBounds("lower bound above upper bound".to_string()));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn contains(&self, j: usize, v: f64) -> bool {
        v >= self.lower[j] && v <= self.upper[j]
    }

    fn clamp(&self, j: usize, v: f64) -> f64 {
        v.clamp(self.lower[j], self.upper[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsConfig {
    /// λ; defaults to `20 (n + 1)`.
    pub population: Option<usize>,
    /// μ; defaults to `round(λ / 7)`.
    pub parents: Option<usize>,
    pub max_evals: usize,
    /// Checked between generations when a [`Clock`] is supplied.
    pub time_budget_secs: Option<f64>,
    pub seed: u64,
    /// Probability of comparing infeasible neighbours by objective.
    pub pf: f64,
    pub constraint_tol: f64,
    /// Differential variation weight.
    pub gamma: f64,
    /// Step-size smoothing factor.
    pub alpha: f64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            population: None,
            parents: None,
            max_evals: 100_000,
            time_budget_secs: None,
            seed: 0,
            pf: 0.45,
            constraint_tol: 1e-6,
            gamma: 0.85,
            alpha: 0.2,
        }
    }
}

impl EsConfig {
    pub fn population_for(&self, dim: usize) -> usize {
        self.population.unwrap_or(20 * (dim + 1))
    }

    pub fn parents_for(&self, lambda: usize) -> usize {
        self.parents
            .unwrap_or_else(|| libm::round(lambda as f64 / 7.0) as usize)
            .clamp(1, lambda)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let lambda = self.population_for(dim);
        if lambda < 2 {
            return Err(Error::InvalidConfig("population must be at least 2".to_string()));
        }
        if !(self.pf > 0.0 && self.pf <= 0.5) {
            return Err(Error::InvalidConfig("pf must lie in (0, 0.5]".to_string()));
        }
        if !(self.constraint_tol >= 0.0) {
            return Err(Error::InvalidConfig("constraint_tol must be nonnegative".to_string()));
        }
        if let Some(mu) = self.parents {
            if mu == 0 || mu > lambda {
                return Err(Error::InvalidConfig("parents must lie in 1..=population".to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub evaluations: usize,
    /// Objective of the best individual found so far.
    pub best_value: f64,
    pub best_violation: f64,
    /// Share of the current population that is feasible.
    pub feasible_fraction: f64,
    pub elapsed_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsOutcome {
    pub best: Vec<f64>,
    pub best_eval: Evaluation,
    pub evaluations: usize,
    pub generations: usize,
    /// The time budget ended the run before `max_evals`.
    pub timed_out: bool,
    pub trace: Vec<GenerationStats>,
}

/// Optional collaborators for a run.
pub struct Hooks<'a> {
    pub executor: &'a dyn Executor,
    pub clock: Option<&'a dyn Clock>,
    pub on_generation: Option<&'a mut dyn FnMut(&GenerationStats)>,
}

impl Default for Hooks<'_> {
    fn default() -> Self {
        Self { executor: &Sequential, clock: None, on_generation: None }
    }
}

const INIT_STREAM: u64 = 0;
const RANK_SLOT: u64 = 0xFFFF_FFFF;
const BOUND_RETRIES: usize = 10;

fn stream(seed: u64, generation: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 32) | slot);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Stochastic-ranking bubble sort. Returns indices, best first.
pub fn stochastic_rank(evals: &[Evaluation], pf: f64, rng: &mut impl Rng) -> Vec<usize> {
    let n = evals.len();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        let mut swapped = false;
        for j in 0..n.saturating_sub(1) {
            let (a, b) = (&evals[order[j]], &evals[order[j + 1]]);
            let u: f64 = rng.random();
            let swap = if (a.is_feasible() && b.is_feasible()) || u < pf {
                a.value < b.value
            } else {
                a.violation > b.violation
            };
            if swap {
                order.swap(j, j + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    order
}

/// Maximizes `problem` over `bounds`.
///
/// `initial` points (clamped to the bounds) seed the first population ahead
/// of uniform random draws; the best point ever evaluated is returned, so the
/// result is never worse than any seed.
pub fn stochastic_ranking_es(
    problem: &dyn Problem,
    bounds: &Bounds,
    cfg: &EsConfig,
    initial: &[Vec<f64>],
    hooks: &mut Hooks<'_>,
) -> Result<EsOutcome> {
    let n = problem.dimension();
    if bounds.dimension() != n {
        return Err(Error::InvalidBounds("bounds dimension differs from the problem".to_string()));
    }
    if n == 0 {
        return Err(Error::InvalidBounds("problem has no decision variables".to_string()));
    }
    cfg.validate(n)?;
    for p in initial {
        if p.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: p.len() });
        }
    }

    let lambda = cfg.population_for(n);
    let mu = cfg.parents_for(lambda);
    let tau = 1.0 / libm::sqrt(2.0 * libm::sqrt(n as f64));
    let tau_prime = 1.0 / libm::sqrt(2.0 * n as f64);
    let sigma_max: Vec<f64> = (0..n)
        .map(|j| (bounds.upper[j] - bounds.lower[j]) / libm::sqrt(n as f64))
        .collect();

    let tol = cfg.constraint_tol;
    let evaluate = move |x: &[f64]| Evaluation {
        value: problem.objective(x),
        violation: violation(&problem.equality_residuals(x), tol),
    };

    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(lambda);
    for k in 0..lambda {
        let x = if let Some(seed_point) = initial.get(k) {
            seed_point.iter().enumerate().map(|(j, &v)| bounds.clamp(j, v)).collect()
        } else {
            let mut rng = stream(cfg.seed, INIT_STREAM, k as u64);
            (0..n)
                .map(|j| {
                    let u: f64 = rng.random();
                    bounds.lower[j] + u * (bounds.upper[j] - bounds.lower[j])
                })
                .collect()
        };
        xs.push(x);
    }
    let mut sigmas: Vec<Vec<f64>> = vec![sigma_max.clone(); lambda];

    let mut evaluations = 0usize;
    let mut best: Option<(Vec<f64>, Evaluation)> = None;
    let mut trace = Vec::new();
    let mut timed_out = false;
    let mut generation = 0usize;

    loop {
        let evals = hooks.executor.evaluate(&xs, &evaluate);
        evaluations += evals.len();
        for (x, e) in xs.iter().zip(&evals) {
            if best.as_ref().is_none_or(|(_, b)| e.better_than(b)) {
                best = Some((x.clone(), *e));
            }
        }
        let (_, best_eval) = best.as_ref().expect("population is never empty");
        let stats = GenerationStats {
            generation,
            evaluations,
            best_value: best_eval.value,
            best_violation: best_eval.violation,
            feasible_fraction: evals.iter().filter(|e| e.is_feasible()).count() as f64 / evals.len() as f64,
            elapsed_secs: hooks.clock.map(|c| c.elapsed_secs()),
        };
        trace.push(stats);
        if let Some(cb) = hooks.on_generation.as_mut() {
            cb(&stats);
        }

        if evaluations + lambda > cfg.max_evals {
            break;
        }
        if let (Some(limit), Some(elapsed)) = (cfg.time_budget_secs, stats.elapsed_secs) {
            if elapsed >= limit {
                timed_out = true;
                break;
            }
        }

        let mut rank_rng = stream(cfg.seed, generation as u64, RANK_SLOT);
        let order = stochastic_rank(&evals, cfg.pf, &mut rank_rng);
        let parents: Vec<(Vec<f64>, Vec<f64>)> = order[..mu]
            .iter()
            .map(|&i| (xs[i].clone(), sigmas[i].clone()))
            .collect();

        generation += 1;
        for k in 0..lambda {
            let mut rng = stream(cfg.seed, generation as u64, k as u64);
            let (px, ps) = &parents[k % mu];
            let mut child = None;
            if k + 1 < mu {
                let lead = &parents[0].0;
                let next = &parents[k + 1].0;
                let candidate: Vec<f64> = (0..n).map(|j| px[j] + cfg.gamma * (lead[j] - next[j])).collect();
                if candidate.iter().enumerate().all(|(j, &v)| bounds.contains(j, v)) {
                    child = Some((candidate, ps.clone()));
                }
            }
            let (x, s) = child.unwrap_or_else(|| {
                let global = normal(&mut rng);
                let mut x = vec![0.0; n];
                let mut s = vec![0.0; n];
                for j in 0..n {
                    let mutated = (ps[j] * libm::exp(tau_prime * global + tau * normal(&mut rng))).min(sigma_max[j]);
                    let mut value = px[j];
                    for _ in 0..BOUND_RETRIES {
                        let trial = px[j] + mutated * normal(&mut rng);
                        if bounds.contains(j, trial) {
                            value = trial;
                            break;
                        }
                    }
                    x[j] = value;
                    s[j] = ps[j] + cfg.alpha * (mutated - ps[j]);
                }
                (x, s)
            });
            xs[k] = x;
            sigmas[k] = s;
        }
    }

    let (best, best_eval) = best.expect("population is never empty");
    Ok(EsOutcome { best, best_eval, evaluations, generations: generation + 1, timed_out, trace })
}
