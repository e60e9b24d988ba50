//! Rotation that maximizes the interpretability index against a prior.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cayley::{cayley_rotation, skew_len, RotationParams};
use crate::es::{stochastic_ranking_es, Bounds, EsConfig, GenerationStats, Hooks, Problem};
use crate::index::{index_from_points, loading_index, IndexComponents};
use crate::model::{FactorModel, LoadingMatrix};
use crate::priors::{validate_prior, PriorMatrix};
use crate::similarity::loading_similarity_from_squares;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Skew parameters only, `D = I`. V is invariant to column sign flips,
    /// so this loses nothing.
    #[default]
    Reduced,
    /// Signature entries are searched on `[-1, 1]` under `d² − 1 = 0` and
    /// snapped to their sign at the end.
    Faithful,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub es: EsConfig,
    pub mode: SearchMode,
    /// Box half-width for the skew parameters.
    pub skew_bound: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { es: EsConfig::default(), mode: SearchMode::Reduced, skew_bound: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorimaxOutcome {
    pub params: RotationParams,
    pub components: IndexComponents,
    pub evaluations: usize,
    pub generations: usize,
    pub timed_out: bool,
    pub trace: Vec<GenerationStats>,
}

const FAITHFUL_INIT_STREAM: u64 = u64::MAX;

struct IndexObjective<'a> {
    loadings: &'a LoadingMatrix,
    pairs: Vec<(usize, usize)>,
    priors: Vec<f64>,
    mode: SearchMode,
}

impl IndexObjective<'_> {
    fn params(&self, x: &[f64]) -> RotationParams {
        let t = self.loadings.factor_count();
        let k = skew_len(t);
        let signature = match self.mode {
            SearchMode::Reduced => vec![1.0; t],
            SearchMode::Faithful => x[k..].to_vec(),
        };
        RotationParams { skew: x[..k].to_vec(), signature }
    }

    fn v_at(&self, r: &DMatrix<f64>) -> Result<IndexComponents> {
        let rotated = self.loadings.values() * r;
        let mut squares = rotated.clone();
        self.loadings.write_standardized_squares(&rotated, &mut squares);
        let ys: Vec<f64> = self
            .pairs
            .iter()
            .map(|&(i, j)| loading_similarity_from_squares(&squares, i, j))
            .collect();
        index_from_points(&self.priors, &ys)
    }
}

impl Problem for IndexObjective<'_> {
    fn dimension(&self) -> usize {
        let t = self.loadings.factor_count();
        match self.mode {
            SearchMode::Reduced => skew_len(t),
            SearchMode::Faithful => skew_len(t) + t,
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        cayley_rotation(&self.params(x))
            .and_then(|r| self.v_at(&r))
            .map_or(f64::NEG_INFINITY, |c| c.v)
    }

    fn equality_residuals(&self, x: &[f64]) -> Vec<f64> {
        match self.mode {
            SearchMode::Reduced => Vec::new(),
            SearchMode::Faithful => x[skew_len(self.loadings.factor_count())..]
                .iter()
                .map(|d| d * d - 1.0)
                .collect(),
        }
    }
}

/// Searches Cayley-parametrized orthogonal rotations of `fm`'s unrotated
/// loadings for the highest V against `prior`.
///
/// The identity is part of the first generation, so the result never has a
/// lower V than the unrotated loadings.
pub fn priorimax_rotate(
    fm: &FactorModel,
    prior: &PriorMatrix,
    cfg: &OptimizerConfig,
    hooks: &mut Hooks<'_>,
) -> Result<(FactorModel, PriorimaxOutcome)> {
    let lm = fm.unrotated();
    let t = lm.factor_count();
    validate_prior(prior, lm.n_variables())?;
    if !(cfg.skew_bound > 0.0) || !cfg.skew_bound.is_finite() {
        return Err(Error::InvalidConfig("skew_bound must be positive and finite".into()));
    }
    let baseline = loading_index(lm, prior)?;

    if t == 1 {
        let model = fm.rotated(&DMatrix::identity(1, 1), "priorimax")?.with_index(Some(baseline));
        let outcome = PriorimaxOutcome {
            params: RotationParams::identity(1),
            components: baseline,
            evaluations: 1,
            generations: 0,
            timed_out: false,
            trace: Vec::new(),
        };
        return Ok((model, outcome));
    }

    let (pairs, priors): (Vec<_>, Vec<_>) = prior.usable_pairs().map(|(i, j, c)| ((i, j), c)).unzip();
    let problem = IndexObjective { loadings: lm, pairs, priors, mode: cfg.mode };
    let k = skew_len(t);
    let dim = problem.dimension();
    let mut lower = vec![-cfg.skew_bound; k];
    let mut upper = vec![cfg.skew_bound; k];
    let mut start = vec![0.0; k];
    if cfg.mode == SearchMode::Faithful {
        lower.resize(dim, -1.0);
        upper.resize(dim, 1.0);
        start.resize(dim, 1.0);
    }
    let bounds = Bounds::new(lower, upper)?;
    let mut initial = vec![start];
    if cfg.mode == SearchMode::Faithful {
        // uniform draws are almost never feasible; start from random signatures
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.es.seed);
        rng.set_stream(FAITHFUL_INIT_STREAM);
        for _ in 1..cfg.es.population_for(dim) {
            let mut x: Vec<f64> = (0..k).map(|_| rng.random_range(-cfg.skew_bound..=cfg.skew_bound)).collect();
            x.extend((0..t).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
            initial.push(x);
        }
    }
    let es = stochastic_ranking_es(&problem, &bounds, &cfg.es, &initial, hooks)?;

    let mut params = problem.params(&es.best);
    for d in params.signature.iter_mut() {
        *d = if *d < 0.0 { -1.0 } else { 1.0 };
    }
    let mut r = cayley_rotation(&params)?;
    let mut components = problem.v_at(&r)?;
    if components.v < baseline.v {
        params = RotationParams::identity(t);
        r = DMatrix::identity(t, t);
        components = baseline;
    }
    let model = fm.rotated(&r, "priorimax")?.with_index(Some(components));
    let outcome = PriorimaxOutcome {
        params,
        components,
        evaluations: es.evaluations,
        generations: es.generations,
        timed_out: es.timed_out,
        trace: es.trace,
    };
    Ok((model, outcome))
}
