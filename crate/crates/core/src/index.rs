//! The interpretability index.
//!
//! Every variable pair `i < j` with a non-null prior contributes one point
//! `(prior, loading similarity)` to the pair multiset. The index combines
//! a monotone-agreement term (Kendall tau-b mapped to `[0, 1]`) and a
//! separation term (the OLS slope mapped through `arctan` to `(0, 1)`) as
//! their geometric mean `V = √(τ θ)`.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::model::LoadingMatrix;
use crate::priors::{validate_prior, PriorMatrix};
use crate::similarity::{loading_matrix_similarity, SimilarityMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairElement {
    pub prior: f64,
    pub loading_sim: f64,
    pub i: usize,
    pub j: usize,
}

/// Multiset of `(prior, loading similarity)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pairs: Vec<PairElement>,
}

impl PairSet {
    pub fn new(pairs: Vec<PairElement>) -> Result<Self> {
        for p in &pairs {
            if p.i >= p.j {
                return Err(Error::InvalidConfig(alloc::format!("pair ({}, {}) must satisfy i < j", p.i, p.j)));
            }
            if !p.prior.is_finite() || !p.loading_sim.is_finite() {
                return Err(Error::InvalidConfig("pair values must be finite".into()));
            }
        }
        Ok(Self { pairs })
    }

    /// Pair set from bare points; indices are synthesized as `(0, k + 1)`.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .enumerate()
                .map(|(k, &(prior, loading_sim))| PairElement { prior, loading_sim, i: 0, j: k + 1 })
                .collect(),
        )
    }

    pub fn elements(&self) -> &[PairElement] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn priors(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.prior).collect()
    }

    pub fn loading_sims(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.loading_sim).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexComponents {
    pub tau: f64,
    pub theta: f64,
    pub v: f64,
}

/// One element per pair `i < j` with a non-null prior.
pub fn build_pair_set(prior: &PriorMatrix, loading: &SimilarityMatrix) -> Result<PairSet> {
    if prior.size() != loading.size() {
        return Err(Error::SizeMismatch { expected: prior.size(), got: loading.size() });
    }
    let pairs: Vec<PairElement> = prior
        .usable_pairs()
        .map(|(i, j, c)| PairElement { prior: c, loading_sim: loading.get(i, j), i, j })
        .collect();
    if pairs.len() < 2 {
        return Err(Error::DegeneratePairSet { len: pairs.len(), needed: 2 });
    }
    PairSet::new(pairs)
}

/// Pair counts behind Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KendallCounts {
    /// `n(n − 1)/2`
    pub total: u64,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in the first coordinate (including joint ties).
    pub ties_x: u64,
    /// Pairs tied in the second coordinate (including joint ties).
    pub ties_y: u64,
}

impl KendallCounts {
    /// `(N_C − N_D) / (2 √(N − N₁) √(N − N₂)) + ½`
    pub fn mapped_tau(&self) -> Result<f64> {
        if self.total == self.ties_x || self.total == self.ties_y {
            return Err(Error::AllTied);
        }
        let numerator = self.concordant as f64 - self.discordant as f64;
        let denominator = 2.0 * libm::sqrt((self.total - self.ties_x) as f64) * libm::sqrt((self.total - self.ties_y) as f64);
        Ok((numerator / denominator + 0.5).clamp(0.0, 1.0))
    }
}

fn cmp_finite(a: f64, b: f64) -> Ordering {
    // PairSet guarantees finiteness; -0.0 and 0.0 compare equal here
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

fn tied_pairs(run: u64) -> u64 {
    run * run.saturating_sub(1) / 2
}

/// Direct O(n²) count over all element pairs.
pub fn kendall_counts_direct(xs: &[f64], ys: &[f64]) -> KendallCounts {
    let n = xs.len();
    let mut c = KendallCounts { total: tied_pairs(n as u64), ..Default::default() };
    for a in 0..n {
        for b in (a + 1)..n {
            let dx = cmp_finite(xs[a], xs[b]);
            let dy = cmp_finite(ys[a], ys[b]);
            if dx == Ordering::Equal {
                c.ties_x += 1;
            }
            if dy == Ordering::Equal {
                c.ties_y += 1;
            }
            if dx != Ordering::Equal && dy != Ordering::Equal {
                if dx == dy {
                    c.concordant += 1;
                } else {
                    c.discordant += 1;
                }
            }
        }
    }
    c
}

/// Knight's O(n log n) count: sort by `(x, y)`, then count the inversions
/// of `y` with a merge sort.
pub fn kendall_counts_merge(xs: &[f64], ys: &[f64]) -> KendallCounts {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_finite(xs[a], xs[b]).then_with(|| cmp_finite(ys[a], ys[b])));

    let mut ties_x = 0u64;
    let mut joint = 0u64;
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if cmp_finite(xs[a], xs[b]) == Ordering::Equal {
            run_x += 1;
            if cmp_finite(ys[a], ys[b]) == Ordering::Equal {
                run_xy += 1;
            } else {
                joint += tied_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            ties_x += tied_pairs(run_x);
            joint += tied_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_x += tied_pairs(run_x);
    joint += tied_pairs(run_xy);

    let mut seq: Vec<f64> = order.iter().map(|&k| ys[k]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut seq, &mut buf);

    let mut ties_y = 0u64;
    let mut run_y = 1u64;
    for w in seq.windows(2) {
        if cmp_finite(w[0], w[1]) == Ordering::Equal {
            run_y += 1;
        } else {
            ties_y += tied_pairs(run_y);
            run_y = 1;
        }
    }
    ties_y += tied_pairs(run_y);

    let total = tied_pairs(n as u64);
    let discordant = swaps;
    let concordant = total + joint - ties_x - ties_y - discordant;
    KendallCounts { total, concordant, discordant, ties_x, ties_y }
}

/// Sorts `seq` ascending and returns the number of strict inversions.
fn merge_count(seq: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = seq.split_at_mut(mid);
        let (lbuf, rbuf) = buf.split_at_mut(mid);
        merge_count(left, lbuf) + merge_count(right, rbuf)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if cmp_finite(seq[j], seq[i]) == Ordering::Less {
            buf[k] = seq[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = seq[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    swaps
}

/// Sizes at or below this use the direct count.
pub const DIRECT_KENDALL_MAX: usize = 48;

pub fn kendall_counts(xs: &[f64], ys: &[f64]) -> KendallCounts {
    if xs.len() <= DIRECT_KENDALL_MAX {
        kendall_counts_direct(xs, ys)
    } else {
        kendall_counts_merge(xs, ys)
    }
}

/// Kendall tau-b of the pair set, mapped affinely to `[0, 1]`.
pub fn kendall_tau_mapped(y: &PairSet) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::DegeneratePairSet { len: y.len(), needed: 2 });
    }
    kendall_counts(&y.priors(), &y.loading_sims()).mapped_tau()
}

fn all_equal(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Ordinary least squares slope of loading similarity on prior.
pub fn ols_slope_xy(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::DegeneratePairSet { len: n, needed: 2 });
    }
    if all_equal(xs) {
        return Err(Error::ZeroVarianceX);
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    Ok(sxy / sxx)
}

pub fn ols_slope(y: &PairSet) -> Result<f64> {
    ols_slope_xy(&y.priors(), &y.loading_sims())
}

/// `arctan(β) / π + ½`
pub fn theta_from_slope(slope: f64) -> f64 {
    libm::atan(slope) / PI + 0.5
}

pub fn theta(y: &PairSet) -> Result<f64> {
    ols_slope(y).map(theta_from_slope)
}

pub fn components_from(tau: f64, theta: f64) -> IndexComponents {
    IndexComponents { tau, theta, v: libm::sqrt(tau * theta) }
}

/// `V = √(τ θ)` with its components.
pub fn v_index(y: &PairSet) -> Result<IndexComponents> {
    index_from_points(&y.priors(), &y.loading_sims())
}

/// V-index on parallel coordinate slices.
pub fn index_from_points(xs: &[f64], ys: &[f64]) -> Result<IndexComponents> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::DegeneratePairSet { len: xs.len(), needed: 2 });
    }
    let tau = kendall_counts(xs, ys).mapped_tau()?;
    let theta = theta_from_slope(ols_slope_xy(xs, ys)?);
    Ok(components_from(tau, theta))
}

/// Index of a (rotated) loading matrix against a prior.
pub fn loading_index(lm: &LoadingMatrix, prior: &PriorMatrix) -> Result<IndexComponents> {
    validate_prior(prior, lm.n_variables())?;
    v_index(&build_pair_set(prior, &loading_matrix_similarity(lm))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowessConfig {
    /// Fraction of points in each local fit, in `(0, 1]`.
    pub frac: f64,
    /// Number of bisquare robustness passes.
    pub robust_iters: usize,
}

impl Default for LowessConfig {
    fn default() -> Self {
        Self { frac: 2.0 / 3.0, robust_iters: 3 }
    }
}

/// LOWESS trend of loading similarity against prior, one fitted point per
/// element, sorted by prior.
pub fn lowess_curve(y: &PairSet, cfg: LowessConfig) -> Result<Vec<(f64, f64)>> {
    if y.len() < 3 {
        return Err(Error::DegeneratePairSet { len: y.len(), needed: 3 });
    }
    lowess(&y.priors(), &y.loading_sims(), cfg)
}

/// Cleveland's LOWESS with local linear fits and tricube weights.
pub fn lowess(xs: &[f64], ys: &[f64], cfg: LowessConfig) -> Result<Vec<(f64, f64)>> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: ys.len() });
    }
    if !(cfg.frac > 0.0 && cfg.frac <= 1.0) {
        return Err(Error::InvalidConfig("lowess frac must lie in (0, 1]".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_finite(xs[a], xs[b]));
    let x: Vec<f64> = order.iter().map(|&k| xs[k]).collect();
    let y: Vec<f64> = order.iter().map(|&k| ys[k]).collect();

    let span = (libm::ceil(cfg.frac * n as f64) as usize).clamp(1, n);
    let mut robustness = vec![1.0; n];
    let mut fitted = vec![0.0; n];

    for pass in 0..=cfg.robust_iters {
        let mut lo = 0usize;
        for i in 0..n {
            while lo + span < n && x[i] - x[lo] > x[lo + span] - x[i] {
                lo += 1;
            }
            let hi = lo + span - 1;
            let h = (x[i] - x[lo]).max(x[hi] - x[i]);
            if let Some(v) = local_linear(&x, &y, &robustness, i, lo, hi, h) {
                fitted[i] = v;
            } else if pass == 0 {
                fitted[i] = y[i];
            }
        }
        if pass == cfg.robust_iters {
            break;
        }
        let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| (a - b).abs()).collect();
        let scale = 6.0 * median(&residuals);
        if scale <= 0.0 {
            break;
        }
        for (w, r) in robustness.iter_mut().zip(&residuals) {
            let u = r / scale;
            *w = if u < 1.0 { (1.0 - u * u) * (1.0 - u * u) } else { 0.0 };
        }
    }
    Ok(x.into_iter().zip(fitted).collect())
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let c = 1.0 - u * u * u;
        c * c * c
    }
}

#[allow(clippy::too_many_arguments)]
fn local_linear(x: &[f64], y: &[f64], robustness: &[f64], i: usize, lo: usize, hi: usize, h: f64) -> Option<f64> {
    let xi = x[i];
    let (start, end) = if h > 0.0 {
        (lo, hi)
    } else {
        // every neighbour sits on xi: use all points tied with it
        let start = x.iter().position(|&v| v == xi).unwrap_or(i);
        let end = x.iter().rposition(|&v| v == xi).unwrap_or(i);
        (start, end)
    };
    let mut weights = Vec::with_capacity(end - start + 1);
    let mut sw = 0.0;
    for k in start..=end {
        let base = if h > 0.0 { tricube((x[k] - xi).abs() / h) } else { 1.0 };
        let w = base * robustness[k];
        weights.push(w);
        sw += w;
    }
    if sw <= 0.0 {
        return None;
    }
    let (mut mx, mut my) = (0.0, 0.0);
    for (k, w) in (start..=end).zip(&weights) {
        mx += w * x[k];
        my += w * y[k];
    }
    mx /= sw;
    my /= sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (k, w) in (start..=end).zip(&weights) {
        let dx = x[k] - mx;
        sxx += w * dx * dx;
        sxy += w * dx * (y[k] - my);
    }
    let range = x[end] - x[start];
    if sxx <= 1e-12 * sw * range * range || sxx == 0.0 {
        return Some(my);
    }
    Some(my + sxy / sxx * (xi - mx))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| cmp_finite(*a, *b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
