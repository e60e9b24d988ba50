//! Orthogonal gradient projection (Jennrich 2001) for classical criteria.

use alloc::string::ToString;

use nalgebra::DMatrix;

use crate::linalg::polar_orthogonal;
use crate::model::FactorModel;
use crate::{Error, Result};

fn pow4(x: f64) -> f64 {
    let sq = x * x;
    sq * sq
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `¼ Σₖ [Σᵢ λ⁴ᵢₖ − (γ / M)(Σᵢ λ²ᵢₖ)²]`
    Orthomax { gamma: f64 },
    /// `Σ λ⁴ / (Σ λ²)²`
    Oblimax,
}

impl Criterion {
    pub fn quartimax() -> Self {
        Criterion::Orthomax { gamma: 0.0 }
    }

    pub fn varimax() -> Self {
        Criterion::Orthomax { gamma: 1.0 }
    }

    pub fn equamax(factors: usize) -> Self {
        Criterion::Orthomax { gamma: factors as f64 / 2.0 }
    }

    /// The reported criterion value on (standardized) loadings.
    pub fn value(&self, l: &DMatrix<f64>) -> f64 {
        match *self {
            Criterion::Orthomax { gamma } => {
                let m = l.nrows() as f64;
                l.column_iter()
                    .map(|c| {
                        let s4: f64 = c.iter().map(|x| pow4(*x)).sum();
                        let s2: f64 = c.iter().map(|x| x * x).sum();
                        0.25 * (s4 - gamma / m * s2 * s2)
                    })
                    .sum()
            }
            Criterion::Oblimax => {
                let s4: f64 = l.iter().map(|x| pow4(*x)).sum();
                let s2: f64 = l.iter().map(|x| x * x).sum();
                if s2 == 0.0 {
                    0.0
                } else {
                    s4 / (s2 * s2)
                }
            }
        }
    }

    /// Surrogate that is maximized; oblimax works on its logarithm.
    fn surrogate(&self, l: &DMatrix<f64>) -> f64 {
        match self {
            Criterion::Oblimax => libm::log(self.value(l)),
            _ => self.value(l),
        }
    }

    fn gradient(&self, l: &DMatrix<f64>) -> DMatrix<f64> {
        match *self {
            Criterion::Orthomax { gamma } => {
                let m = l.nrows() as f64;
                let mut g = l.map(|x| x * x * x);
                for k in 0..l.ncols() {
                    let s2: f64 = l.column(k).iter().map(|x| x * x).sum();
                    for i in 0..l.nrows() {
                        g[(i, k)] -= gamma / m * l[(i, k)] * s2;
                    }
                }
                g
            }
            Criterion::Oblimax => {
                let s4: f64 = l.iter().map(|x| pow4(*x)).sum();
                let s2: f64 = l.iter().map(|x| x * x).sum();
                l.map(|x| 4.0 * x * x * x / s4 - 4.0 * x / s2)
            }
        }
    }

    fn degenerate(&self, l: &DMatrix<f64>) -> bool {
        matches!(self, Criterion::Oblimax) && l.iter().all(|&x| x == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpaConfig {
    pub max_iter: usize,
    /// Stop once an accepted step improves the criterion by less than this.
    pub tol: f64,
}

impl Default for GpaConfig {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpaOutcome {
    pub rotation: DMatrix<f64>,
    pub initial_criterion: f64,
    pub criterion: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MIN_STEP: f64 = 1e-12;

/// Maximizes `criterion` over orthogonal `T` for loadings `a T`.
pub fn gpa_orthogonal(a: &DMatrix<f64>, criterion: Criterion, cfg: GpaConfig) -> Result<GpaOutcome> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be positive".to_string()));
    }
    let t = a.ncols();
    let initial = criterion.value(a);
    if t <= 1 || criterion.degenerate(a) {
        return Ok(GpaOutcome {
            rotation: DMatrix::identity(t, t),
            initial_criterion: initial,
            criterion: initial,
            iterations: 0,
            converged: true,
        });
    }

    let mut rot = DMatrix::<f64>::identity(t, t);
    let mut l = a.clone();
    let mut f = criterion.surrogate(&l);
    let mut g = a.transpose() * criterion.gradient(&l);
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let m = rot.transpose() * &g;
        let sym = (&m + m.transpose()) * 0.5;
        let gp = &g - &rot * sym;
        let s = gp.norm();
        if s < MIN_STEP {
            converged = true;
            break;
        }
        step *= 2.0;
        let mut accepted = None;
        while step >= MIN_STEP {
            let candidate = polar_orthogonal(&(&rot + &gp * step)).ok_or(Error::LinearSolveFailure)?;
            let lc = a * &candidate;
            let fc = criterion.surrogate(&lc);
            if fc >= f + 0.5 * s * s * step {
                accepted = Some((candidate, lc, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, lc, fc)) = accepted else {
            converged = true;
            break;
        };
        let gain = fc - f;
        rot = candidate;
        l = lc;
        f = fc;
        g = a.transpose() * criterion.gradient(&l);
        if gain < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(GpaOutcome {
        criterion: criterion.value(&l),
        rotation: rot,
        initial_criterion: initial,
        iterations,
        converged,
    })
}

/// Rotates the unrotated loadings of `fm` and labels the result `method`.
/// The criterion sees loadings scaled to unit variable variance.
pub fn gpa_rotate(
    fm: &FactorModel,
    criterion: Criterion,
    method: &str,
    cfg: GpaConfig,
) -> Result<(FactorModel, GpaOutcome)> {
    let lm = fm.unrotated();
    let mut a = lm.values().clone();
    for (i, var) in lm.variances().iter().enumerate() {
        a.row_mut(i).scale_mut(1.0 / libm::sqrt(*var));
    }
    let outcome = gpa_orthogonal(&a, criterion, cfg)?;
    let model = fm.rotated(&outcome.rotation, method)?;
    Ok((model, outcome))
}

pub fn orthomax_rotate(fm: &FactorModel, gamma: f64, cfg: GpaConfig) -> Result<(FactorModel, GpaOutcome)> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidConfig("orthomax gamma must be finite and nonnegative".to_string()));
    }
    let method = if gamma == 0.0 {
        "quartimax"
    } else if gamma == 1.0 {
        "varimax"
    } else {
        "orthomax"
    };
    gpa_rotate(fm, Criterion::Orthomax { gamma }, method, cfg)
}

/// Oblimax maximized over orthogonal rotations.
pub fn oblimax_rotate(fm: &FactorModel, cfg: GpaConfig) -> Result<(FactorModel, GpaOutcome)> {
    gpa_rotate(fm, Criterion::Oblimax, "oblimax", cfg)
}
