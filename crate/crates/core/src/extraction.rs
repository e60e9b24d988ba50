//! Correlation matrices from raw data, sampling adequacy statistics and
//! iterated principal-axis factoring.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg;
use crate::model::{default_names, CorrelationMatrix, FactorModel, LoadingMatrix};
use crate::special::chi_square_sf;
use crate::{Error, Result};

/// Raw N×M observations, row-major. `NaN` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    names: Vec<String>,
    values: Vec<f64>,
    n_rows: usize,
}

impl DataTable {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let m = names.len();
        if m == 0 {
            return Err(Error::InvalidConfig("data table has no columns".into()));
        }
        if !values.len().is_multiple_of(m) {
            return Err(Error::SizeMismatch { expected: m * (values.len() / m + 1), got: values.len() });
        }
        Ok(Self { n_rows: values.len() / m, names, values })
    }

    /// Builds a table from rows, naming columns `X1..XM`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::SizeMismatch { expected: m, got: row.len() });
            }
            values.extend_from_slice(row);
        }
        Self::new(default_names(m), values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.names.len() + col]
    }
}

/// Pearson correlation matrix of the columns of `data`.
pub fn correlation_from_data(data: &DataTable) -> Result<CorrelationMatrix> {
    let (n, m) = (data.n_rows(), data.n_cols());
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    for row in 0..n {
        for col in 0..m {
            if !data.get(row, col).is_finite() {
                return Err(Error::MissingData { row, col });
            }
        }
    }

    let means: Vec<f64> = (0..m)
        .map(|c| (0..n).map(|r| data.get(r, c)).sum::<f64>() / n as f64)
        .collect();
    let mut cross = DMatrix::<f64>::zeros(m, m);
    for r in 0..n {
        for a in 0..m {
            let da = data.get(r, a) - means[a];
            for b in a..m {
                cross[(a, b)] += da * (data.get(r, b) - means[b]);
            }
        }
    }
    let sds: Vec<f64> = (0..m).map(|c| libm::sqrt(cross[(c, c)])).collect();
    for (c, sd) in sds.iter().enumerate() {
        if *sd == 0.0 {
            return Err(Error::ZeroVarianceColumn(data.names()[c].clone()));
        }
    }

    let mut corr = DMatrix::<f64>::identity(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let r = (cross[(a, b)] / (sds[a] * sds[b])).clamp(-1.0, 1.0);
            corr[(a, b)] = r;
            corr[(b, a)] = r;
        }
    }
    CorrelationMatrix::new(corr, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BartlettResult {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Smallest determinant treated as nonsingular.
pub const MIN_DETERMINANT: f64 = 1e-300;

fn log_determinant(corr: &CorrelationMatrix) -> Result<f64> {
    let chol = corr
        .values()
        .clone()
        .cholesky()
        .ok_or(Error::SingularCorrelation)?;
    let l = chol.l_dirty();
    let log_det: f64 = (0..l.nrows()).map(|i| 2.0 * libm::log(l[(i, i)])).sum();
    if !log_det.is_finite() || log_det <= libm::log(MIN_DETERMINANT) {
        return Err(Error::SingularCorrelation);
    }
    Ok(log_det)
}

/// Bartlett's test that the population correlation matrix is the identity.
///
/// `χ² = −(n − 1 − (2M + 5)/6) · ln|R|` with `M(M−1)/2` degrees of freedom.
pub fn bartlett_sphericity(corr: &CorrelationMatrix) -> Result<BartlettResult> {
    let m = corr.n_variables();
    let n = corr.n_obs();
    if n <= m {
        return Err(Error::TooFewObservations { needed: m + 1, got: n });
    }
    let log_det = log_determinant(corr)?;
    let scale = n as f64 - 1.0 - (2.0 * m as f64 + 5.0) / 6.0;
    let chi2 = (-scale * log_det).max(0.0);
    let df = m * (m - 1) / 2;
    let p_value = if df == 0 { 1.0 } else { chi_square_sf(chi2, df as f64) };
    Ok(BartlettResult { chi2, df, p_value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmoResult {
    pub overall: f64,
    pub per_variable: Vec<f64>,
}

/// Kaiser–Meyer–Olkin measure of sampling adequacy.
///
/// Partial correlations come from the anti-image of `R⁻¹`. A variable with
/// no off-diagonal correlation at all gets a per-variable value of 0.
pub fn kmo_msa(corr: &CorrelationMatrix) -> Result<KmoResult> {
    let m = corr.n_variables();
    let r = corr.values();
    let inv = r
        .clone()
        .cholesky()
        .ok_or(Error::SingularCorrelation)?
        .inverse();

    let mut row_r2 = vec![0.0; m];
    let mut row_q2 = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let q = -inv[(i, j)] / libm::sqrt(inv[(i, i)] * inv[(j, j)]);
            row_r2[i] += r[(i, j)] * r[(i, j)];
            row_q2[i] += q * q;
        }
    }
    let sum_r2: f64 = row_r2.iter().sum();
    let sum_q2: f64 = row_q2.iter().sum();
    if sum_r2 + sum_q2 == 0.0 {
        return Err(Error::DegenerateKmo);
    }
    let per_variable = row_r2
        .iter()
        .zip(&row_q2)
        .map(|(r2, q2)| if r2 + q2 > 0.0 { r2 / (r2 + q2) } else { 0.0 })
        .collect();
    Ok(KmoResult { overall: sum_r2 / (sum_r2 + sum_q2), per_variable })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdequacyReport {
    pub bartlett_chi2: f64,
    pub bartlett_df: usize,
    pub bartlett_p: f64,
    pub kmo_overall: f64,
    pub kmo_per_variable: Vec<f64>,
}

impl AdequacyReport {
    pub fn compute(corr: &CorrelationMatrix) -> Result<Self> {
        let bartlett = bartlett_sphericity(corr)?;
        let kmo = kmo_msa(corr)?;
        Ok(Self {
            bartlett_chi2: bartlett.chi2,
            bartlett_df: bartlett.df,
            bartlett_p: bartlett.p_value,
            kmo_overall: kmo.overall,
            kmo_per_variable: kmo.per_variable,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PafConfig {
    pub max_iter: usize,
    /// Convergence threshold on the largest communality change.
    pub tol: f64,
}

impl Default for PafConfig {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PafOutcome {
    pub model: FactorModel,
    pub iterations: usize,
    /// `false` means `max_iter` was hit; the model holds the last iterate.
    pub converged: bool,
    /// Some retained factor carries no variance (e.g. identity correlation).
    pub degenerate: bool,
    /// Retained (clipped) eigenvalues of the final reduced matrix.
    pub eigenvalues: Vec<f64>,
    /// `max |LLᵀ + Ψ − R|` after each iteration.
    pub residuals: Vec<f64>,
}

fn initial_communalities(r: &DMatrix<f64>) -> Vec<f64> {
    let m = r.nrows();
    if let Some(chol) = r.clone().cholesky() {
        let inv = chol.inverse();
        (0..m).map(|i| (1.0 - 1.0 / inv[(i, i)]).clamp(0.0, 1.0)).collect()
    } else {
        // squared multiple correlations need R⁻¹; fall back to the largest |r|
        (0..m)
            .map(|i| {
                (0..m)
                    .filter(|&j| j != i)
                    .map(|j| r[(i, j)].abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Iterated principal-axis factoring of `corr` with `factors` factors.
pub fn principal_axis_factor(corr: &CorrelationMatrix, factors: usize, cfg: PafConfig) -> Result<PafOutcome> {
    let m = corr.n_variables();
    if factors == 0 {
        return Err(Error::InvalidConfig("factor count must be at least 1".into()));
    }
    if factors >= m {
        return Err(Error::TooManyFactors { factors, variables: m });
    }
    let r = corr.values();
    let mut communalities = initial_communalities(r);
    let mut loadings = DMatrix::<f64>::zeros(m, factors);
    let mut eigenvalues = vec![0.0; factors];
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let mut reduced = r.clone();
        for i in 0..m {
            reduced[(i, i)] = communalities[i];
        }
        let (values, vectors) = linalg::symmetric_eigen_desc(&reduced);
        for k in 0..factors {
            let lambda = values[k].max(0.0);
            eigenvalues[k] = lambda;
            let scale = libm::sqrt(lambda);
            for i in 0..m {
                loadings[(i, k)] = vectors[(i, k)] * scale;
            }
        }

        let updated: Vec<f64> = loadings
            .row_iter()
            .map(|row| row.iter().map(|l| l * l).sum::<f64>())
            .collect();
        let change = updated
            .iter()
            .zip(&communalities)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        communalities = updated.iter().map(|h| h.min(1.0)).collect();
        residuals.push(reconstruction_residual(r, &loadings));

        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let uniquenesses = loadings
        .row_iter()
        .map(|row| (1.0 - row.iter().map(|l| l * l).sum::<f64>()).max(0.0))
        .collect();
    let names = default_names(m);
    let lm = LoadingMatrix::new(loadings, vec![1.0; m], names).map_err(|e| match e {
        Error::InvalidLoadings(msg) => Error::InvalidLoadings(format!("Heywood case in extraction: {msg}")),
        other => other,
    })?;
    let degenerate = eigenvalues.iter().any(|&l| l <= 1e-12);
    Ok(PafOutcome {
        model: FactorModel::new(lm, uniquenesses)?,
        iterations,
        converged,
        degenerate,
        eigenvalues,
        residuals,
    })
}

/// `max |LLᵀ + diag(Ψ) − R|` with `Ψ = 1 − h²` (so the diagonal matches).
pub fn reconstruction_residual(r: &DMatrix<f64>, loadings: &DMatrix<f64>) -> f64 {
    let implied = loadings * loadings.transpose();
    let m = r.nrows();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                worst = worst.max((implied[(i, j)] - r[(i, j)]).abs());
            }
        }
    }
    worst
}

/// Renames the variables of a PAF outcome, e.g. after reading a CSV header.
pub fn with_variable_names(outcome: PafOutcome, names: Vec<String>) -> Result<PafOutcome> {
    let lm = outcome.model.unrotated();
    let renamed = LoadingMatrix::new(lm.values().clone(), lm.variances().to_vec(), names)?;
    let model = FactorModel::new(renamed, outcome.model.uniquenesses().to_vec())?;
    Ok(PafOutcome { model, ..outcome })
}
