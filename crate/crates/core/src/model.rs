//! Orthogonal factor model types.
//!
//! All fitting is moment based: a model is a loading matrix plus
//! uniquenesses, and the means and error terms of the model equation are
//! never materialized.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::index::IndexComponents;
use crate::linalg;
use crate::{Error, Result};

/// Slack for floating-point noise in loading invariants.
pub const NUMERICAL_SLACK: f64 = 1e-8;

/// Maximum orthogonality residual accepted for a rotation matrix.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// M×T factor loadings together with the variance of each manifest variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix {
    values: DMatrix<f64>,
    variances: Vec<f64>,
    variable_names: Vec<String>,
}

impl LoadingMatrix {
    pub fn new(values: DMatrix<f64>, variances: Vec<f64>, variable_names: Vec<String>) -> Result<Self> {
        let (m, t) = values.shape();
        if m < 2 {
            return Err(Error::InvalidLoadings(format!("need at least 2 variables, got {m}")));
        }
        if t < 1 || t > m {
            return Err(Error::InvalidLoadings(format!(
                "factor count {t} must be between 1 and the variable count {m}"
            )));
        }
        if variances.len() != m {
            return Err(Error::SizeMismatch { expected: m, got: variances.len() });
        }
        if variable_names.len() != m {
            return Err(Error::SizeMismatch { expected: m, got: variable_names.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLoadings("non-finite loading".to_string()));
        }
        for (i, &var) in variances.iter().enumerate() {
            if !(var > 0.0 && var.is_finite()) {
                return Err(Error::InvalidLoadings(format!("variance of variable {i} must be positive")));
            }
            let communality: f64 = values.row(i).iter().map(|l| l * l).sum();
            if communality / var > 1.0 + NUMERICAL_SLACK {
                return Err(Error::InvalidLoadings(format!(
                    "standardized communality of variable {i} is {:.6} > 1",
                    communality / var
                )));
            }
        }
        Ok(Self { values, variances, variable_names })
    }

    /// Loadings for standardized variables (unit variances, names `X1..XM`).
    pub fn standardized(values: DMatrix<f64>) -> Result<Self> {
        let m = values.nrows();
        Self::new(values, alloc::vec![1.0; m], default_names(m))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn n_variables(&self) -> usize {
        self.values.nrows()
    }

    pub fn factor_count(&self) -> usize {
        self.values.ncols()
    }

    /// `l²ᵢₖ / Var(Xᵢ)`, clamped to `[0, 1]`.
    pub fn standardized_squared_loadings(&self) -> DMatrix<f64> {
        let mut out = self.values.clone();
        self.write_standardized_squares(&self.values, &mut out);
        out
    }

    pub(crate) fn write_standardized_squares(&self, values: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        for i in 0..values.nrows() {
            let var = self.variances[i];
            for k in 0..values.ncols() {
                let l = values[(i, k)];
                out[(i, k)] = (l * l / var).clamp(0.0, 1.0);
            }
        }
    }

    /// `h²ᵢ = Σₖ l²ᵢₖ` (raw scale, not divided by the variance).
    pub fn communalities(&self) -> Vec<f64> {
        self.values
            .row_iter()
            .map(|row| row.iter().map(|l| l * l).sum())
            .collect()
    }

    /// `L* = L R` for an orthogonal `R`.
    pub fn apply_rotation(&self, r: &DMatrix<f64>) -> Result<Self> {
        let t = self.factor_count();
        if r.shape() != (t, t) {
            return Err(Error::SizeMismatch { expected: t, got: r.nrows() });
        }
        let residual = linalg::orthogonality_residual(r);
        if residual > ORTHOGONALITY_TOL {
            return Err(Error::NonOrthogonalRotation { residual });
        }
        Ok(Self {
            values: &self.values * r,
            variances: self.variances.clone(),
            variable_names: self.variable_names.clone(),
        })
    }

    /// `lᵢₖ / √Var(Xᵢ)`, clamped to `[-1, 1]`.
    pub fn variable_factor_correlations(&self) -> DMatrix<f64> {
        let mut out = self.values.clone();
        for i in 0..out.nrows() {
            let sd = libm::sqrt(self.variances[i]);
            for k in 0..out.ncols() {
                out[(i, k)] = (self.values[(i, k)] / sd).clamp(-1.0, 1.0);
            }
        }
        out
    }
}

pub fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("X{i}")).collect()
}

pub fn default_factor_labels(t: usize) -> Vec<String> {
    (1..=t).map(|k| format!("F{k}")).collect()
}

/// A fitted orthogonal factor model, possibly rotated.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    unrotated: LoadingMatrix,
    loadings: LoadingMatrix,
    uniquenesses: Vec<f64>,
    rotation: DMatrix<f64>,
    method: String,
    index: Option<IndexComponents>,
}

impl FactorModel {
    /// An unrotated model (rotation = identity, method `"none"`).
    pub fn new(loadings: LoadingMatrix, uniquenesses: Vec<f64>) -> Result<Self> {
        let m = loadings.n_variables();
        if uniquenesses.len() != m {
            return Err(Error::SizeMismatch { expected: m, got: uniquenesses.len() });
        }
        if uniquenesses.iter().any(|u| !(*u >= 0.0) || !u.is_finite()) {
            return Err(Error::InvalidLoadings("uniquenesses must be finite and nonnegative".to_string()));
        }
        let t = loadings.factor_count();
        Ok(Self {
            unrotated: loadings.clone(),
            loadings,
            uniquenesses,
            rotation: DMatrix::identity(t, t),
            method: "none".to_string(),
            index: None,
        })
    }

    /// Rotates the unrotated loadings by `r`, replacing any previous rotation.
    pub fn rotated(&self, r: &DMatrix<f64>, method: impl Into<String>) -> Result<Self> {
        let loadings = self.unrotated.apply_rotation(r)?;
        Ok(Self {
            unrotated: self.unrotated.clone(),
            loadings,
            uniquenesses: self.uniquenesses.clone(),
            rotation: r.clone(),
            method: method.into(),
            index: None,
        })
    }

    pub fn with_index(mut self, index: Option<IndexComponents>) -> Self {
        self.index = index;
        self
    }

    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }

    pub fn unrotated(&self) -> &LoadingMatrix {
        &self.unrotated
    }

    /// The (rotated) loadings this model presents.
    pub fn loadings(&self) -> &LoadingMatrix {
        &self.loadings
    }

    pub fn uniquenesses(&self) -> &[f64] {
        &self.uniquenesses
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn index(&self) -> Option<&IndexComponents> {
        self.index.as_ref()
    }

    pub fn n_variables(&self) -> usize {
        self.loadings.n_variables()
    }

    pub fn factor_count(&self) -> usize {
        self.loadings.factor_count()
    }

    pub fn variable_factor_correlations(&self) -> DMatrix<f64> {
        self.loadings.variable_factor_correlations()
    }
}

/// A validated sample correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
    n_obs: usize,
}

impl CorrelationMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-12;
    pub const PSD_TOL: f64 = -1e-8;

    pub fn new(values: DMatrix<f64>, n_obs: usize) -> Result<Self> {
        let m = values.nrows();
        if m != values.ncols() {
            return Err(Error::InvalidCorrelation(format!("not square: {:?}", values.shape())));
        }
        if m == 0 {
            return Err(Error::InvalidCorrelation("empty matrix".to_string()));
        }
        if !linalg::is_symmetric(&values, Self::SYMMETRY_TOL) {
            return Err(Error::InvalidCorrelation("not symmetric".to_string()));
        }
        for i in 0..m {
            if values[(i, i)] != 1.0 {
                return Err(Error::InvalidCorrelation(format!("diagonal entry {i} is not 1")));
            }
        }
        if values.iter().any(|r| !r.is_finite() || r.abs() > 1.0 + Self::SYMMETRY_TOL) {
            return Err(Error::InvalidCorrelation("entries must lie in [-1, 1]".to_string()));
        }
        let eig = values.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < Self::PSD_TOL {
            return Err(Error::InvalidCorrelation(format!(
                "not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { values, n_obs })
    }

    pub fn identity(m: usize, n_obs: usize) -> Self {
        Self { values: DMatrix::identity(m, m), n_obs }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_variables(&self) -> usize {
        self.values.nrows()
    }
}
