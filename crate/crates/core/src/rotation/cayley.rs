//! Cayley parametrization of orthogonal matrices.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// `R = (I − S)(I + S)⁻¹ D`.
///
/// `skew` holds the strict upper triangle of `S` row by row
/// (`s₁₂, s₁₃, …, s₂₃, …`); `signature` is the diagonal of `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationParams {
    pub skew: Vec<f64>,
    pub signature: Vec<f64>,
}

pub fn skew_len(t: usize) -> usize {
    t * t.saturating_sub(1) / 2
}

impl RotationParams {
    pub fn identity(t: usize) -> Self {
        Self { skew: vec![0.0; skew_len(t)], signature: vec![1.0; t] }
    }

    pub fn factor_count(&self) -> usize {
        self.signature.len()
    }

    pub fn skew_matrix(&self) -> Result<DMatrix<f64>> {
        let t = self.factor_count();
        if self.skew.len() != skew_len(t) {
            return Err(Error::SizeMismatch { expected: skew_len(t), got: self.skew.len() });
        }
        let mut s = DMatrix::zeros(t, t);
        let mut k = 0;
        for i in 0..t {
            for j in (i + 1)..t {
                s[(i, j)] = self.skew[k];
                s[(j, i)] = -self.skew[k];
                k += 1;
            }
        }
        Ok(s)
    }
}

/// Orthogonal matrix for `params`. The signature need not be ±1; an
/// arbitrary diagonal gives `C(S) D`, which is orthogonal only when `D` is.
pub fn cayley_rotation(params: &RotationParams) -> Result<DMatrix<f64>> {
    let s = params.skew_matrix()?;
    let t = s.nrows();
    let id = DMatrix::<f64>::identity(t, t);
    // (I − S) and (I + S)⁻¹ commute, so solve (I + S) C = I − S.
    let c = (&id + &s).lu().solve(&(&id - &s)).ok_or(Error::LinearSolveFailure)?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolveFailure);
    }
    let mut r = c;
    for (k, &d) in params.signature.iter().enumerate() {
        r.column_mut(k).scale_mut(d);
    }
    Ok(r)
}
