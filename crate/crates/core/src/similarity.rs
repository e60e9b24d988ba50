//! Semantic similarity between embeddings and loading similarity between
//! manifest variables.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::model::LoadingMatrix;
use crate::{Error, Result};

/// One embedding vector per question.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    questions: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(questions: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if questions.len() != vectors.len() {
            return Err(Error::SizeMismatch { expected: questions.len(), got: vectors.len() });
        }
        let dim = vectors.first().map_or(0, Vec::len);
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::SizeMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) || norm(v) == 0.0 {
                return Err(Error::ZeroNormEmbedding(i));
            }
        }
        Ok(Self { questions, vectors })
    }

    pub fn questions(&self) -> &[String] {
        &self.questions
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Semantic,
    Loading,
}

/// Symmetric M×M similarity matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: DMatrix<f64>,
    kind: SimilarityKind,
}

impl SimilarityMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// `1 − arccos(cos∠(u, v)) / π`, in `[0, 1]`.
pub fn semantic_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::SizeMismatch { expected: u.len(), got: v.len() });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 {
        return Err(Error::ZeroNormEmbedding(0));
    }
    if nv == 0.0 {
        return Err(Error::ZeroNormEmbedding(1));
    }
    // angle = 2 atan2(|û − v̂|, |û + v̂|), exact for parallel vectors
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    let angle = 2.0 * libm::atan2(libm::sqrt(diff), libm::sqrt(sum));
    Ok((1.0 - angle / PI).clamp(0.0, 1.0))
}

/// `1 − √(½ Σₖ (l̃²ᵢₖ − l̃²ⱼₖ)²)` on a precomputed matrix of squared
/// standardized loadings.
pub fn loading_similarity_from_squares(squares: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    if i == j {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 0..squares.ncols() {
        let d = squares[(i, k)] - squares[(j, k)];
        acc += d * d;
    }
    (1.0 - libm::sqrt(0.5 * acc)).clamp(0.0, 1.0)
}

/// Loading similarity of variables `i` and `j` (0-based).
pub fn loading_similarity(lm: &LoadingMatrix, i: usize, j: usize) -> Result<f64> {
    let m = lm.n_variables();
    for index in [i, j] {
        if index >= m {
            return Err(Error::IndexOutOfRange { index, len: m });
        }
    }
    Ok(loading_similarity_from_squares(&lm.standardized_squared_loadings(), i, j))
}

/// The questions' semantic similarity matrix.
pub fn semantic_matrix(es: &EmbeddingSet) -> Result<SimilarityMatrix> {
    let m = es.len();
    let mut values = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let s = semantic_similarity(&es.vectors[i], &es.vectors[j]).map_err(|e| match e {
                Error::ZeroNormEmbedding(0) => Error::ZeroNormEmbedding(i),
                Error::ZeroNormEmbedding(_) => Error::ZeroNormEmbedding(j),
                other => other,
            })?;
            values[(i, j)] = s;
            values[(j, i)] = s;
        }
    }
    Ok(SimilarityMatrix { values, kind: SimilarityKind::Semantic })
}

/// The loading similarity matrix of a (possibly rotated) loading matrix.
pub fn loading_matrix_similarity(lm: &LoadingMatrix) -> SimilarityMatrix {
    let squares = lm.standardized_squared_loadings();
    let m = lm.n_variables();
    let mut values = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let s = loading_similarity_from_squares(&squares, i, j);
            values[(i, j)] = s;
            values[(j, i)] = s;
        }
    }
    SimilarityMatrix { values, kind: SimilarityKind::Loading }
}
