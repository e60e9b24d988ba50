//! Synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use priorimax::core::extraction::DataTable;
use priorimax::core::linalg::polar_orthogonal;
use priorimax::core::similarity::EmbeddingSet;
use priorimax::core::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Block loadings: variables in `blocks[k]` load `main` on factor k, every
/// other cell gets a small nonzero cross-loading so no similarities tie.
pub fn block_loadings(blocks: &[usize], main: (f64, f64), cross: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m: usize = blocks.iter().sum();
    let t = blocks.len();
    let mut l = DMatrix::zeros(m, t);
    let mut row = 0;
    for (k, &size) in blocks.iter().enumerate() {
        for _ in 0..size {
            for j in 0..t {
                l[(row, j)] = if j == k { rng.random_range(main.0..main.1) } else { rng.random_range(-cross..cross) };
            }
            row += 1;
        }
    }
    l
}

/// 1-based groups matching `blocks`.
pub fn block_groups(blocks: &[usize]) -> Vec<Vec<usize>> {
    let mut start = 1;
    blocks
        .iter()
        .map(|&size| {
            let g = (start..start + size).collect();
            start += size;
            g
        })
        .collect()
}

/// Observations from the orthogonal model `X = F Lᵀ + E`.
pub fn simulate(l: &DMatrix<f64>, n: usize, rng: &mut ChaCha8Rng) -> DataTable {
    let (m, t) = l.shape();
    let uniq: Vec<f64> = (0..m).map(|i| (1.0 - l.row(i).norm_squared()).max(0.0).sqrt()).collect();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let f: Vec<f64> = (0..t).map(|_| normal(rng)).collect();
        rows.push(
            (0..m)
                .map(|i| (0..t).map(|k| l[(i, k)] * f[k]).sum::<f64>() + uniq[i] * normal(rng))
                .collect(),
        );
    }
    DataTable::from_rows(&rows).unwrap()
}

pub fn random_orthogonal(t: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(t, t, |_, _| normal(rng));
    polar_orthogonal(&g).unwrap()
}

/// Orthogonal `R` minimizing `‖a R − target‖`.
pub fn procrustes(a: &DMatrix<f64>, target: &DMatrix<f64>) -> DMatrix<f64> {
    polar_orthogonal(&(a.transpose() * target)).unwrap()
}

/// Embeddings whose angles follow the block structure: a topic vector per
/// group plus per-question noise.
pub fn topic_embeddings(blocks: &[usize], dim: usize, noise: f64, rng: &mut ChaCha8Rng) -> EmbeddingSet {
    let topics: Vec<Vec<f64>> = blocks.iter().map(|_| (0..dim).map(|_| normal(rng)).collect()).collect();
    let mut questions = Vec::new();
    let mut vectors = Vec::new();
    for (k, &size) in blocks.iter().enumerate() {
        for q in 0..size {
            questions.push(format!("topic {k} statement {q}"));
            vectors.push(topics[k].iter().map(|x| x + noise * normal(rng)).collect());
        }
    }
    EmbeddingSet::new(questions, vectors).unwrap()
}

/// Writes `data` as a headed CSV with round-trip float formatting.
pub fn write_data_csv(path: &std::path::Path, data: &DataTable) {
    let mut s = data.names().join(",");
    s.push('\n');
    for i in 0..data.n_rows() {
        let row: Vec<String> = (0..data.n_cols()).map(|j| data.get(i, j).to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}
