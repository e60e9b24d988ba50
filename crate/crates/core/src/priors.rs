//! Prior (soft constraint) matrices.
//!
//! A prior matrix holds a-priori pairwise similarities between manifest
//! variables. `None` entries carry no information and are skipped when the
//! pair multiset is built. Diagonal entries are stored but never read.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::similarity::{SimilarityKind, SimilarityMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PriorMatrix {
    size: usize,
    entries: Vec<Option<f64>>,
    labels: Option<Vec<String>>,
}

impl PriorMatrix {
    /// Builds a prior from row-major rows. Shape and symmetry are checked by
    /// [`validate_prior`], not here, so malformed inputs can be reported.
    pub fn from_rows(rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::SizeMismatch { expected: size, got: row.len() });
            }
            entries.extend(row);
        }
        Ok(Self { size, entries, labels: None })
    }

    /// A fully specified prior from dense values.
    pub fn from_dense(size: usize, values: &[f64]) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::SizeMismatch { expected: size * size, got: values.len() });
        }
        Ok(Self { size, entries: values.iter().copied().map(Some).collect(), labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.size {
            return Err(Error::SizeMismatch { expected: self.size, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.size + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<f64>]> {
        self.entries.chunks(self.size.max(1))
    }

    /// Off-diagonal pairs `i < j` with a non-null value.
    pub fn usable_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.size).flat_map(move |i| ((i + 1)..self.size).filter_map(move |j| self.get(i, j).map(|c| (i, j, c))))
    }

    pub fn usable_pair_count(&self) -> usize {
        self.usable_pairs().count()
    }

    /// Min-max rescale of the non-null off-diagonal values onto `[0, 1]`.
    ///
    /// The slope component of the index is scale sensitive; this is the one
    /// knob for putting priors on the loading-similarity scale. Constant
    /// priors are returned unchanged.
    pub fn rescaled_min_max(&self) -> Self {
        let (lo, hi) = self
            .usable_pairs()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, c)| (lo.min(c), hi.max(c)));
        if !(hi > lo) {
            return self.clone();
        }
        let entries = self
            .entries
            .iter()
            .map(|e| e.map(|c| (c - lo) / (hi - lo)))
            .collect();
        Self { size: self.size, entries, labels: self.labels.clone() }
    }
}

/// Checks shape, symmetry (values and nullness) and that at least one
/// off-diagonal pair carries information.
pub fn validate_prior(prior: &PriorMatrix, expected_size: usize) -> Result<()> {
    if prior.size != expected_size {
        return Err(Error::SizeMismatch { expected: expected_size, got: prior.size });
    }
    let n = prior.size;
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (prior.get(i, j), prior.get(j, i));
            let symmetric = match (a, b) {
                (Some(x), Some(y)) => x == y && x.is_finite(),
                (None, None) => true,
                _ => false,
            };
            if !symmetric {
                return Err(Error::AsymmetricPrior { i, j });
            }
        }
    }
    if prior.usable_pair_count() == 0 {
        return Err(Error::EmptyPrior);
    }
    Ok(())
}

/// Group-structured partial prior.
///
/// `groups` holds disjoint sets of **1-based** variable indices. Pairs in the
/// same group get 1, pairs in different groups get 0 and any pair touching
/// an ungrouped variable is null. The diagonal is 1 for grouped variables.
pub fn generate_grouper_prior(size: usize, groups: &[Vec<usize>]) -> Result<PriorMatrix> {
    let mut membership: Vec<Option<usize>> = vec![None; size];
    for (g, group) in groups.iter().enumerate() {
        for &index in group {
            if index == 0 || index > size {
                return Err(Error::IndexOutOfRange { index, len: size });
            }
            let slot = &mut membership[index - 1];
            if slot.is_some() {
                return Err(Error::OverlappingGroups { index });
            }
            *slot = Some(g);
        }
    }
    let mut entries = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            entries.push(match (membership[i], membership[j]) {
                (Some(a), Some(b)) => Some(if a == b { 1.0 } else { 0.0 }),
                _ => None,
            });
        }
    }
    Ok(PriorMatrix { size, entries, labels: None })
}

/// Uses a semantic similarity matrix directly as a full prior.
pub fn prior_from_semantic(q: &SimilarityMatrix) -> Result<PriorMatrix> {
    if q.kind() != SimilarityKind::Semantic {
        return Err(Error::InvalidConfig("prior_from_semantic needs a semantic similarity matrix".into()));
    }
    let m = q.size();
    let prior = PriorMatrix { size: m, entries: q.values().transpose().iter().copied().map(Some).collect(), labels: None };
    validate_prior(&prior, m)?;
    Ok(prior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{semantic_matrix, EmbeddingSet};
    use alloc::string::ToString;

    const D: Option<f64> = None;

    fn s(v: f64) -> Option<f64> {
        Some(v)
    }

    fn partial_six() -> PriorMatrix {
        PriorMatrix::from_rows(vec![
            vec![s(1.0), D, s(1.0), s(0.0), D, s(0.0)],
            vec![D, D, D, D, D, D],
            vec![s(1.0), D, s(1.0), s(0.0), D, s(0.0)],
            vec![s(0.0), D, s(0.0), s(1.0), D, s(1.0)],
            vec![D, D, D, D, D, D],
            vec![s(0.0), D, s(0.0), s(1.0), D, s(1.0)],
        ])
        .unwrap()
    }

    #[test]
    fn block_example_is_valid() {
        #[rustfmt::skip]
        let c = PriorMatrix::from_dense(5, &[
            1.0, 1.0, 0.0, 0.0, 0.0,
            1.0, 1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 1.0, 1.0,
            0.0, 0.0, 1.0, 1.0, 1.0,
            0.0, 0.0, 1.0, 1.0, 1.0,
        ]).unwrap();
        assert_eq!(validate_prior(&c, 5), Ok(()));
        assert_eq!(c.usable_pair_count(), 10);
    }

    #[test]
    fn partial_example_is_valid() {
        let c = partial_six();
        assert_eq!(validate_prior(&c, 6), Ok(()));
        assert_eq!(c.usable_pair_count(), 6);
    }

    #[test]
    fn asymmetry_and_size_errors() {
        let mut rows = vec![vec![s(1.0); 3]; 3];
        rows[1][2] = s(0.5);
        rows[2][1] = s(0.4);
        let c = PriorMatrix::from_rows(rows.clone()).unwrap();
        assert_eq!(validate_prior(&c, 3), Err(Error::AsymmetricPrior { i: 1, j: 2 }));
        rows[2][1] = D;
        let c = PriorMatrix::from_rows(rows).unwrap();
        assert_eq!(validate_prior(&c, 3), Err(Error::AsymmetricPrior { i: 1, j: 2 }));
        assert_eq!(validate_prior(&partial_six(), 5), Err(Error::SizeMismatch { expected: 5, got: 6 }));
    }

    #[test]
    fn grouper_matches_partial_example() {
        let g = generate_grouper_prior(6, &[vec![1, 3], vec![4, 6]]).unwrap();
        assert_eq!(g, partial_six());
    }

    #[test]
    fn grouper_ecr_groups() {
        let groups = vec![
            vec![1, 7, 9, 11, 13, 17, 23],
            vec![6, 10, 12],
            vec![14, 16, 26, 36],
            vec![20, 28, 32, 34],
        ];
        let c = generate_grouper_prior(36, &groups).unwrap();
        assert_eq!(c.get(0, 6), s(1.0));
        assert_eq!(c.get(0, 5), s(0.0));
        assert_eq!(c.get(0, 1), D);
        assert_eq!(c.get(1, 1), D);
        assert_eq!(c.get(0, 0), s(1.0));
        assert_eq!(validate_prior(&c, 36), Ok(()));
        // 18 grouped variables → C(18, 2) usable pairs
        assert_eq!(c.usable_pair_count(), 153);
    }

    #[test]
    fn grouper_errors() {
        let empty = generate_grouper_prior(3, &[]).unwrap();
        assert_eq!(validate_prior(&empty, 3), Err(Error::EmptyPrior));
        assert_eq!(
            generate_grouper_prior(4, &[vec![1, 2], vec![2, 3]]),
            Err(Error::OverlappingGroups { index: 2 })
        );
        assert_eq!(generate_grouper_prior(4, &[vec![1, 5]]), Err(Error::IndexOutOfRange { index: 5, len: 4 }));
        assert_eq!(generate_grouper_prior(4, &[vec![0, 1]]), Err(Error::IndexOutOfRange { index: 0, len: 4 }));
    }

    #[test]
    fn semantic_prior() {
        let same = EmbeddingSet::new(vec!["a".to_string(); 3], vec![vec![1.0, 2.0]; 3]).unwrap();
        let prior = prior_from_semantic(&semantic_matrix(&same).unwrap()).unwrap();
        assert!(prior.rows().flatten().all(|e| *e == Some(1.0)));

        let single = EmbeddingSet::new(vec!["a".to_string()], vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(prior_from_semantic(&semantic_matrix(&single).unwrap()), Err(Error::EmptyPrior));

        let es = EmbeddingSet::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 0.2], vec![0.3, 1.0], vec![-0.5, 0.4]],
        )
        .unwrap();
        let q = semantic_matrix(&es).unwrap();
        let prior = prior_from_semantic(&q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(prior.get(i, j), Some(q.get(i, j)));
            }
        }
    }

    #[test]
    fn rescale_maps_pairs_to_unit_interval() {
        let c = PriorMatrix::from_dense(3, &[9.0, 2.0, 4.0, 2.0, 9.0, 3.0, 4.0, 3.0, 9.0]).unwrap();
        let r = c.rescaled_min_max();
        assert_eq!(r.get(0, 1), s(0.0));
        assert_eq!(r.get(0, 2), s(1.0));
        assert_eq!(r.get(1, 2), s(0.5));
    }
}
