//! Orthogonal rotations: Cayley parametrization, the classical criteria via
//! gradient projection, and priorimax.

pub mod cayley;
pub mod gpa;
pub mod priorimax;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

pub use cayley::{cayley_rotation, RotationParams};
pub use gpa::{gpa_rotate, oblimax_rotate, orthomax_rotate, Criterion, GpaConfig, GpaOutcome};
pub use priorimax::{priorimax_rotate, OptimizerConfig, PriorimaxOutcome, SearchMode};

use crate::index::{loading_index, IndexComponents};
use crate::model::FactorModel;
use crate::priors::PriorMatrix;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RotationMethod {
    None,
    Varimax,
    Quartimax,
    Equamax,
    Oblimax,
    Priorimax,
}

impl RotationMethod {
    pub const CLASSICAL: [RotationMethod; 4] =
        [RotationMethod::Varimax, RotationMethod::Quartimax, RotationMethod::Equamax, RotationMethod::Oblimax];

    pub fn name(self) -> &'static str {
        match self {
            RotationMethod::None => "none",
            RotationMethod::Varimax => "varimax",
            RotationMethod::Quartimax => "quartimax",
            RotationMethod::Equamax => "equamax",
            RotationMethod::Oblimax => "oblimax",
            RotationMethod::Priorimax => "priorimax",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            RotationMethod::None,
            RotationMethod::Varimax,
            RotationMethod::Quartimax,
            RotationMethod::Equamax,
            RotationMethod::Oblimax,
            RotationMethod::Priorimax,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }
}

/// Applies a classical (prior-free) rotation. `None` returns `fm` unchanged
/// apart from the method label; `Priorimax` is rejected.
pub fn classical_rotate(fm: &FactorModel, method: RotationMethod, cfg: GpaConfig) -> Result<FactorModel> {
    let criterion = match method {
        RotationMethod::None => {
            let t = fm.factor_count();
            return fm.rotated(&nalgebra::DMatrix::identity(t, t), "none");
        }
        RotationMethod::Varimax => Criterion::varimax(),
        RotationMethod::Quartimax => Criterion::quartimax(),
        RotationMethod::Equamax => Criterion::equamax(fm.factor_count()),
        RotationMethod::Oblimax => Criterion::Oblimax,
        RotationMethod::Priorimax => {
            return Err(crate::Error::InvalidConfig("priorimax needs a prior".to_string()));
        }
    };
    gpa_rotate(fm, criterion, method.name(), cfg).map(|(m, _)| m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    /// Position in the input slice.
    pub position: usize,
    pub method: String,
    pub index: Result<IndexComponents>,
    /// 1-based rank; `None` when the index is undefined for this candidate.
    pub rank: Option<usize>,
}

/// Ranks candidate rotations by V (descending), breaking ties by method
/// name. Candidates whose index cannot be computed are listed last,
/// unranked.
pub fn priorimax_procedure(candidates: &[FactorModel], prior: &PriorMatrix) -> Vec<RankedCandidate> {
    let mut ranked: Vec<RankedCandidate> = candidates
        .iter()
        .enumerate()
        .map(|(position, fm)| RankedCandidate {
            position,
            method: fm.method().to_string(),
            index: loading_index(fm.loadings(), prior),
            rank: None,
        })
        .collect();
    ranked.sort_by(|a, b| match (&a.index, &b.index) {
        (Ok(x), Ok(y)) => y.v.partial_cmp(&x.v).unwrap_or(Ordering::Equal).then_with(|| a.method.cmp(&b.method)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.position.cmp(&b.position),
    });
    let mut next = 1;
    for c in ranked.iter_mut() {
        if c.index.is_ok() {
            c.rank = Some(next);
            next += 1;
        }
    }
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LoadingMatrix;
    use crate::priors::generate_grouper_prior;
    use alloc::vec;
    use nalgebra::DMatrix;

    #[test]
    fn method_names_round_trip() {
        for m in [RotationMethod::None, RotationMethod::Priorimax, RotationMethod::Equamax] {
            assert_eq!(RotationMethod::parse(m.name()), Some(m));
        }
        assert_eq!(RotationMethod::parse("promax"), None);
    }

    #[test]
    fn procedure_ranks_and_flags() {
        let l = DMatrix::from_row_slice(4, 2, &[0.8, 0.1, 0.7, 0.2, 0.1, 0.8, 0.2, 0.7]);
        let fm = FactorModel::new(LoadingMatrix::standardized(l).unwrap(), vec![0.3; 4]).unwrap();
        let good = classical_rotate(&fm, RotationMethod::Varimax, GpaConfig::default()).unwrap();
        let same = fm.clone().with_method("b-copy");
        let flat = FactorModel::new(
            LoadingMatrix::standardized(DMatrix::from_element(4, 2, 0.5)).unwrap(),
            vec![0.5; 4],
        )
        .unwrap()
        .with_method("flat");
        let prior = generate_grouper_prior(4, &[vec![1, 2], vec![3, 4]]).unwrap();
        let out = priorimax_procedure(&[flat, same, fm.with_method("a-copy"), good], &prior);
        assert_eq!(out.len(), 4);
        let last = out.last().unwrap();
        assert_eq!(last.method, "flat");
        assert!(last.rank.is_none() && last.index.is_err());
        // equal V is ordered by method name
        let pos_a = out.iter().position(|c| c.method == "a-copy").unwrap();
        let pos_b = out.iter().position(|c| c.method == "b-copy").unwrap();
        assert!(pos_a < pos_b);
        let ranks: Vec<_> = out.iter().filter_map(|c| c.rank).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
        for w in out[..3].windows(2) {
            assert!(w[0].index.as_ref().unwrap().v >= w[1].index.as_ref().unwrap().v);
        }
    }
}
