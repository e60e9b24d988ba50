//! Prior-driven interpretability for exploratory factor analysis.
//!
//! The crate covers the numerical side of the workflow:
//!
//! - [`model`]: loading matrices, factor models and correlation matrices.
//! - [`extraction`]: Pearson correlations, Bartlett sphericity, KMO/MSA and
//!   iterated principal-axis factoring.
//! - [`similarity`]: angular similarity between embeddings and loading
//!   similarity between manifest variables.
//! - [`priors`]: full and partial prior (soft constraint) matrices.
//! - [`index`]: the pair multiset, mapped Kendall tau-b, slope angle, the
//!   V-index and LOWESS curves for interpretability plots.
//! - [`rotation`]: orthomax/oblimax gradient projection, the Cayley
//!   parametrization and the priorimax rotation driven by a stochastic
//!   ranking evolution strategy ([`es`]).
//!
//! Everything is `no_std` + `alloc`. File formats, threading and the command
//! line live in the companion `priorimax` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod es;
pub mod extraction;
pub mod index;
pub mod linalg;
pub mod model;
pub mod priors;
pub mod rotation;
pub mod similarity;
pub mod special;

pub use error::{Error, Result};
pub use nalgebra::DMatrix;
