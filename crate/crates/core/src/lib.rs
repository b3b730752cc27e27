//! Random partial coverings of the unit sphere.
//!
//! `N` caps, each of normalized measure `1/N`, are centered at independent
//! uniform points of S^{d-1}. This crate computes the covered volume `V_N`
//! (exactly on the circle, by Monte Carlo otherwise), the replacement
//! differences entering Berry–Esseen bounds for symmetric statistics, exact
//! oracles for the mean, the circle variance and the cap intersection
//! probability, and the experiment drivers that check all of them
//! empirically, including Kolmogorov-distance estimates for the CLT.

pub mod coverage;
pub mod error;
pub mod experiments;
pub mod oracles;
pub mod quadrature;
pub mod rng;
pub mod root;
pub mod sphere;

pub use coverage::{CapConfiguration, CoverageValue, EvaluatorKind, ReplacementScheme, Source, VolumeEvaluator};
pub use error::{Error, Result};
pub use oracles::{BoundConstants, BoundReport};
pub use sphere::{Cap, ModelParams, Point};
