//! Covered volume `V_N = σ(⋃ C_N(X_i))` of a cap configuration.
//!
//! On the circle (d = 2) the union is computed exactly by merging arcs. In
//! higher dimensions it is estimated by uniform Monte Carlo points; the
//! [`CommonPoints`] evaluator reuses one point set for several configurations
//! so that differences between them carry no independent sampling noise.

mod arcs;
mod index;
mod monte_carlo;
mod replacement;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{fill_uniform_direction, ModelParams, Point, UNIT_NORM_TOLERANCE};

pub use arcs::covered_volume_exact_d2;
pub use index::CoverageIndex;
pub use monte_carlo::{covered_volume_mc, CommonPoints};
pub use replacement::{delta, delta1, delta12, ReplacementScheme, Source};

/// One realization of the cap centers `(X_1, …, X_N)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CapConfiguration {
    params: ModelParams,
    centers: Vec<f64>,
}

impl CapConfiguration {
    pub fn new(params: ModelParams, centers: Vec<Point>) -> Result<Self> {
        if centers.len() != params.n() {
            return Err(Error::InvalidParameter(format!(
                "configuration has {} centers, expected N = {}",
                centers.len(),
                params.n()
            )));
        }
        let mut flat = Vec::with_capacity(params.n() * params.d());
        for p in centers {
            if p.dim() != params.d() {
                return Err(Error::WrongDimension {
                    expected: params.d(),
                    actual: p.dim(),
                });
            }
            flat.extend_from_slice(p.coords());
        }
        Ok(Self { params, centers: flat })
    }

    /// Circle configuration with centers at the given angles.
    pub fn from_angles(params: ModelParams, angles: &[f64]) -> Result<Self> {
        if params.d() != 2 {
            return Err(Error::WrongDimension {
                expected: 2,
                actual: params.d(),
            });
        }
        Self::new(params, angles.iter().map(|&t| Point::from_angle(t)).collect())
    }

    /// `N` independent uniform centers.
    pub fn sample<R: Rng + ?Sized>(params: ModelParams, rng: &mut R) -> Self {
        let mut centers = vec![0.0; params.n() * params.d()];
        for row in centers.chunks_exact_mut(params.d()) {
            fill_uniform_direction(row, rng);
        }
        Self { params, centers }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.n()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        let d = self.params.d();
        &self.centers[i * d..(i + 1) * d]
    }

    pub fn point(&self, i: usize) -> Point {
        Point::new(self.center(i).to_vec()).expect("stored centers are unit vectors")
    }

    pub fn centers_flat(&self) -> &[f64] {
        &self.centers
    }

    pub(crate) fn set_center(&mut self, i: usize, coords: &[f64]) {
        let d = self.params.d();
        self.centers[i * d..(i + 1) * d].copy_from_slice(coords);
    }

    /// Copy of the configuration with center `i` replaced.
    pub fn with_center(&self, i: usize, p: &Point) -> Result<Self> {
        if i >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "index {i} out of range for N = {}",
                self.len()
            )));
        }
        if p.dim() != self.params.d() {
            return Err(Error::WrongDimension {
                expected: self.params.d(),
                actual: p.dim(),
            });
        }
        let mut out = self.clone();
        out.set_center(i, p.coords());
        Ok(out)
    }

    /// Checks the unit-norm invariant of every stored center.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.len() {
            let c = self.center(i);
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::Domain {
                    what: "center norm",
                    value: n,
                    domain: "1 ± 1e-12",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorKind {
    Exact,
    MonteCarlo,
}

impl EvaluatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvaluatorKind::Exact => "exact",
            EvaluatorKind::MonteCarlo => "monte-carlo",
        }
    }
}

/// A covered-volume value. For Monte Carlo, `value = mc_hits / mc_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageValue {
    pub value: f64,
    pub kind: EvaluatorKind,
    pub mc_points: u64,
    pub mc_hits: u64,
}

impl CoverageValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            kind: EvaluatorKind::Exact,
            mc_points: 0,
            mc_hits: 0,
        }
    }

    pub fn monte_carlo(hits: u64, points: u64) -> Self {
        Self {
            value: hits as f64 / points as f64,
            kind: EvaluatorKind::MonteCarlo,
            mc_points: points,
            mc_hits: hits,
        }
    }
}

/// Something that maps a configuration to its covered volume `f(x_1, …, x_N)`.
pub trait VolumeEvaluator {
    fn volume(&self, config: &CapConfiguration) -> Result<f64>;
}

/// Exact arc-union evaluator, d = 2 only.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactArcs;

impl VolumeEvaluator for ExactArcs {
    fn volume(&self, config: &CapConfiguration) -> Result<f64> {
        covered_volume_exact_d2(config).map(|v| v.value)
    }
}
