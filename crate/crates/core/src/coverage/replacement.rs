//! Recombinations of three independent configurations and the replacement
//! differences `Δ_i f(Z) = f(Z) − f(Z^{i})` and
//! `Δ_{i,j} f(Z) = f(Z) − f(Z^{i}) − f(Z^{j}) + f(Z^{i,j})`, where `Z^{S}`
//! replaces the coordinates in `S` by the primed copy `X′`.
//!
//! Coordinates are 0-based: `delta1` replaces coordinate 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CapConfiguration, VolumeEvaluator};
use crate::error::{Error, Result};

/// Which copy a recombination takes a coordinate from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Base,
    Primed,
    Tilde,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Base, Source::Primed, Source::Tilde];

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..3)]
    }
}

/// The triple `(X, X′, X̃)` together with a selector defining `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementScheme {
    base: CapConfiguration,
    primed: CapConfiguration,
    tilde: CapConfiguration,
    selector: Vec<Source>,
}

impl ReplacementScheme {
    pub fn new(
        base: CapConfiguration,
        primed: CapConfiguration,
        tilde: CapConfiguration,
        selector: Vec<Source>,
    ) -> Result<Self> {
        if base.params() != primed.params() || base.params() != tilde.params() {
            return Err(Error::InvalidParameter(
                "replacement scheme copies must share model parameters".into(),
            ));
        }
        if selector.len() != base.len() {
            return Err(Error::InvalidParameter(format!(
                "selector has {} entries, expected N = {}",
                selector.len(),
                base.len()
            )));
        }
        Ok(Self {
            base,
            primed,
            tilde,
            selector,
        })
    }

    /// The canonical scheme `Z = X`.
    pub fn canonical(base: CapConfiguration, primed: CapConfiguration, tilde: CapConfiguration) -> Result<Self> {
        let n = base.len();
        Self::new(base, primed, tilde, vec![Source::Base; n])
    }

    /// Fresh independent copies with a uniformly random selector.
    pub fn sample<R: Rng + ?Sized>(params: crate::sphere::ModelParams, rng: &mut R) -> Self {
        let base = CapConfiguration::sample(params, rng);
        let primed = CapConfiguration::sample(params, rng);
        let tilde = CapConfiguration::sample(params, rng);
        let selector = (0..params.n()).map(|_| Source::random(rng)).collect();
        Self {
            base,
            primed,
            tilde,
            selector,
        }
    }

    pub fn base(&self) -> &CapConfiguration {
        &self.base
    }

    pub fn primed(&self) -> &CapConfiguration {
        &self.primed
    }

    pub fn tilde(&self) -> &CapConfiguration {
        &self.tilde
    }

    pub fn selector(&self) -> &[Source] {
        &self.selector
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Same copies, different recombination.
    pub fn with_selector(&self, selector: Vec<Source>) -> Result<Self> {
        Self::new(self.base.clone(), self.primed.clone(), self.tilde.clone(), selector)
    }

    pub fn copy(&self, source: Source) -> &CapConfiguration {
        match source {
            Source::Base => &self.base,
            Source::Primed => &self.primed,
            Source::Tilde => &self.tilde,
        }
    }

    /// Center of `Z_i`.
    pub fn coordinate(&self, i: usize) -> &[f64] {
        self.copy(self.selector[i]).center(i)
    }

    /// The recombination `Z`.
    pub fn recombination(&self) -> CapConfiguration {
        let mut z = self.base.clone();
        for (i, &s) in self.selector.iter().enumerate() {
            if s != Source::Base {
                z.set_center(i, self.copy(s).center(i));
            }
        }
        z
    }

    /// `Z^{S}`: the recombination with coordinates in `replaced` taken from `X′`.
    pub fn replaced(&self, replaced: &[usize]) -> Result<CapConfiguration> {
        let mut z = self.recombination();
        for &i in replaced {
            self.check_index(i)?;
            z.set_center(i, self.primed.center(i));
        }
        Ok(z)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "coordinate {i} out of range for N = {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// `Δ_i f(Z) = f(Z) − f(Z^{i})`.
pub fn delta<E: VolumeEvaluator + ?Sized>(scheme: &ReplacementScheme, i: usize, eval: &E) -> Result<f64> {
    scheme.check_index(i)?;
    let z = scheme.recombination();
    let zi = scheme.replaced(&[i])?;
    Ok(eval.volume(&z)? - eval.volume(&zi)?)
}

/// `Δ_1 f(Z)`, replacing the first coordinate.
pub fn delta1<E: VolumeEvaluator + ?Sized>(scheme: &ReplacementScheme, eval: &E) -> Result<f64> {
    delta(scheme, 0, eval)
}

/// `Δ_{i,j} f(Z)`; requires `i ≠ j`.
pub fn delta12<E: VolumeEvaluator + ?Sized>(scheme: &ReplacementScheme, i: usize, j: usize, eval: &E) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidParameter(format!(
            "second replacement difference needs distinct coordinates, got {i} twice"
        )));
    }
    scheme.check_index(i)?;
    scheme.check_index(j)?;
    let z = eval.volume(&scheme.recombination())?;
    let zi = eval.volume(&scheme.replaced(&[i])?)?;
    let zj = eval.volume(&scheme.replaced(&[j])?)?;
    let zij = eval.volume(&scheme.replaced(&[i, j])?)?;
    Ok(z - zi - zj + zij)
}
