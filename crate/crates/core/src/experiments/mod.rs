//! Replication driver and the empirical checks built on it.
//!
//! Every replication or trial draws from its own random stream addressed by
//! `(seed, domain, index)`, and results are collected in index order, so a
//! run is bit-identical for every worker count.

mod deltas;
mod lemmas;
mod output;
mod stats;
mod verify;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{covered_volume_exact_d2, covered_volume_mc, CapConfiguration, CoverageValue, EvaluatorKind};
use crate::error::{Error, Result};
use crate::rng::{domain, Stream, StreamFactory};
use crate::sphere::ModelParams;

pub use deltas::{estimate_delta_moments, DeltaMoments, RecombinationPolicy};
pub use lemmas::{
    first_difference_suite, locality_suite, mc_calibration, CalibrationReport, DisjointnessRule, FirstDifferenceReport,
    LocalityReport, LOCALITY_MAX_ATTEMPTS,
};
pub use output::{read_report, write_csv_to, write_json_to, ExperimentResult, Summary, SCHEMA_VERSION};
pub use stats::{
    dkw_radius, kolmogorov_distance, kolmogorov_statistic, normal_cdf, variance_denoise, CltReport, Denoised,
    EmpiricalDistribution, Standardization, DEFAULT_CONFIDENCE,
};
pub use verify::{verify_all, LedgerEntry, VerifyBudget, VerifyReport, SE_SLACK};

/// Default Monte Carlo points per replication, as a multiple of `N`.
pub const DEFAULT_POINTS_PER_CAP: u64 = 256;

/// How each replication's covered volume is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Evaluator {
    /// Arc union on the circle.
    ExactD2,
    /// Hit-or-miss estimate from `points` fresh uniform points.
    MonteCarlo { points: u64 },
}

impl Evaluator {
    /// Exact on the circle, otherwise `256 N` Monte Carlo points.
    pub fn default_for(params: &ModelParams) -> Self {
        if params.d() == 2 {
            Evaluator::ExactD2
        } else {
            Evaluator::MonteCarlo {
                points: DEFAULT_POINTS_PER_CAP * params.n() as u64,
            }
        }
    }

    /// Points per evaluation, 0 for the exact evaluator.
    pub fn mc_points(&self) -> u64 {
        match self {
            Evaluator::ExactD2 => 0,
            Evaluator::MonteCarlo { points } => *points,
        }
    }

    pub fn kind(&self) -> EvaluatorKind {
        match self {
            Evaluator::ExactD2 => EvaluatorKind::Exact,
            Evaluator::MonteCarlo { .. } => EvaluatorKind::MonteCarlo,
        }
    }

    fn evaluate(&self, config: &CapConfiguration, rng: &mut Stream) -> Result<CoverageValue> {
        match self {
            Evaluator::ExactD2 => covered_volume_exact_d2(config),
            Evaluator::MonteCarlo { points } => covered_volume_mc(config, *points, rng),
        }
    }
}

/// One simulation study at fixed `(d, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub params: ModelParams,
    pub replications: usize,
    pub evaluator: Evaluator,
    pub standardization: Standardization,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl ExperimentPlan {
    /// Default evaluator, oracle standardization on the circle, sample
    /// standardization elsewhere, automatic thread count.
    pub fn new(params: ModelParams, replications: usize, seed: u64) -> Self {
        Self {
            params,
            replications,
            evaluator: Evaluator::default_for(&params),
            standardization: if params.d() == 2 {
                Standardization::OracleMoments
            } else {
                Standardization::SampleMoments
            },
            seed,
            threads: 0,
        }
    }

    pub fn with_evaluator(mut self, evaluator: Evaluator) -> Self {
        self.evaluator = evaluator;
        self
    }

    pub fn with_standardization(mut self, standardization: Standardization) -> Self {
        self.standardization = standardization;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("at least one replication is required".into()));
        }
        match self.evaluator {
            Evaluator::ExactD2 if self.params.d() != 2 => Err(Error::InvalidParameter(format!(
                "the exact evaluator needs d = 2, got d = {}",
                self.params.d()
            ))),
            Evaluator::MonteCarlo { points: 0 } => Err(Error::InvalidParameter(
                "Monte Carlo sample count must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Per-replication values in replication order, plus their sample law.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub plan: ExperimentPlan,
    pub values: Vec<CoverageValue>,
    pub distribution: EmpiricalDistribution,
}

impl SimulationRun {
    /// Sample variance with the Monte Carlo noise removed.
    pub fn denoised_variance(&self) -> Denoised {
        variance_denoise(
            self.distribution.variance,
            self.distribution.mean,
            self.plan.evaluator.mc_points(),
        )
    }
}

/// Draws `R` independent configurations and evaluates `V_N` on each.
///
/// Replication `k` samples its centers and, for Monte Carlo, its points from
/// stream `k` of the replication domain.
pub fn run_replications(plan: &ExperimentPlan) -> Result<SimulationRun> {
    plan.validate()?;
    let factory = StreamFactory::new(plan.seed, domain::REPLICATIONS);
    let params = plan.params;
    let evaluator = plan.evaluator;
    let values = parallel_map(plan.threads, plan.replications, |k| {
        let mut rng = factory.stream(k as u64);
        let config = CapConfiguration::sample(params, &mut rng);
        evaluator.evaluate(&config, &mut rng)
    })?;
    let raw: Vec<f64> = values.iter().map(|v| v.value).collect();
    let distribution = EmpiricalDistribution::from_values(&raw)?;
    Ok(SimulationRun {
        plan: *plan,
        values,
        distribution,
    })
}

/// `f(0), …, f(count − 1)` computed on `threads` workers, in index order.
pub(crate) fn parallel_map<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if threads == 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::exact_mean;

    #[test]
    fn single_cap_covers_everything() {
        let plan = ExperimentPlan::new(ModelParams::new(2, 1).unwrap(), 10, 3);
        let run = run_replications(&plan).unwrap();
        assert!(run.values.iter().all(|v| v.value == 1.0));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        for d in [2usize, 3] {
            let plan = ExperimentPlan::new(ModelParams::new(d, 20).unwrap(), 300, 11);
            let a = run_replications(&plan.with_threads(1)).unwrap();
            let b = run_replications(&plan.with_threads(4)).unwrap();
            let c = run_replications(&plan.with_threads(0)).unwrap();
            assert_eq!(a.values, b.values);
            assert_eq!(a.values, c.values);
            assert_eq!(a.distribution, b.distribution);
        }
    }

    #[test]
    fn exact_evaluator_needs_circle() {
        let plan = ExperimentPlan::new(ModelParams::new(3, 5).unwrap(), 10, 0).with_evaluator(Evaluator::ExactD2);
        assert!(matches!(run_replications(&plan), Err(Error::InvalidParameter(_))));
        let plan = ExperimentPlan::new(ModelParams::new(2, 5).unwrap(), 0, 0);
        assert!(run_replications(&plan).is_err());
    }

    #[test]
    fn seeds_separate_runs() {
        let params = ModelParams::new(2, 10).unwrap();
        let a = run_replications(&ExperimentPlan::new(params, 50, 1)).unwrap();
        let b = run_replications(&ExperimentPlan::new(params, 50, 2)).unwrap();
        assert_ne!(a.values, b.values);
    }

    #[test]
    fn monte_carlo_values_carry_point_count() {
        let params = ModelParams::new(3, 10).unwrap();
        let run = run_replications(&ExperimentPlan::new(params, 20, 5)).unwrap();
        assert!(run
            .values
            .iter()
            .all(|v| v.mc_points == 2560 && v.kind == EvaluatorKind::MonteCarlo));
        let mean = run.distribution.mean;
        assert!((mean - exact_mean(10).unwrap()).abs() < 0.05);
    }
}
