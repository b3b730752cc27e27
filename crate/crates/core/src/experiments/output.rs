//! Per-replication CSV and the JSON experiment report.
//!
//! CSV columns: `replication_index, v_value, evaluator_kind, mc_points`, with
//! `v_value` written to 17 significant digits so that equal files mean equal
//! doubles. The JSON report carries `schema_version`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::stats::CltReport;
use super::verify::VerifyReport;
use super::{ExperimentPlan, SimulationRun};
use crate::coverage::CoverageValue;
use crate::error::Result;
use crate::oracles::{exact_mean, exact_variance_d2, BoundReport, DEFAULT_QUAD_NODES};

pub const SCHEMA_VERSION: u32 = 1;

/// Moments of one simulation run next to their exact values where known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub replications: usize,
    pub mean: f64,
    pub standard_error: f64,
    pub variance: f64,
    pub variance_denoised: f64,
    /// The Monte Carlo correction exceeded the raw variance.
    pub variance_floored: bool,
    pub fourth_central_moment: f64,
    pub min: f64,
    pub max: f64,
    pub exact_mean: f64,
    /// Circle only, `N ≥ 2`.
    pub exact_variance: Option<f64>,
}

impl Summary {
    pub fn from_run(run: &SimulationRun) -> Result<Self> {
        let dist = &run.distribution;
        let params = run.plan.params;
        let denoised = run.denoised_variance();
        let exact_variance = if params.d() == 2 && params.n() >= 2 {
            Some(exact_variance_d2(params.n(), DEFAULT_QUAD_NODES)?)
        } else {
            None
        };
        Ok(Self {
            replications: dist.len(),
            mean: dist.mean,
            standard_error: dist.standard_error(),
            variance: dist.variance,
            variance_denoised: denoised.variance,
            variance_floored: denoised.floored,
            fourth_central_moment: dist.fourth_central_moment,
            min: dist.min(),
            max: dist.max(),
            exact_mean: exact_mean(params.n())?,
            exact_variance,
        })
    }
}

/// Everything a command produced, plus the configuration that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub command: String,
    /// Free-form run configuration, as given by the caller.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<ExperimentPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt: Option<CltReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerifyReport>,
    pub elapsed_seconds: f64,
}

impl ExperimentResult {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            plan: None,
            summary: None,
            clt: None,
            bounds: None,
            verification: None,
            elapsed_seconds: 0.0,
        }
    }
}

pub fn write_csv_to<W: Write>(writer: W, values: &[CoverageValue]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replication_index", "v_value", "evaluator_kind", "mc_points"])?;
    for (k, v) in values.iter().enumerate() {
        w.write_record([
            k.to_string(),
            format!("{:.16e}", v.value),
            v.kind.as_str().to_string(),
            v.mc_points.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json_to<W: Write>(writer: W, result: &ExperimentResult) -> Result<()> {
    serde_json::to_writer_pretty(writer, result)?;
    Ok(())
}

pub fn read_report<R: Read>(reader: R) -> Result<ExperimentResult> {
    Ok(serde_json::from_reader(reader)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_replications, ExperimentPlan};
    use crate::sphere::ModelParams;

    #[test]
    fn csv_round_trips_doubles() {
        let run = run_replications(&ExperimentPlan::new(ModelParams::new(2, 7).unwrap(), 25, 9)).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &run.values).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("replication_index,v_value,evaluator_kind,mc_points"));
        for (k, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], k.to_string());
            assert_eq!(fields[1].parse::<f64>().unwrap(), run.values[k].value);
            assert_eq!(fields[2], "exact");
            assert_eq!(fields[3], "0");
        }
    }

    #[test]
    fn json_round_trip() {
        let run = run_replications(&ExperimentPlan::new(ModelParams::new(2, 7).unwrap(), 25, 9)).unwrap();
        let mut result = ExperimentResult::new("simulate", serde_json::json!({"d": 2, "N": 7}));
        result.plan = Some(run.plan);
        result.summary = Some(Summary::from_run(&run).unwrap());
        let mut buf = Vec::new();
        write_json_to(&mut buf, &result).unwrap();
        let back = read_report(buf.as_slice()).unwrap();
        assert_eq!(back, result);
        assert_eq!(back.schema_version, SCHEMA_VERSION);
    }
}
