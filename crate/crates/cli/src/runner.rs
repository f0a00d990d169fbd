//! Evaluates every sweep point on a worker pool and assembles ordered records.

use axion_core::mixing::classical_probability;
use axion_core::scenarios::{headline_enhancement, run_scenario, squeezing_db, HeadlineFactor, ScenarioResult};
use axion_core::units::UnitProvenance;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Kind, RunConfig, SweepParameter};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub axion_sim: &'static str,
    pub axion_core: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            axion_sim: env!("CARGO_PKG_VERSION"),
            axion_core: axion_core::scenarios::Provenance::default().crate_version,
        }
    }
}

/// One evaluated point; re-runnable from `config` alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub index: usize,
    pub sweep_param: Option<SweepParameter>,
    pub sweep_value: Option<f64>,
    pub config: RunConfig,
    pub kind: Kind,
    pub p_exact: Option<f64>,
    pub p_leading: Option<f64>,
    pub p_classical: f64,
    pub enhancement: Option<f64>,
    pub leakage: Option<f64>,
    pub flagged: bool,
    pub error: Option<String>,
    pub headline: Option<HeadlineFactor>,
    pub result: Option<ScenarioResult>,
    pub versions: Versions,
    pub units: UnitProvenance,
}

fn evaluate(index: usize, point: Option<(SweepParameter, f64)>, config: RunConfig) -> ResultRecord {
    let mut record = ResultRecord {
        index,
        sweep_param: point.map(|p| p.0),
        sweep_value: point.map(|p| p.1),
        kind: config.kind(),
        p_exact: None,
        p_leading: None,
        p_classical: f64::NAN,
        enhancement: None,
        leakage: None,
        flagged: false,
        error: None,
        headline: None,
        result: None,
        versions: Versions::default(),
        units: UnitProvenance::default(),
        config,
    };
    let spec = match (record.config.mixing_params(), record.config.scenario_spec()) {
        (Ok(params), Ok(spec)) => {
            record.p_classical = classical_probability(&params);
            spec
        }
        (Err(e), _) | (_, Err(e)) => {
            record.flagged = true;
            record.error = Some(e);
            return record;
        }
    };
    let Some(spec) = spec else {
        return record;
    };
    if record.kind == Kind::SqueezedCoherentAdded {
        record.headline = squeezing_db(spec.zeta.r)
            .and_then(|db| headline_enhancement(spec.addition.n, db))
            .ok();
    }
    match run_scenario(&spec) {
        Ok(r) => {
            record.p_exact = Some(r.p_exact);
            record.p_leading = Some(r.p_leading_closed_form);
            record.enhancement = Some(r.enhancement_vs_single_photon);
            record.leakage = Some(r.leakage);
            record.flagged = r.flagged;
            record.error = r.flag_reason.clone();
            record.result = Some(r);
        }
        Err(e) => {
            record.flagged = true;
            record.error = Some(e.to_string());
        }
    }
    record
}

/// Runs all points; `threads = None` uses the rayon default.
pub fn run(config: &RunConfig, threads: Option<usize>) -> Result<Vec<ResultRecord>, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let points: Vec<_> = config.points().into_iter().enumerate().collect();
    Ok(pool.install(|| {
        points
            .into_par_iter()
            .map(|(i, (point, cfg))| evaluate(i, point, cfg))
            .collect()
    }))
}
