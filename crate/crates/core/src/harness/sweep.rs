//! One-parameter sweeps over a base scenario.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{fmt_num, Scenario};
use super::{prepare, write_run};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numeric::power_law_fit;
use crate::solver::{estimate_lifespan, run, LifespanLevel, RunReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Measure {
    /// One run per point; `T*` is the first threshold crossing.
    Run,
    /// Richardson extrapolation over `levels` resolutions ending at the
    /// scenario's own.
    Lifespan { levels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub base: Scenario,
    /// Dotted config key, e.g. `schedule.gamma1`.
    pub axis: String,
    pub values: Vec<f64>,
    pub parallelism: usize,
    pub measure: Measure,
    /// Fit `T* ≈ c·param^p` by log-log least squares.
    pub regress: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub param: f64,
    pub verdict: Option<Verdict>,
    #[serde(rename = "T_star")]
    pub t_star: Option<f64>,
    pub uncertainty: Option<f64>,
    pub low_confidence: bool,
    /// `ErrorName: message` when the point failed.
    pub error: Option<String>,
    #[serde(skip)]
    pub report: Option<RunReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// `T*·(q − 1)` along a `solver.q` sweep, ordered by increasing `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub scaled: Vec<(f64, f64)>,
    /// Relative change of the scaled lifespan between the two smallest `q`.
    pub last_rel_change: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub scenario: String,
    pub axis: String,
    pub points: Vec<PointResult>,
    /// Set when at least one point failed.
    pub partial: bool,
    pub fit: Option<PowerFit>,
    pub plateau: Option<Plateau>,
}

impl SweepPlan {
    pub fn instantiate(&self) -> Result<Vec<Scenario>> {
        if self.values.is_empty() {
            return Err(Error::validation("sweep has no values"));
        }
        if self.parallelism == 0 {
            return Err(Error::validation("sweep parallelism must be at least 1"));
        }
        if matches!(self.measure, Measure::Lifespan { levels } if levels < 3) {
            return Err(Error::validation("lifespan sweeps need at least three levels"));
        }
        self.values
            .iter()
            .map(|v| {
                let mut s = self.base.with_override(&self.axis, &fmt_num(*v))?;
                s.name = format!("{}_{}={}", self.base.name, self.axis, fmt_num(*v));
                Ok(s)
            })
            .collect()
    }
}

fn measure_point(s: &Scenario, measure: Measure) -> Result<PointResult> {
    let prep = prepare(s, Execution::Sequential)?;
    let point = |t_star, uncertainty, low_confidence, verdict, report| PointResult {
        param: f64::NAN,
        verdict,
        t_star,
        uncertainty,
        low_confidence,
        error: None,
        report,
    };
    match measure {
        Measure::Run => {
            let mut r = run(&s.u0, &prep.schedule, &s.solver, prep.horizon)?;
            r.constants = prep.constants;
            Ok(point(r.t_star, None, false, Some(r.verdict), Some(r)))
        }
        Measure::Lifespan { levels } => {
            let lv = LifespanLevel::sequence(&s.solver, levels);
            let e = estimate_lifespan(&s.u0, &prep.schedule, &s.solver, prep.horizon, &lv, Execution::Sequential)?;
            Ok(point(Some(e.t_star), Some(e.uncertainty), e.low_confidence, Some(Verdict::Blowup), None))
        }
    }
}

/// Map `f` over `items` on a pool of `workers` threads.
fn pool_map<I, T, F>(exec: Execution, workers: usize, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && workers > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| exec.map_slice(items, f));
        }
    }
    let _ = (exec, workers);
    Execution::Sequential.map_slice(items, f)
}

/// Run every point; failures are recorded per point and flag the aggregate
/// as partial.
pub fn run_sweep(plan: &SweepPlan, exec: Execution) -> Result<SweepAggregate> {
    let scenarios = plan.instantiate()?;
    let results = pool_map(exec, plan.parallelism, &scenarios, |s| measure_point(s, plan.measure));
    let points: Vec<PointResult> = plan
        .values
        .iter()
        .zip(results)
        .map(|(&param, r)| match r {
            Ok(p) => PointResult { param, ..p },
            Err(e) => {
                log::warn!("sweep point {}={param} failed: {e}", plan.axis);
                PointResult {
                    param,
                    verdict: None,
                    t_star: None,
                    uncertainty: None,
                    low_confidence: false,
                    error: Some(format!("{}: {e}", e.name())),
                    report: None,
                }
            }
        })
        .collect();
    let partial = points.iter().any(|p| p.error.is_some());
    let finished: Vec<(f64, f64)> = points.iter().filter_map(|p| Some((p.param, p.t_star?))).collect();
    let fit = if plan.regress {
        let (xs, ys): (Vec<f64>, Vec<f64>) = finished.iter().copied().unzip();
        power_law_fit(&xs, &ys).map(|f| PowerFit {
            exponent: f.slope,
            prefactor: f.intercept.exp(),
            r_squared: f.r_squared,
        })
    } else {
        None
    };
    let plateau = (plan.axis == "solver.q" && finished.len() >= 2).then(|| {
        let mut scaled: Vec<(f64, f64)> = finished.iter().map(|&(q, t)| (q, t * (q - 1.0))).collect();
        scaled.sort_by(|a, b| a.0.total_cmp(&b.0));
        let last_rel_change = (scaled[0].1 - scaled[1].1).abs() / scaled[0].1;
        Plateau { scaled, last_rel_change }
    });
    Ok(SweepAggregate { scenario: plan.base.name.clone(), axis: plan.axis.clone(), points, partial, fit, plateau })
}

impl SweepAggregate {
    /// CSV with columns `param, T_star, uncertainty`; missing values are empty.
    pub fn write_scan_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["param", "T_star", "uncertainty"])?;
        let cell = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        for p in &self.points {
            w.write_record([fmt_num(p.param), cell(p.t_star), cell(p.uncertainty)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `scan.csv`, `aggregate.json` and one run directory per point that
    /// kept its report.
    pub fn write(&self, dir: &Path, scenarios: &[Scenario]) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_scan_csv(&dir.join("scan.csv"))?;
        serde_json::to_writer_pretty(std::fs::File::create(dir.join("aggregate.json"))?, self)?;
        for (p, s) in self.points.iter().zip(scenarios) {
            if let Some(r) = &p.report {
                write_run(&dir.join(&s.name), s, r)?;
            }
        }
        Ok(())
    }
}
