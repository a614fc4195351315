//! Scenario configuration, run orchestration, sweeps, persistence and the
//! acceptance suite.
//!
//! A run directory holds `report` (pretty JSON of the [`RunReport`],
//! including the schedule constants that produced it), `trace.csv` with
//! columns `t, M, A, mass`, and `config.snapshot`, the scenario re-rendered
//! in config syntax. Lifespan scans additionally write `scan.csv` with
//! columns `param, T_star, uncertainty`.

pub mod accept;
pub mod config;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use config::{CHat, Horizon, Outputs, Pairs, Scenario, ScheduleSpec};
pub use sweep::{run_sweep, Measure, PointResult, SweepAggregate, SweepPlan};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{make_schedule, BoundarySchedule};
use crate::kernel::{calibrate_bti_constant, refine_calibration, CalibrationResult, KernelEvaluator, SamplingPlan};
use crate::schedule::{build_constants, exponents, Mode, ScheduleConstants, ScheduleParams};
use crate::solver::{run, RunReport};

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "NEUMANN_LAB_OUT";

/// Scenarios shipped with the crate, by name.
pub const BUILTIN_SCENARIOS: [(&str, &str); 4] = [
    ("blowup_fixed_gamma", include_str!("../../scenarios/blowup_fixed_gamma.cfg")),
    ("prevention_global", include_str!("../../scenarios/prevention_global.cfg")),
    ("cap_B5", include_str!("../../scenarios/cap_B5.cfg")),
    ("disk_cap_shrink", include_str!("../../scenarios/disk_cap_shrink.cfg")),
];

pub fn builtin(name: &str) -> Result<Scenario> {
    let stem = name.strip_suffix(".cfg").unwrap_or(name);
    BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == stem)
        .ok_or_else(|| Error::Config(format!("no built-in scenario `{name}`")))
        .and_then(|(_, text)| Scenario::parse(text))
}

/// A file path if it exists, otherwise a built-in scenario name.
pub fn resolve_scenario(spec: &str) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.is_file() {
        Scenario::load(path)
    } else {
        builtin(spec)
    }
}

/// `$NEUMANN_LAB_OUT`, or `runs` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

/// Everything a scenario resolves to before the solver starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub schedule: BoundarySchedule,
    pub constants: Option<ScheduleConstants>,
    pub calibration: Option<CalibrationResult>,
    pub horizon: f64,
}

/// Calibrate `Ĉ` for `alpha` on the standard plan, then refine locally.
pub fn calibrate(domain: crate::geometry::Domain, alpha: f64, exec: Execution) -> Result<CalibrationResult> {
    let eval = KernelEvaluator::new(domain)?;
    let coarse = calibrate_bti_constant(&eval, alpha, &SamplingPlan::standard(&domain), exec)?;
    refine_calibration(&eval, &coarse, exec)
}

pub fn prepare(s: &Scenario, exec: Execution) -> Result<Prepared> {
    match &s.schedule {
        ScheduleSpec::Profile { gamma1, profile, anchor } => {
            let horizon = match s.horizon {
                Horizon::Time(t) => t,
                Horizon::TStarMultiple(_) => {
                    return Err(Error::Config("`*t_star` horizons need a pipeline schedule".into()))
                }
            };
            Ok(Prepared {
                schedule: make_schedule(s.domain, *gamma1, profile.clone(), *anchor)?,
                constants: None,
                calibration: None,
                horizon,
            })
        }
        ScheduleSpec::Pipeline { mode, gamma1, beta, b, c_hat, anchor } => {
            let n = s.domain.dimension();
            let m0 = s.u0.max_value();
            let mut params = match mode {
                Mode::Global => ScheduleParams::global(n, s.solver.q, *beta, m0, *gamma1, 1.0),
                Mode::Capped => ScheduleParams::capped(
                    n,
                    s.solver.q,
                    *beta,
                    m0,
                    *gamma1,
                    b.ok_or_else(|| Error::Config("capped schedule without B".into()))?,
                    1.0,
                ),
            };
            let calibration = match c_hat {
                CHat::Value(v) => {
                    params.c_hat = *v;
                    None
                }
                CHat::Calibrate => {
                    let (alpha, _, _) = exponents(&params)?;
                    let cal = calibrate(s.domain, alpha, exec)?;
                    params.c_hat = cal.c_hat;
                    Some(cal)
                }
            };
            let constants = build_constants(&params)?;
            let horizon = match s.horizon {
                Horizon::Time(t) => t,
                Horizon::TStarMultiple(k) => k * constants.t_star,
            };
            Ok(Prepared {
                schedule: constants.schedule(s.domain, *anchor)?,
                constants: Some(constants),
                calibration,
                horizon,
            })
        }
    }
}

/// Prepare and integrate one scenario.
pub fn run_scenario(s: &Scenario, exec: Execution) -> Result<(RunReport, Prepared)> {
    let prep = prepare(s, exec)?;
    let mut report = run(&s.u0, &prep.schedule, &s.solver, prep.horizon)?;
    report.constants = prep.constants.clone();
    Ok((report, prep))
}

/// Write the requested outputs of one run into `dir`.
pub fn write_run(dir: &Path, s: &Scenario, report: &RunReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if s.outputs.report {
        report.write_json(&dir.join("report"))?;
    }
    if s.outputs.trace {
        report.write_trace_csv(&dir.join("trace.csv"))?;
    }
    if s.outputs.snapshot {
        std::fs::write(dir.join("config.snapshot"), s.to_text())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_round_trip() {
        for (name, _) in BUILTIN_SCENARIOS {
            let s = builtin(name).unwrap();
            assert_eq!(s.name, name);
            assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
        }
        assert!(builtin("nope").is_err());
        assert_eq!(builtin("cap_B5.cfg").unwrap().name, "cap_B5");
    }

    #[test]
    fn pipeline_scenario_records_its_constants() {
        let s = builtin("prevention_global")
            .unwrap()
            .with_override("schedule.c_hat", "1.5")
            .unwrap()
            .with_override("solver.resolution", "16")
            .unwrap();
        let (r, prep) = run_scenario(&s, Execution::Sequential).unwrap();
        let c = r.constants.as_ref().unwrap();
        assert_eq!(c.c_hat, 1.5);
        assert_eq!(prep.horizon, 50.0 * c.t_star);
        assert_eq!(r.schedule, prep.schedule);
    }

    #[test]
    fn disk_cannot_be_calibrated() {
        let mut p = builtin("disk_cap_shrink").unwrap().to_pairs();
        p.0.retain(|(k, _)| !k.starts_with("schedule.profile."));
        p.set("schedule.kind", "global");
        p.set("schedule.beta", "2");
        p.set("schedule.c_hat", "calibrate");
        let s = Scenario::from_pairs(&p).unwrap();
        assert!(matches!(prepare(&s, Execution::Sequential), Err(Error::UnsupportedDomain(_))));
    }
}
