//! Lifespan extrapolation across resolutions and a-posteriori checks on
//! blowup traces.

use serde::{Deserialize, Serialize};

use super::{run, RefinementLevel, RunReport, SolverConfig, Verdict};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{BoundarySchedule, InitialData};

/// One member of a refinement sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanLevel {
    pub resolution: usize,
    pub dt_init: f64,
    pub max_rel_change: f64,
}

impl LifespanLevel {
    /// Three levels ending at `config`, each coarser one halving the
    /// resolution and doubling `dt_init` and `max_rel_change`.
    pub fn sequence(config: &SolverConfig, count: usize) -> Vec<Self> {
        (0..count)
            .rev()
            .map(|k| {
                let f = (1usize << k) as f64;
                Self {
                    resolution: (config.resolution >> k).max(4),
                    dt_init: config.dt_init * f,
                    max_rel_change: config.max_rel_change * f,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanEstimate {
    pub t_star: f64,
    pub uncertainty: f64,
    pub observed_order: Option<f64>,
    /// Set when the level sequence is not monotonically convergent.
    pub low_confidence: bool,
    pub history: Vec<RefinementLevel>,
}

/// Run each level to blowup and Richardson-extrapolate the last three
/// lifespans (refinement ratio 2, observed order clamped to `[0.5, 3]`).
pub fn estimate_lifespan(
    u0: &InitialData,
    schedule: &BoundarySchedule,
    config: &SolverConfig,
    horizon: f64,
    levels: &[LifespanLevel],
    exec: Execution,
) -> Result<LifespanEstimate> {
    if levels.len() < 3 {
        return Err(Error::validation("lifespan estimation needs at least three levels"));
    }
    let runs = exec.map_slice(levels, |lv| {
        let cfg = SolverConfig {
            resolution: lv.resolution,
            dt_init: lv.dt_init,
            max_rel_change: lv.max_rel_change,
            ..config.clone()
        };
        run(u0, schedule, &cfg, horizon)
    });
    let mut history = Vec::with_capacity(levels.len());
    let mut times = Vec::with_capacity(levels.len());
    for (lv, r) in levels.iter().zip(runs) {
        let r = r?;
        if r.verdict != Verdict::Blowup {
            return Err(Error::validation(format!(
                "no blowup before horizon {horizon} at resolution {}",
                lv.resolution
            )));
        }
        let t = r.t_star.unwrap_or(r.t_end);
        times.push(t);
        history.push(RefinementLevel {
            resolution: lv.resolution,
            dt_init: lv.dt_init,
            dt_min: config.dt_min,
            t_star: Some(t),
        });
    }
    let k = times.len();
    let (t1, t2, t3) = (times[k - 3], times[k - 2], times[k - 1]);
    let (d1, d2) = (t1 - t2, t2 - t3);
    let floor = 1e-9 * t3.abs();
    let spread = times.iter().map(|t| (t - t3).abs()).fold(0.0, f64::max);
    let est = if d2 == 0.0 {
        LifespanEstimate { t_star: t3, uncertainty: floor, observed_order: None, low_confidence: false, history }
    } else if d1 * d2 > 0.0 && d2.abs() < d1.abs() {
        let p = (d1 / d2).log2().clamp(0.5, 3.0);
        let t_ext = t3 + d2 / (p.exp2() - 1.0);
        LifespanEstimate {
            t_star: t_ext,
            uncertainty: (t_ext - t3).abs().max(floor),
            observed_order: Some(p),
            low_confidence: false,
            history,
        }
    } else {
        log::warn!("non-monotone lifespan sequence {times:?}; reporting the finest level");
        LifespanEstimate { t_star: t3, uncertainty: spread.max(floor), observed_order: None, low_confidence: true, history }
    };
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t0: f64,
    pub dt: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub violations: Vec<Violation>,
    pub pairs_checked: usize,
    /// Largest `lhs / rhs` over pairs with `rhs > 0`.
    pub max_ratio: f64,
}

const SLACK: f64 = 1.05;

/// Check `(M(T+t) − M(T)) / M(T+t)^q ≤ Ĉ A(T)^α t^{(1−(n−1)α)/2}` on pairs of
/// trace samples with `t < min(1, t_end − T)`.
pub fn growth_rate_check(
    report: &RunReport,
    schedule: &BoundarySchedule,
    alpha: f64,
    c_hat: f64,
) -> Result<GrowthCheck> {
    let n = schedule.domain.dimension() as f64;
    if !(alpha >= 0.0 && alpha < 1.0 / (n - 1.0)) {
        return Err(Error::domain(format!("alpha {alpha} outside [0, 1/(n-1))")));
    }
    let expo = 0.5 * (1.0 - (n - 1.0) * alpha);
    let tr = &report.trace;
    let t_end = report.t_end;
    let starts = sub_indices(tr.len(), 400);
    let mut violations = Vec::new();
    let mut pairs = 0;
    let mut max_ratio: f64 = 0.0;
    for &i in &starts {
        let s = tr[i];
        let limit = (t_end - s.t).min(1.0);
        let end = tr.partition_point(|x| x.t - s.t < limit);
        if end <= i + 1 {
            continue;
        }
        let later: Vec<usize> = sub_indices(end - i - 1, 400).into_iter().map(|j| j + i + 1).collect();
        let scale = c_hat * schedule.area(s.t).powf(alpha);
        for j in later {
            let e = tr[j];
            let dt = e.t - s.t;
            let lhs = (e.m - s.m) / e.m.powf(report.q);
            let rhs = scale * dt.powf(expo);
            pairs += 1;
            if rhs > 0.0 {
                max_ratio = max_ratio.max(lhs / rhs);
            }
            if lhs > SLACK * rhs {
                violations.push(Violation { t0: s.t, dt, lhs, rhs });
            }
        }
    }
    Ok(GrowthCheck { violations, pairs_checked: pairs, max_ratio })
}

/// At most `cap` indices of `0..len`, evenly spread and always including
/// the last one.
fn sub_indices(len: usize, cap: usize) -> Vec<usize> {
    if len <= cap {
        return (0..len).collect();
    }
    let mut v: Vec<usize> = (0..cap).map(|k| k * (len - 1) / (cap - 1)).collect();
    v.dedup();
    v
}

/// Constants implied by `T* ≥ C/(q−1) · ln(1 + (2M₀)^{−4(q−1)} |Γ₁|^{−2/(n−1)})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub implied: Vec<f64>,
    /// Largest `C` for which the bound holds on every case.
    pub c_lower: f64,
    pub spread: f64,
}

pub fn lower_bound_check(
    cases: &[(f64, f64)],
    n: usize,
    q: f64,
    m0: f64,
) -> Result<LowerBoundReport> {
    if cases.is_empty() {
        return Err(Error::validation("no lifespans supplied"));
    }
    let implied: Vec<f64> = cases
        .iter()
        .map(|&(gamma, t_star)| {
            let arg = (2.0 * m0).powf(-4.0 * (q - 1.0)) * gamma.powf(-2.0 / (n as f64 - 1.0));
            t_star * (q - 1.0) / arg.ln_1p()
        })
        .collect();
    let lo = implied.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = implied.iter().copied().fold(0.0, f64::max);
    Ok(LowerBoundReport { implied, c_lower: lo, spread: hi / lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_schedule, Anchor, DecayProfile, Domain};
    use crate::solver::TraceSample;

    fn synthetic(ms: &[(f64, f64)], area: f64) -> (RunReport, BoundarySchedule) {
        let s = make_schedule(Domain::unit_square(), area, DecayProfile::Constant, Anchor::Center).unwrap();
        let trace: Vec<TraceSample> =
            ms.iter().map(|&(t, m)| TraceSample { t, m, area, mass: 1.0 }).collect();
        let r = RunReport {
            verdict: Verdict::Completed,
            t_star: None,
            t_end: trace.last().unwrap().t,
            m0: 1.0,
            u_max: 1e8,
            q: 2.0,
            resolution: 8,
            steps_accepted: trace.len(),
            steps_rejected: 0,
            refinement_history: vec![],
            schedule: s.clone(),
            constants: None,
            trace,
        };
        (r, s)
    }

    #[test]
    fn flat_trace_has_no_violations() {
        let (r, s) = synthetic(&[(0.0, 1.0), (0.25, 1.0), (0.5, 1.0), (1.0, 1.0)], 0.1);
        let g = growth_rate_check(&r, &s, 0.75, 1.0).unwrap();
        assert!(g.violations.is_empty());
        assert_eq!(g.pairs_checked, 3);
    }

    #[test]
    fn steep_jump_is_flagged() {
        let (r, s) = synthetic(&[(0.0, 1.0), (0.001, 2.0), (0.002, 2.0)], 0.1);
        let g = growth_rate_check(&r, &s, 0.75, 0.1).unwrap();
        assert!(!g.violations.is_empty());
        assert!(growth_rate_check(&r, &s, 1.0, 0.1).is_err());
    }

    #[test]
    fn radiation_off_requires_constant_m() {
        let (r, s) = synthetic(&[(0.0, 1.0), (0.1, 1.0 + 1e-9), (0.2, 1.0 + 1e-9)], 0.1);
        let mut s0 = s.clone();
        s0.initial = crate::geometry::BoundaryRegion::Empty;
        assert_eq!(growth_rate_check(&r, &s0, 0.5, 10.0).unwrap().violations.len(), 1);
    }

    #[test]
    fn lower_bound_constants() {
        let rep = lower_bound_check(&[(0.1, 9.0), (0.2, 4.5)], 2, 2.0, 1.0).unwrap();
        assert!(rep.c_lower > 0.0 && rep.spread >= 1.0);
    }

    #[test]
    fn level_sequence_halves() {
        let cfg = SolverConfig { resolution: 64, dt_init: 0.01, ..Default::default() };
        let lv = LifespanLevel::sequence(&cfg, 3);
        assert_eq!(lv.iter().map(|l| l.resolution).collect::<Vec<_>>(), vec![16, 32, 64]);
        assert_eq!(lv[0].dt_init, 0.04);
    }
}
