//! Mixed-boundary heat solver with blowup detection.
//!
//! Each step solves `W(u − uⁿ) + θΔt K u + (1−θ)Δt K uⁿ = θΔt F(u) + (1−θ)Δt F(uⁿ)`
//! with `F_i(u) = w_i(t) u_i^q`, where `W` holds the control volumes, `K` the
//! conductances and `w_i(t)` the radiating measure attributed to node `i`.
//! Newton's method uses `J = P − E D Eᵀ` with `P = W + θΔt K` factored once
//! per step size and a Woodbury correction on the radiating nodes.

pub mod grid;
mod lifespan;
mod linalg;

pub use grid::{ArcCoverage, Facet, Grid};
pub use lifespan::{
    estimate_lifespan, growth_rate_check, lower_bound_check, GrowthCheck, LifespanEstimate,
    LifespanLevel, LowerBoundReport, Violation,
};

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundarySchedule, Domain, InitialData};
use crate::schedule::ScheduleConstants;
use linalg::{pcg, BandedCholesky, Csr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub q: f64,
    pub scheme: Scheme,
    /// Cells per axis (boxes); the disk uses `resolution/2` rings and
    /// `2·resolution` angles.
    pub resolution: usize,
    pub dt_init: f64,
    pub dt_min: f64,
    /// Blowup threshold; `None` means `1e8·M₀`.
    pub u_max: Option<f64>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Steps changing some nodal value by more than this fraction are rejected.
    pub max_rel_change: f64,
    pub coverage: ArcCoverage,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            q: 2.0,
            scheme: Scheme::ImplicitEuler,
            resolution: 64,
            dt_init: 1e-2,
            dt_min: 1e-14,
            u_max: None,
            newton_tol: 1e-11,
            newton_max_iter: 25,
            max_rel_change: 0.05,
            coverage: ArcCoverage::Fractional,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::validation(m.to_string()));
        if !(self.q > 1.0 && self.q.is_finite()) {
            return fail("q must exceed 1");
        }
        if !(self.dt_init > 0.0 && self.dt_min > 0.0 && self.dt_min < self.dt_init) {
            return fail("time steps must satisfy 0 < dt_min < dt_init");
        }
        if matches!(self.u_max, Some(u) if !(u > 0.0)) {
            return fail("blowup threshold must be positive");
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return fail("Newton tolerance and iteration cap must be positive");
        }
        if !(self.max_rel_change > 0.0) {
            return fail("max_rel_change must be positive");
        }
        Ok(())
    }
}

/// Nodal temperatures at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub domain: Domain,
    pub resolution: usize,
    pub values: Vec<f64>,
    pub time: f64,
}

impl GridField {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Completed,
    Blowup,
}

/// One row of the `t, M, A, mass` trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "A")]
    pub area: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub resolution: usize,
    pub dt_init: f64,
    pub dt_min: f64,
    pub t_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub verdict: Verdict,
    /// Time at which `M` first reached the blowup threshold.
    pub t_star: Option<f64>,
    pub t_end: f64,
    pub m0: f64,
    pub u_max: f64,
    pub q: f64,
    pub resolution: usize,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub refinement_history: Vec<RefinementLevel>,
    pub schedule: BoundarySchedule,
    pub constants: Option<ScheduleConstants>,
    pub trace: Vec<TraceSample>,
}

impl RunReport {
    pub fn max_m(&self) -> f64 {
        self.trace.last().map(|s| s.m).unwrap_or(self.m0)
    }

    /// Running supremum `M(t)` by linear interpolation in the trace.
    pub fn m_at(&self, t: f64) -> f64 {
        let i = self.trace.partition_point(|s| s.t <= t);
        if i == 0 {
            return self.m0;
        }
        if i >= self.trace.len() {
            return self.max_m();
        }
        let (a, b) = (self.trace[i - 1], self.trace[i]);
        a.m + (b.m - a.m) * (t - a.t) / (b.t - a.t)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    /// CSV with columns `t,M,A,mass`.
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.trace {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Why a trial step was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    NewtonDiverged,
    NonPositive,
    ChangeTooLarge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    Accepted(GridField),
    Rejected(Rejection),
}

enum Factor {
    Banded(BandedCholesky),
    Iterative(Csr),
}

/// Maximum `n·bw²` for which the banded factorisation is used.
const BANDED_WORK_LIMIT: f64 = 2e9;

/// Reusable single-step integrator for one grid and schedule.
pub struct Stepper {
    pub grid: Grid,
    pub schedule: BoundarySchedule,
    pub config: SolverConfig,
    theta: f64,
    factor: Option<(f64, Factor)>,
    columns: HashMap<usize, Vec<f64>>,
    force_iterative: bool,
}

impl Stepper {
    pub fn new(schedule: &BoundarySchedule, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = Grid::new(schedule.domain, config.resolution)?;
        Ok(Self {
            grid,
            schedule: schedule.clone(),
            config: config.clone(),
            theta: config.scheme.theta(),
            factor: None,
            columns: HashMap::new(),
            force_iterative: false,
        })
    }

    fn prepare(&mut self, dt: f64) {
        if matches!(self.factor, Some((d, _)) if d == dt) {
            return;
        }
        let g = &self.grid;
        let c = self.theta * dt;
        let mut entries = Vec::with_capacity(g.conductance.val.len() + g.len());
        for i in 0..g.len() {
            let mut diag = g.volume[i];
            for (j, k) in g.conductance.row(i) {
                diag += c * k;
                entries.push((i, j, -c * k));
            }
            entries.push((i, i, diag));
        }
        let p = Csr::from_triplets(g.len(), entries);
        let bw = p.bandwidth() as f64;
        let banded = if !self.force_iterative && (g.len() as f64) * bw * bw <= BANDED_WORK_LIMIT {
            BandedCholesky::factor(&p)
        } else {
            None
        };
        let factor = match banded {
            Some(f) => Factor::Banded(f),
            None => Factor::Iterative(p),
        };
        self.factor = Some((dt, factor));
        self.columns.clear();
    }

    fn p_solve(&self, b: &mut [f64]) {
        match &self.factor {
            Some((_, Factor::Banded(f))) => f.solve(b),
            Some((_, Factor::Iterative(p))) => {
                let rhs = b.to_vec();
                let mut x: Vec<f64> = rhs.iter().zip(&self.grid.volume).map(|(r, w)| r / w).collect();
                pcg(p, &rhs, &mut x, 1e-14, 10 * p.n);
                b.copy_from_slice(&x);
            }
            None => unreachable!("prepare() not called"),
        }
    }

    fn ensure_column(&mut self, node: usize) {
        if self.columns.contains_key(&node) {
            return;
        }
        let mut e = vec![0.0; self.grid.len()];
        e[node] = 1.0;
        self.p_solve(&mut e);
        self.columns.insert(node, e);
    }

    /// One θ-scheme step from `(t, u_old)` to `t + dt`.
    pub fn try_step(&mut self, u_old: &[f64], t: f64, dt: f64) -> Result<std::result::Result<Vec<f64>, Rejection>> {
        let theta = self.theta;
        let q = self.config.q;
        let cov = self.config.coverage;
        let n = self.grid.len();
        let w_new = self.grid.flux_weights(&self.schedule.arc_at(t + dt)?, cov);
        self.prepare(dt);
        for &(node, _) in &w_new {
            self.ensure_column(node);
        }
        let g = &self.grid;
        let mut k_old = vec![0.0; n];
        g.apply_laplacian(u_old, &mut k_old);
        let mut rhs: Vec<f64> = (0..n).map(|i| g.volume[i] * u_old[i]).collect();
        if theta < 1.0 {
            let w_old = g.flux_weights(&self.schedule.arc_at(t)?, cov);
            for i in 0..n {
                rhs[i] -= (1.0 - theta) * dt * k_old[i];
            }
            for &(i, w) in &w_old {
                rhs[i] += (1.0 - theta) * dt * w * u_old[i].powf(q);
            }
        }
        let s: Vec<usize> = w_new.iter().map(|x| x.0).collect();
        let ns = s.len();
        let mut zss = DMatrix::<f64>::zeros(ns, ns);
        for (b, node) in s.iter().enumerate() {
            let col = &self.columns[node];
            for (a, other) in s.iter().enumerate() {
                zss[(a, b)] = col[*other];
            }
        }
        let mut u = u_old.to_vec();
        let mut ku = vec![0.0; n];
        let mut converged = false;
        for _ in 0..self.config.newton_max_iter {
            g.apply_laplacian(&u, &mut ku);
            let mut r: Vec<f64> = (0..n).map(|i| rhs[i] - g.volume[i] * u[i] - theta * dt * ku[i]).collect();
            let mut d = DVector::<f64>::zeros(ns);
            for (a, &(i, w)) in w_new.iter().enumerate() {
                r[i] += theta * dt * w * u[i].powf(q);
                d[a] = theta * dt * w * q * u[i].powf(q - 1.0);
            }
            // r now holds −R(u); solve (P − E D Eᵀ) δ = r
            self.p_solve(&mut r);
            let delta = if ns > 0 {
                let mut m = DMatrix::<f64>::identity(ns, ns);
                let mut rhs_c = DVector::<f64>::zeros(ns);
                for a in 0..ns {
                    for b in 0..ns {
                        m[(a, b)] -= d[a] * zss[(a, b)];
                    }
                    rhs_c[a] = d[a] * r[s[a]];
                }
                let Some(c) = m.lu().solve(&rhs_c) else {
                    return Ok(Err(Rejection::NewtonDiverged));
                };
                for (b, node) in s.iter().enumerate() {
                    let col = &self.columns[node];
                    for i in 0..n {
                        r[i] += c[b] * col[i];
                    }
                }
                r
            } else {
                r
            };
            let mut step = 0.0f64;
            let mut scale = 1.0f64;
            for i in 0..n {
                u[i] += delta[i];
                step = step.max(delta[i].abs());
                scale = scale.max(u[i].abs());
            }
            if !step.is_finite() {
                return Ok(Err(Rejection::NewtonDiverged));
            }
            if u.iter().any(|v| !(*v > 0.0)) {
                return Ok(Err(Rejection::NonPositive));
            }
            if step <= self.config.newton_tol * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Ok(Err(Rejection::NewtonDiverged));
        }
        let rel = u.iter().zip(u_old).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
        if rel > self.config.max_rel_change {
            return Ok(Err(Rejection::ChangeTooLarge));
        }
        Ok(Ok(u))
    }
}

/// Advance `field` by one step of size `dt`.
pub fn step(
    field: &GridField,
    schedule: &BoundarySchedule,
    config: &SolverConfig,
    dt: f64,
) -> Result<StepResult> {
    if !(dt > 0.0) || dt > config.dt_init {
        return Err(Error::validation(format!("step size {dt} outside (0, dt_init]")));
    }
    let cfg = SolverConfig { resolution: field.resolution, ..config.clone() };
    let mut st = Stepper::new(schedule, &cfg)?;
    if st.grid.len() != field.values.len() || field.domain != schedule.domain {
        return Err(Error::validation("field does not match the schedule's grid"));
    }
    Ok(match st.try_step(&field.values, field.time, dt)? {
        Ok(values) => StepResult::Accepted(GridField {
            domain: field.domain,
            resolution: field.resolution,
            values,
            time: field.time + dt,
        }),
        Err(r) => StepResult::Rejected(r),
    })
}

/// Integrate to `horizon` or until `M(t) ≥ U_max`.
pub fn run(
    u0: &InitialData,
    schedule: &BoundarySchedule,
    config: &SolverConfig,
    horizon: f64,
) -> Result<RunReport> {
    run_with_field(u0, schedule, config, horizon).map(|(r, _)| r)
}

/// As [`run`], also returning the final field.
pub fn run_with_field(
    u0: &InitialData,
    schedule: &BoundarySchedule,
    config: &SolverConfig,
    horizon: f64,
) -> Result<(RunReport, GridField)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::validation(format!("horizon must be positive, got {horizon}")));
    }
    let mut st = Stepper::new(schedule, config)?;
    let mut u = st.grid.sample(u0)?;
    let m0 = u0.max_value();
    let u_max = config.u_max.unwrap_or(1e8 * m0);
    let mut t = 0.0;
    let mut m = u.iter().copied().fold(f64::MIN, f64::max);
    let mut trace = vec![TraceSample { t, m, area: schedule.area(0.0), mass: st.grid.integrate(&u) }];
    let mut dt = config.dt_init;
    let mut streak = 0;
    let (mut accepted, mut rejected) = (0, 0);
    let mut verdict = Verdict::Completed;
    let mut t_star = None;
    while t < horizon {
        let trial = dt.min(horizon - t);
        match st.try_step(&u, t, trial)? {
            Ok(next) => {
                u = next;
                t = if trial == horizon - t { horizon } else { t + trial };
                accepted += 1;
                m = u.iter().copied().fold(m, f64::max);
                trace.push(TraceSample { t, m, area: schedule.area(t), mass: st.grid.integrate(&u) });
                streak += 1;
                if streak >= 5 {
                    dt = (dt * 1.2).min(config.dt_init);
                    streak = 0;
                }
                if m >= u_max {
                    verdict = Verdict::Blowup;
                    t_star = Some(t);
                    break;
                }
            }
            Err(reason) => {
                rejected += 1;
                streak = 0;
                dt = 0.5 * trial;
                if dt < config.dt_min {
                    log::debug!("step rejected ({reason:?}) below dt_min at t = {t}");
                    return Err(Error::Stalled { t, m });
                }
            }
        }
    }
    let report = RunReport {
        verdict,
        t_star,
        t_end: t,
        m0,
        u_max,
        q: config.q,
        resolution: config.resolution,
        steps_accepted: accepted,
        steps_rejected: rejected,
        refinement_history: vec![RefinementLevel {
            resolution: config.resolution,
            dt_init: config.dt_init,
            dt_min: config.dt_min,
            t_star,
        }],
        schedule: schedule.clone(),
        constants: None,
        trace,
    };
    let field = GridField { domain: schedule.domain, resolution: config.resolution, values: u, time: t };
    Ok((report, field))
}
