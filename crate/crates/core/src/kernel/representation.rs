//! Fixed point of the kernel representation
//! `u(x,t) = ∫ N(x,y,t) u₀(y) dy + ∫₀ᵗ ∫_{Γ₁,τ} N(x,y,t−τ) u^q(y,τ) dS(y) dτ`
//! on the boundary trace, used as an oracle for the grid solver.
//!
//! The trace is piecewise constant on elements of `Γ₁,₀` (collocated at
//! element centroids) and piecewise linear in time.

use std::sync::OnceLock;

use super::bti::region_integral;
use super::{interval_kernel_unchecked, KernelEvaluator};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{BoundaryRegion, BoundarySchedule, InitialData};
use crate::numeric::{graded_breaks, GaussLegendre};

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationConfig {
    /// Elements per tangential axis of `Γ₁,₀`.
    pub elements: usize,
    pub steps: usize,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
    pub exec: Execution,
}

impl Default for RepresentationConfig {
    fn default() -> Self {
        Self { elements: 40, steps: 100, fixed_point_tol: 1e-12, max_iter: 500, exec: Execution::default() }
    }
}

/// Boundary trace of the representation fixed point.
#[derive(Debug, Clone)]
pub struct RepresentationSolution {
    pub eval: KernelEvaluator,
    pub schedule: BoundarySchedule,
    pub u0: InitialData,
    pub q: f64,
    pub dt: f64,
    pub elements: Vec<BoundaryRegion>,
    pub collocation: Vec<Vec<f64>>,
    /// `trace[k][e]` is `u` at the centroid of element `e` at time `k·dt`.
    pub trace: Vec<Vec<f64>>,
    /// Picard update sizes, one per sweep.
    pub residuals: Vec<f64>,
}

fn gl8() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(8))
}

fn gl16() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(16))
}

/// `(∫ (s − a)/Δ · S ds, ∫ (b − s)/Δ · S ds)` over the lag interval `[a, b]`,
/// integrated in `σ = √s`. The first interval is graded towards `s = 0`.
fn hat_moments<F: Fn(f64) -> f64>(a: f64, b: f64, s_fn: F) -> (f64, f64) {
    let width = b - a;
    let (lo, hi) = (a.sqrt(), b.sqrt());
    let breaks = if a == 0.0 {
        graded_breaks(hi, 0.5, 30)
    } else {
        vec![lo, 0.5 * (lo + hi), hi]
    };
    let mut rise = 0.0;
    let mut fall = 0.0;
    for w in breaks.windows(2) {
        for (sigma, wt) in gl8().scaled(w[0], w[1]) {
            let s = sigma * sigma;
            let v = wt * 2.0 * sigma * s_fn(s);
            rise += v * (s - a) / width;
            fall += v * (b - s) / width;
        }
    }
    (rise, fall)
}

/// Weights `W[j][k]` with `Σ_k W[j][k]·g_k = ∫₀^{t_j} Σ_k hat_k(τ) g_k S(t_j − τ, τ) dτ`.
enum Weights {
    /// Lag moments `(L_l, R_l)` when the region does not change in time.
    Convolution(Vec<(f64, f64)>),
    Full(Vec<Vec<f64>>),
}

impl Weights {
    fn get(&self, j: usize, k: usize) -> f64 {
        match self {
            Weights::Convolution(lag) => {
                let l = j - k;
                if j == 0 {
                    0.0
                } else if k == j {
                    lag[0].1
                } else if k == 0 {
                    lag[l].0
                } else {
                    lag[l].0 + lag[l].1
                }
            }
            Weights::Full(w) => w[j][k],
        }
    }
}

fn weights_for(
    sol_eval: &KernelEvaluator,
    schedule: &BoundarySchedule,
    element: &BoundaryRegion,
    x: &[f64],
    dt: f64,
    steps: usize,
    only_last: bool,
) -> Weights {
    if schedule.profile.is_constant() {
        let mut lag = vec![(0.0, 0.0); steps + 1];
        for m in 0..steps {
            let (rise, fall) = hat_moments(m as f64 * dt, (m + 1) as f64 * dt, |s| {
                region_integral(sol_eval, element, x, s)
            });
            lag[m].1 = fall;
            lag[m + 1].0 = rise;
        }
        return Weights::Convolution(lag);
    }
    let mut w = vec![vec![0.0; steps + 1]; steps + 1];
    let first = if only_last { steps } else { 1 };
    for j in first..=steps {
        let tj = j as f64 * dt;
        for l in 0..j {
            let (rise, fall) = hat_moments(l as f64 * dt, (l + 1) as f64 * dt, |s| {
                let tau = (tj - s).max(0.0);
                let region = schedule.arc_at(tau).map(|r| element.intersect(&r));
                region.map(|r| region_integral(sol_eval, &r, x, s)).unwrap_or(0.0)
            });
            // lag interval l is τ ∈ [t_{j−l−1}, t_{j−l}]
            let m = j - l - 1;
            w[j][m] += rise;
            w[j][m + 1] += fall;
        }
    }
    Weights::Full(w)
}

/// `∫_Ω N(x, y, t) u₀(y) dy`.
pub fn pure_diffusion(eval: &KernelEvaluator, u0: &InitialData, x: &[f64], t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::domain(format!("time must be nonnegative, got {t}")));
    }
    if !eval.domain.contains(x) {
        return Err(Error::domain("evaluation point outside the domain"));
    }
    Ok(diffuse(eval, u0, x, t))
}

fn axis_integral<F: Fn(f64) -> f64>(
    eval: &KernelEvaluator,
    axis: usize,
    x: f64,
    t: f64,
    a: f64,
    b: f64,
    g: F,
) -> f64 {
    let l = eval.lengths()[axis];
    let w = (140.0 * t).sqrt();
    let lo = a.max(x - w).max(0.0);
    let hi = b.min(x + w).min(l);
    // reflected peaks lie outside the window unless it already reaches the wall
    if hi <= lo {
        return 0.0;
    }
    let panels = ((hi - lo) / (1.5 * t.sqrt())).ceil().clamp(1.0, 16.0) as usize;
    gl16().composite(lo, hi, panels, |y| {
        interval_kernel_unchecked(x, y, t, l, &eval.truncation) * g(y)
    })
}

fn diffuse(eval: &KernelEvaluator, u0: &InitialData, x: &[f64], t: f64) -> f64 {
    let ls = eval.lengths();
    match u0 {
        InitialData::Constant { m0 } => *m0,
        _ if t == 0.0 => initial_value(eval, u0, x),
        InitialData::Cosine { m0, amp, k } => {
            let prod: f64 = (0..ls.len())
                .map(|i| {
                    let w = *k as f64 * std::f64::consts::PI / ls[i];
                    axis_integral(eval, i, x[i], t, 0.0, ls[i], |y| (w * y).cos())
                })
                .product();
            m0 * (1.0 - 0.5 * amp) + 0.5 * m0 * amp * prod
        }
        InitialData::Nodal { resolution, values } => {
            let n = *resolution;
            let per_axis: Vec<Vec<f64>> = (0..ls.len())
                .map(|i| {
                    let h = ls[i] / n as f64;
                    (0..=n)
                        .map(|node| {
                            let yc = node as f64 * h;
                            let left = if node > 0 {
                                axis_integral(eval, i, x[i], t, yc - h, yc, |y| (y - yc + h) / h)
                            } else {
                                0.0
                            };
                            let right = if node < n {
                                axis_integral(eval, i, x[i], t, yc, yc + h, |y| (yc + h - y) / h)
                            } else {
                                0.0
                            };
                            left + right
                        })
                        .collect()
                })
                .collect();
            let stride = n + 1;
            let mut acc = 0.0;
            for (idx, v) in values.iter().enumerate() {
                let mut w = *v;
                let mut rest = idx;
                for axis_w in &per_axis {
                    w *= axis_w[rest % stride];
                    rest /= stride;
                }
                acc += w;
            }
            acc
        }
    }
}

fn initial_value(eval: &KernelEvaluator, u0: &InitialData, x: &[f64]) -> f64 {
    if let Some(v) = u0.value(&eval.domain, x) {
        return v;
    }
    let InitialData::Nodal { resolution, values } = u0 else { return 0.0 };
    let n = *resolution;
    let ls = eval.lengths();
    let stride = n + 1;
    let dim = ls.len();
    let mut base = 0usize;
    let mut frac = vec![0.0; dim];
    let mut mul = 1usize;
    for i in 0..dim {
        let pos = (x[i] / ls[i] * n as f64).clamp(0.0, n as f64);
        let cell = (pos.floor() as usize).min(n - 1);
        frac[i] = pos - cell as f64;
        base += cell * mul;
        mul *= stride;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut idx = base;
        let mut m = 1usize;
        for (i, f) in frac.iter().enumerate() {
            if corner >> i & 1 == 1 {
                w *= f;
                idx += m;
            } else {
                w *= 1.0 - f;
            }
            m *= stride;
        }
        acc += w * values[idx];
    }
    acc
}

/// Picard iteration for the boundary trace up to `horizon`.
pub fn representation_solve(
    eval: &KernelEvaluator,
    u0: &InitialData,
    schedule: &BoundarySchedule,
    horizon: f64,
    q: f64,
    cfg: &RepresentationConfig,
) -> Result<RepresentationSolution> {
    u0.validate()?;
    if schedule.domain != eval.domain {
        return Err(Error::validation("schedule and kernel use different domains"));
    }
    if !(horizon > 0.0) || !(q > 0.0) || cfg.steps == 0 || cfg.elements == 0 {
        return Err(Error::validation("horizon, q, steps and elements must be positive"));
    }
    let steps = cfg.steps;
    let dt = horizon / steps as f64;
    let elements = schedule.initial.subdivide(cfg.elements);
    let face = schedule.initial.face();
    let collocation: Vec<Vec<f64>> = elements
        .iter()
        .filter_map(|e| {
            let c = e.centroid()?;
            eval.domain.face_point(face?, &c).ok()
        })
        .collect();
    let ne = elements.len();
    let base: Vec<Vec<f64>> = (0..=steps)
        .map(|k| {
            collocation.iter().map(|x| diffuse(eval, u0, x, k as f64 * dt)).collect()
        })
        .collect();
    let mut sol = RepresentationSolution {
        eval: eval.clone(),
        schedule: schedule.clone(),
        u0: u0.clone(),
        q,
        dt,
        elements: elements.clone(),
        collocation: collocation.clone(),
        trace: base.clone(),
        residuals: vec![],
    };
    if ne == 0 {
        return Ok(sol);
    }
    let weights: Vec<Vec<Weights>> = cfg.exec.map_slice(&collocation, |x| {
        elements.iter().map(|e| weights_for(eval, schedule, e, x, dt, steps, false)).collect()
    });
    let mut prev = f64::INFINITY;
    for iter in 0..cfg.max_iter {
        let g: Vec<Vec<f64>> =
            sol.trace.iter().map(|row| row.iter().map(|u| u.powf(q)).collect()).collect();
        let next: Vec<Vec<f64>> = (0..=steps)
            .map(|j| {
                (0..ne)
                    .map(|i| {
                        let mut acc = base[j][i];
                        for (e, w) in weights[i].iter().enumerate() {
                            for (k, gk) in g.iter().enumerate().take(j + 1) {
                                acc += w.get(j, k) * gk[e];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut res: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for (a, b) in next.iter().flatten().zip(sol.trace.iter().flatten()) {
            res = res.max((a - b).abs());
            scale = scale.max(a.abs());
        }
        sol.trace = next;
        sol.residuals.push(res);
        if !res.is_finite() || (res > prev && res > cfg.fixed_point_tol * scale) {
            return Err(Error::Convergence {
                horizon,
                detail: format!("Picard update grew from {prev:e} to {res:e} at sweep {iter}"),
            });
        }
        if res <= cfg.fixed_point_tol * scale {
            return Ok(sol);
        }
        prev = res;
    }
    Err(Error::Convergence {
        horizon,
        detail: format!("no convergence after {} sweeps, last update {prev:e}", cfg.max_iter),
    })
}

impl RepresentationSolution {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.trace.len() - 1) as f64
    }

    /// `u(x, horizon)` from one quadrature against the converged trace.
    pub fn evaluate(&self, points: &[Vec<f64>], exec: Execution) -> Vec<f64> {
        let steps = self.trace.len() - 1;
        let t = self.horizon();
        let g: Vec<Vec<f64>> =
            self.trace.iter().map(|row| row.iter().map(|u| u.powf(self.q)).collect()).collect();
        exec.map_slice(points, |x| {
            let mut acc = diffuse(&self.eval, &self.u0, x, t);
            for (e, element) in self.elements.iter().enumerate() {
                let w = weights_for(&self.eval, &self.schedule, element, x, self.dt, steps, true);
                for (k, gk) in g.iter().enumerate() {
                    acc += w.get(steps, k) * gk[e];
                }
            }
            acc
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_schedule, Anchor, DecayProfile, Domain};

    fn unit() -> KernelEvaluator {
        KernelEvaluator::new(Domain::unit_square()).unwrap()
    }

    #[test]
    fn insulated_constant_is_preserved() {
        let e = unit();
        let s = BoundarySchedule::insulated(e.domain);
        let sol = representation_solve(&e, &InitialData::constant(2.5), &s, 0.3, 2.0, &RepresentationConfig::default())
            .unwrap();
        let v = sol.evaluate(&[vec![0.2, 0.9], vec![1.0, 0.0]], Execution::Sequential);
        assert!(v.iter().all(|x| *x == 2.5));
    }

    #[test]
    fn cosine_diffusion_matches_modal_decay() {
        let e = unit();
        let u0 = InitialData::Cosine { m0: 1.0, amp: 0.5, k: 1 };
        for (x, t) in [([0.3, 0.8], 0.1), ([0.0, 0.5], 0.01), ([0.9, 0.1], 0.5)] {
            let num = pure_diffusion(&e, &u0, &x, t).unwrap();
            let decay = (-2.0 * std::f64::consts::PI.powi(2) * t).exp();
            let prod = (std::f64::consts::PI * x[0]).cos() * (std::f64::consts::PI * x[1]).cos();
            let exact = 0.75 + 0.25 * decay * prod;
            assert!((num - exact).abs() < 1e-10, "{num} vs {exact}");
        }
    }

    #[test]
    fn nodal_data_diffuses_like_its_interpolant() {
        let e = unit();
        let n = 16;
        let values: Vec<f64> = (0..(n + 1) * (n + 1)).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
        let u0 = InitialData::Nodal { resolution: n, values };
        let x = [0.37, 0.52];
        let mass = |t: f64| {
            let gl = GaussLegendre::new(8);
            gl.composite(0.0, 1.0, 16, |a| gl.composite(0.0, 1.0, 16, |b| pure_diffusion(&e, &u0, &[a, b], t).unwrap()))
        };
        // mass conservation against the t = 0 interpolant
        let m0 = mass(0.0);
        assert!((mass(0.05) - m0).abs() < 1e-6);
        assert!(pure_diffusion(&e, &u0, &x, 0.05).unwrap() > 1.0);
    }

    #[test]
    fn picard_contracts_for_short_horizon() {
        let e = unit();
        let s = make_schedule(e.domain, 0.2, DecayProfile::Constant, Anchor::Center).unwrap();
        let cfg = RepresentationConfig { elements: 8, steps: 20, ..Default::default() };
        let sol = representation_solve(&e, &InitialData::constant(1.0), &s, 0.02, 2.0, &cfg).unwrap();
        let r = &sol.residuals;
        assert!(r.windows(2).all(|w| w[1] <= w[0]));
        let last = sol.trace.last().unwrap();
        // the trace rises by about 2√(t/π) on the patch
        let mid = last[last.len() / 2];
        assert!(mid > 1.1 && mid < 1.25, "{mid}");
    }

    #[test]
    fn shrinking_path_reduces_to_convolution_for_slow_decay() {
        let e = unit();
        let fixed = make_schedule(e.domain, 0.2, DecayProfile::Constant, Anchor::Center).unwrap();
        let slow = make_schedule(e.domain, 0.2, DecayProfile::Exponential { rate: 1e-9 }, Anchor::Center)
            .unwrap();
        let cfg = RepresentationConfig { elements: 4, steps: 8, ..Default::default() };
        let u0 = InitialData::constant(1.0);
        let a = representation_solve(&e, &u0, &fixed, 0.01, 2.0, &cfg).unwrap();
        let b = representation_solve(&e, &u0, &slow, 0.01, 2.0, &cfg).unwrap();
        for (ra, rb) in a.trace.iter().zip(&b.trace) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn blows_past_contraction() {
        let e = unit();
        let s = make_schedule(e.domain, 0.9, DecayProfile::Constant, Anchor::Center).unwrap();
        let cfg = RepresentationConfig { elements: 4, steps: 10, max_iter: 50, ..Default::default() };
        let r = representation_solve(&e, &InitialData::constant(3.0), &s, 1.0, 3.0, &cfg);
        assert!(matches!(r, Err(Error::Convergence { .. })));
    }
}
