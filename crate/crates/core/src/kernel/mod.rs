//! Free-space and Neumann heat kernels on axis-aligned boxes.
//!
//! The interval kernel is evaluated either as a lattice of reflected
//! Gaussians (accurate for small `t`) or as a cosine series (accurate for
//! large `t`); box kernels are products of interval kernels.

mod bti;
mod representation;

pub use bti::{
    boundary_time_integral, calibrate_bti_constant, gaussian_domination, held_out_check,
    refine_calibration, sample_points, CalibrationResult, CalibrationSample, DominationResult,
    HeldOutCheck, SamplingPlan,
};
pub use representation::{
    pure_diffusion, representation_solve, RepresentationConfig, RepresentationSolution,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::numeric::half_erf_diff;

/// Default truncation tolerance for both series.
pub const DEFAULT_EPS: f64 = 1e-14;

/// Free heat kernel `(4πt)^(-n/2) exp(-|x|²/4t)`.
pub fn phi(x: &[f64], t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat kernel needs t > 0, got {t}")));
    }
    if n == 0 || x.len() != n {
        return Err(Error::domain(format!("offset has {} coordinates, expected {n}", x.len())));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((4.0 * PI * t).powf(-0.5 * n as f64) * (-r2 / (4.0 * t)).exp())
}

#[inline]
fn phi1(d: f64, t: f64) -> f64 {
    (-d * d / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Images,
    Eigen,
    /// Images for `t ≤ t_switch`, eigenfunctions otherwise.
    #[default]
    Auto,
}

/// Series truncation controls for one interval kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub method: Method,
    /// Size of the first omitted term when `terms` is not fixed.
    pub eps: f64,
    /// Fixed image count `K` or mode count `M`.
    pub terms: Option<usize>,
    /// Switch time for [`Method::Auto`]; `None` means `0.25·L²`.
    pub t_switch: Option<f64>,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { method: Method::Auto, eps: DEFAULT_EPS, terms: None, t_switch: None }
    }
}

impl Truncation {
    fn use_images(&self, t: f64, l: f64) -> bool {
        match self.method {
            Method::Images => true,
            Method::Eigen => false,
            Method::Auto => t <= self.t_switch.unwrap_or(0.25 * l * l),
        }
    }

    /// Images `|k| ≤ K` with the first omitted image at distance ≥ `2KL`
    /// beyond `√(4t ln(1/ε))`.
    fn image_count(&self, t: f64, l: f64) -> usize {
        self.terms.unwrap_or_else(|| {
            let reach = (4.0 * t * (1.0 / self.eps).ln()).sqrt();
            (reach / (2.0 * l)).ceil() as usize + 1
        })
    }

    /// Modes `m ≤ M` with `exp(-(Mπ/L)² t) < ε`.
    fn mode_count(&self, t: f64, l: f64) -> usize {
        self.terms.unwrap_or_else(|| {
            let m = l / PI * ((1.0 / self.eps).ln() / t).sqrt();
            (m.ceil() as usize).max(1)
        })
    }
}

/// 1D Neumann heat kernel on `[0, L]`.
pub fn interval_kernel(x: f64, y: f64, t: f64, l: f64, trunc: Truncation) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("interval kernel needs t > 0, got {t}")));
    }
    if !(l > 0.0) || !(0.0..=l).contains(&x) || !(0.0..=l).contains(&y) {
        return Err(Error::domain(format!("coordinates ({x}, {y}) outside [0, {l}]")));
    }
    Ok(interval_kernel_unchecked(x, y, t, l, &trunc))
}

pub(crate) fn interval_kernel_unchecked(x: f64, y: f64, t: f64, l: f64, tr: &Truncation) -> f64 {
    if tr.use_images(t, l) {
        let k_max = tr.image_count(t, l);
        let d = x - y;
        let s = x + y;
        // ±k paired so that swapping x and y permutes summands only
        let mut acc = phi1(d, t) + phi1(s, t);
        for k in 1..=k_max {
            let shift = 2.0 * k as f64 * l;
            acc += phi1(d - shift, t) + phi1(d + shift, t);
            acc += phi1(s - shift, t) + phi1(s + shift, t);
        }
        acc
    } else {
        let m_max = tr.mode_count(t, l);
        let w = PI / l;
        let mut acc = 0.0;
        for m in (1..=m_max).rev() {
            let mf = m as f64;
            acc += (mf * w * x).cos() * (mf * w * y).cos() * (-(mf * w).powi(2) * t).exp();
        }
        (1.0 + 2.0 * acc) / l
    }
}

/// `∫ₐᵇ N_L(x, y, t) dy` in closed form.
pub(crate) fn interval_integral(x: f64, a: f64, b: f64, t: f64, l: f64, tr: &Truncation) -> f64 {
    if b <= a {
        return 0.0;
    }
    if tr.use_images(t, l) {
        let k_max = tr.image_count(t, l) as i64;
        let r = 1.0 / (2.0 * t.sqrt());
        let mut acc = 0.0;
        for k in -k_max..=k_max {
            let c = 2.0 * k as f64 * l;
            acc += half_erf_diff((x - b - c) * r, (x - a - c) * r);
            acc += half_erf_diff((x + a - c) * r, (x + b - c) * r);
        }
        acc
    } else {
        let m_max = tr.mode_count(t, l);
        let w = PI / l;
        let mut acc = 0.0;
        for m in (1..=m_max).rev() {
            let mf = m as f64;
            let sines = (mf * w * b).sin() - (mf * w * a).sin();
            acc += (mf * w * x).cos() * sines / (mf * w) * (-(mf * w).powi(2) * t).exp();
        }
        (b - a + 2.0 * acc) / l
    }
}

/// Neumann heat kernel `N(x, y, t)` of a box, as a product of interval kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEvaluator {
    pub domain: Domain,
    pub truncation: Truncation,
}

impl KernelEvaluator {
    /// Evaluator with `t_switch = 0.25·L²_min`.
    pub fn new(domain: Domain) -> Result<Self> {
        let Some(ls) = domain.box_lengths() else {
            return Err(Error::UnsupportedDomain(
                "Neumann kernels are only available on boxes".into(),
            ));
        };
        domain.validate()?;
        let l_min = ls.iter().copied().fold(f64::INFINITY, f64::min);
        let truncation = Truncation { t_switch: Some(0.25 * l_min * l_min), ..Truncation::default() };
        Ok(Self { domain, truncation })
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.truncation.method = method;
        self
    }

    pub fn with_terms(mut self, terms: Option<usize>) -> Self {
        self.truncation.terms = terms;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.truncation.eps = eps;
        self
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.domain.box_lengths().unwrap_or_default()
    }

    /// `N(x, y, t)` with argument checks.
    pub fn eval(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("kernel needs t > 0, got {t}")));
        }
        if !self.domain.contains(x) || !self.domain.contains(y) {
            return Err(Error::domain("kernel arguments must lie in the closed box"));
        }
        Ok(self.eval_unchecked(x, y, t))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        let ls = self.lengths();
        let mut prod = 1.0;
        for i in 0..ls.len() {
            let xi = x[i].clamp(0.0, ls[i]);
            let yi = y[i].clamp(0.0, ls[i]);
            prod *= interval_kernel_unchecked(xi, yi, t, ls[i], &self.truncation);
        }
        prod
    }

    /// Green's function `G(x, t, y, s) = N(x, y, t − s)`.
    pub fn green(&self, x: &[f64], t: f64, y: &[f64], s: f64) -> Result<f64> {
        self.eval(x, y, t - s)
    }
}

/// `N(x, y, t)` for a box domain.
pub fn box_kernel(eval: &KernelEvaluator, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    eval.eval(x, y, t)
}
