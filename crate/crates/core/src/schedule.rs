//! Constant pipelines turning `(n, q, β, M₀, |Γ₁|[, B])` and a calibrated
//! kernel constant into an executable polynomial decay schedule.
//!
//! Two modes are supported. `Global` prevents blowup altogether with
//! logarithmic milestones `M_k = ln[(k+1)e]·M₀`. `Capped` keeps the
//! temperature below `B` with milestones `M_k = M₀ Σ_{m≤k} 1/((1+m)(1+λ_B m)^s)`
//! where `g_s(λ_B) = B/M₀`.
//!
//! `λ_B` spans hundreds of orders of magnitude over `B/M₀ ∈ (1, 10⁶]`, so it
//! is handled as `ln λ_B` throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_schedule, Anchor, BoundarySchedule, DecayProfile, Domain};
use crate::numeric::{CompensatedSum, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Global,
    Capped,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Mode::Global),
            "capped" => Ok(Mode::Capped),
            other => Err(Error::Config(format!("unknown schedule mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Global => "global",
            Mode::Capped => "capped",
        })
    }
}

/// Inputs of [`build_constants`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub mode: Mode,
    pub n: usize,
    pub q: f64,
    pub beta: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    pub gamma1_area: f64,
    /// Temperature cap, capped mode only.
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub c_hat: f64,
    /// Replaces the midpoint choice of `alpha`; must stay inside the open
    /// admissible interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_override: Option<f64>,
    /// Replaces the midpoint choice of `s` (capped mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_override: Option<f64>,
}

impl ScheduleParams {
    pub fn global(n: usize, q: f64, beta: f64, m0: f64, gamma1_area: f64, c_hat: f64) -> Self {
        Self {
            mode: Mode::Global,
            n,
            q,
            beta,
            m0,
            gamma1_area,
            b: None,
            c_hat,
            alpha_override: None,
            s_override: None,
        }
    }

    pub fn capped(n: usize, q: f64, beta: f64, m0: f64, gamma1_area: f64, b: f64, c_hat: f64) -> Self {
        Self { mode: Mode::Capped, b: Some(b), ..Self::global(n, q, beta, m0, gamma1_area, c_hat) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstants {
    pub mode: Mode,
    pub n: usize,
    pub q: f64,
    pub beta: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    pub gamma1_area: f64,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub s: Option<f64>,
    #[serde(rename = "lambda_B")]
    pub lambda_b: Option<f64>,
    #[serde(rename = "ln_lambda_B")]
    pub ln_lambda_b: Option<f64>,
    #[serde(rename = "Y")]
    pub y: f64,
    pub t_star: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C_star")]
    pub c_star: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
}

impl ScheduleConstants {
    /// `f(t) = (1 + C*·t)^(−β)`.
    pub fn profile(&self) -> Result<DecayProfile> {
        DecayProfile::polynomial(self.c_star, self.beta)
    }

    pub fn schedule(&self, domain: Domain, anchor: Anchor) -> Result<BoundarySchedule> {
        if domain.dimension() != self.n {
            return Err(Error::validation(format!(
                "constants were built for n = {} but the domain has dimension {}",
                self.n,
                domain.dimension()
            )));
        }
        make_schedule(domain, self.gamma1_area, self.profile()?, anchor)
    }

    /// `C₂ (C*·t*)^{βα} / Y − t*^{α̃}` divided by `t*^{α̃}`; non-negative
    /// whenever the induction step closes.
    pub fn induction_margin(&self) -> f64 {
        let ba = self.beta * self.alpha;
        let lhs = self.c2.ln() + ba * (self.c_star.ln() + self.t_star.ln()) - self.y.ln();
        let rhs = self.alpha_tilde * self.t_star.ln();
        (lhs - rhs).exp_m1()
    }

    pub fn milestones(&self, k_max: usize) -> Result<MilestoneSequence> {
        match self.mode {
            Mode::Global => Ok(milestones_global(self.m0, k_max)),
            Mode::Capped => milestones_capped(
                self.m0,
                self.ln_lambda_b.unwrap_or(f64::NEG_INFINITY),
                self.s.unwrap_or(0.0),
                k_max,
            ),
        }
    }
}

/// `ln(1 + eˣ)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `(s)_k = s(s+1)…(s+k−1)`.
fn rising(s: f64, k: usize) -> f64 {
    (0..k).map(|i| s + i as f64).product()
}

fn binomial(k: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, j| acc * (k - j) as f64 / (j + 1) as f64)
}

/// Terms of `g_s` and their derivatives, parametrised by `ln λ`.
#[derive(Debug, Clone, Copy)]
struct Series {
    ln_lambda: f64,
    s: f64,
}

impl Series {
    fn new(ln_lambda: f64, s: f64) -> Self {
        Self { ln_lambda, s }
    }

    /// `ln(1 + λx)` for `x > 0`.
    fn ln_one_plus(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            softplus(self.ln_lambda + x.ln())
        }
    }

    fn term(&self, x: f64) -> f64 {
        (-x.ln_1p() - self.s * self.ln_one_plus(x)).exp()
    }

    /// `f⁽ᵏ⁾(x)` via Leibniz on `(1+x)^{-1}` and `(1+λx)^{-s}`.
    fn derivative(&self, x: f64, k: usize) -> f64 {
        let l1 = x.ln_1p();
        let l2 = self.ln_one_plus(x);
        let mut acc = 0.0;
        for i in 0..=k {
            let j = (k - i) as f64;
            let ln_mag = -(1.0 + i as f64) * l1 + j * self.ln_lambda - (self.s + j) * l2;
            acc += binomial(k, i) * rising(1.0, i) * rising(self.s, k - i) * ln_mag.exp();
        }
        if k % 2 == 1 {
            -acc
        } else {
            acc
        }
    }

    /// `∫_N^∞ f(x) dx` in the variable `u = ln(1+x)`, where the integrand
    /// is `(1 + λ(eᵘ − 1))^{−s}`.
    fn tail_integral(&self, n: f64) -> f64 {
        // ln(λ(eᵘ − 1)) stays finite when λ underflows
        let h = |u: f64| (-self.s * softplus(self.ln_lambda + u + (-(-u).exp_m1()).ln())).exp();
        let u0 = n.ln_1p();
        // below u_a the integrand is 1 − sλeᵘ to within e⁻⁷⁴
        let u_a = u0.max(-self.ln_lambda - 37.0);
        let mut total = CompensatedSum::new();
        if u_a > u0 {
            total.add(u_a - u0);
            total.add(-self.s * ((self.ln_lambda + u_a).exp() - (self.ln_lambda + u0).exp()));
        }
        let gl = GaussLegendre::new(16);
        let width = 0.5;
        let mut a = u_a;
        loop {
            let piece = gl.integrate(a, a + width, h);
            total.add(piece);
            a += width;
            let ha = h(a);
            if ha / self.s <= 1e-17 * total.value() {
                // eventually h ~ (λeᵘ)^{−s}
                total.add(ha / self.s);
                break;
            }
        }
        total.value()
    }
}

/// Remainder bound of the three-term Euler–Maclaurin tail at `N`, from
/// `|f⁽ᵏ⁾(x)| ≤ f(x)·(1+s)_k / xᵏ`.
fn euler_maclaurin_bound(series: &Series, n: f64) -> f64 {
    let zeta6 = PI.powi(6) / 945.0;
    2.0 * zeta6 / (2.0 * PI).powi(6) * series.term(n) * rising(1.0 + series.s, 5) / n.powi(5)
}

/// How the infinite tail of `g_s` is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStrategy {
    /// Short direct sum plus the Euler–Maclaurin expansion of the tail with
    /// a certified remainder bound.
    #[default]
    EulerMaclaurin,
    /// Direct summation until `f(N) < tol`; the tail lies in
    /// `[∫_N^∞ f, ∫_N^∞ f + f(N)]` and the midpoint is used.
    IntegralBound,
}

const MAX_DIRECT_TERMS: usize = 50_000_000;

/// `g_s(λ) = Σ_{m≥0} 1/((1+m)(1+λm)^s)`.
pub fn g_s(lambda: f64, s: f64, tol: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("g_s needs lambda > 0, got {lambda}")));
    }
    g_s_ln(lambda.ln(), s, tol, TailStrategy::EulerMaclaurin)
}

/// `g_s` at `λ = exp(ln_lambda)`.
pub fn g_s_ln(ln_lambda: f64, s: f64, tol: f64, strategy: TailStrategy) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("g_s diverges for s = {s} <= 0")));
    }
    if !(tol > 0.0) || ln_lambda.is_nan() {
        return Err(Error::domain("g_s needs a finite ln lambda and tol > 0"));
    }
    let series = Series::new(ln_lambda, s);
    match strategy {
        TailStrategy::EulerMaclaurin => {
            let mut n = 16usize;
            while euler_maclaurin_bound(&series, n as f64) > 0.25 * tol {
                n *= 2;
                if n > MAX_DIRECT_TERMS {
                    return Err(Error::domain("g_s tail bound did not reach tolerance"));
                }
            }
            let mut sum = CompensatedSum::new();
            for m in (0..n).rev() {
                sum.add(series.term(m as f64));
            }
            let x = n as f64;
            sum.add(series.tail_integral(x));
            sum.add(0.5 * series.term(x));
            // B₂/2!, B₄/4!, B₆/6!
            sum.add(-series.derivative(x, 1) / 12.0);
            sum.add(series.derivative(x, 3) / 720.0);
            sum.add(-series.derivative(x, 5) / 30240.0);
            Ok(sum.value())
        }
        TailStrategy::IntegralBound => {
            let mut sum = CompensatedSum::new();
            let mut m = 0usize;
            loop {
                let f = series.term(m as f64);
                if f < tol {
                    break;
                }
                sum.add(f);
                m += 1;
                if m > MAX_DIRECT_TERMS {
                    return Err(Error::domain(format!(
                        "direct summation of g_s needs more than {MAX_DIRECT_TERMS} terms"
                    )));
                }
            }
            let x = m as f64;
            sum.add(series.tail_integral(x) + 0.5 * series.term(x));
            Ok(sum.value())
        }
    }
}

/// `ln λ_B` with `g_s(λ_B) = B/M₀`, by bracketing from `λ = 1` and bisecting
/// in `ln λ` until the residual is below `tol`.
pub fn ln_lambda_b(b: f64, m0: f64, s: f64, tol: f64) -> Result<f64> {
    if !(m0 > 0.0) || !(b > m0) || !b.is_finite() {
        return Err(Error::domain(format!("lambda_B needs B > M0 > 0, got B = {b}, M0 = {m0}")));
    }
    let target = b / m0;
    let tol = tol.max(4.0 * f64::EPSILON * target);
    let g = |l: f64| g_s_ln(l, s, 0.1 * tol, TailStrategy::EulerMaclaurin);
    let step = std::f64::consts::LN_2;
    let (mut lo, mut hi) = (0.0, 0.0);
    if g(0.0)? > target {
        // g_s is decreasing; move right until below the target
        while g(hi)? > target {
            lo = hi;
            hi += step * (1.0 + hi.abs() / 8.0);
        }
    } else {
        while g(lo)? < target {
            hi = lo;
            lo -= step * (1.0 + lo.abs() / 8.0);
            if lo < -1e9 {
                return Err(Error::domain("lambda_B bracket search underflowed"));
            }
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let r = g(mid)? - target;
        if r.abs() < tol || hi - lo <= 1e-15 * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn lambda_b(b: f64, m0: f64, s: f64, tol: f64) -> Result<f64> {
    ln_lambda_b(b, m0, s, tol).map(f64::exp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilestoneSequence {
    pub mode: Mode,
    #[serde(rename = "M0")]
    pub m0: f64,
    #[serde(rename = "ln_lambda_B")]
    pub ln_lambda_b: Option<f64>,
    pub s: Option<f64>,
    /// `values[k] = M_k`, `k = 0..=k_max`.
    pub values: Vec<f64>,
}

impl MilestoneSequence {
    /// Smallest `k` with `M_k > m`, if within the computed range.
    pub fn index_above(&self, m: f64) -> Option<usize> {
        let k = self.values.partition_point(|&v| v <= m);
        (k < self.values.len()).then_some(k)
    }
}

pub fn milestones(params: &ScheduleParams, k_max: usize) -> Result<MilestoneSequence> {
    match params.mode {
        Mode::Global => Ok(milestones_global(params.m0, k_max)),
        Mode::Capped => {
            let (s, ln_lam) = capped_series(params)?;
            milestones_capped(params.m0, ln_lam, s, k_max)
        }
    }
}

fn milestones_global(m0: f64, k_max: usize) -> MilestoneSequence {
    MilestoneSequence {
        mode: Mode::Global,
        m0,
        ln_lambda_b: None,
        s: None,
        values: (0..=k_max).map(|k| (1.0 + (k as f64).ln_1p()) * m0).collect(),
    }
}

fn milestones_capped(m0: f64, ln_lambda: f64, s: f64, k_max: usize) -> Result<MilestoneSequence> {
    let series = Series::new(ln_lambda, s);
    let mut sum = CompensatedSum::new();
    let values = (0..=k_max)
        .map(|m| {
            sum.add(series.term(m as f64));
            m0 * sum.value()
        })
        .collect();
    Ok(MilestoneSequence { mode: Mode::Capped, m0, ln_lambda_b: Some(ln_lambda), s: Some(s), values })
}

/// `(α, α̃, s)` of the mode, honouring overrides.
pub fn exponents(params: &ScheduleParams) -> Result<(f64, f64, Option<f64>)> {
    let n1 = params.n as f64 - 1.0;
    let beta = params.beta;
    match params.mode {
        Mode::Global => {
            let alpha = params.alpha_override.unwrap_or(0.5 * (1.0 / beta + 1.0 / n1));
            if !(alpha > 1.0 / beta && alpha < 1.0 / n1) {
                return Err(Error::domain(format!("alpha {alpha} outside (1/beta, 1/(n-1))")));
            }
            Ok((alpha, 0.5 * (1.0 - n1 * alpha), None))
        }
        Mode::Capped => {
            let s = params.s_override.unwrap_or(0.5 * (beta / n1 - 1.0));
            if !(s > 0.0 && s < beta / n1 - 1.0) {
                return Err(Error::domain(format!("s {s} outside (0, beta/(n-1) - 1)")));
            }
            let alpha = params.alpha_override.unwrap_or(0.5 * ((1.0 + s) / beta + 1.0 / n1));
            if !(alpha > (1.0 + s) / beta && alpha < 1.0 / n1) {
                return Err(Error::domain(format!("alpha {alpha} outside ((1+s)/beta, 1/(n-1))")));
            }
            Ok((alpha, 0.5 * (1.0 - n1 * alpha), Some(s)))
        }
    }
}

fn capped_series(params: &ScheduleParams) -> Result<(f64, f64)> {
    validate(params)?;
    let (_, _, s) = exponents(params)?;
    let s = s.unwrap_or_default();
    let b = params.b.ok_or_else(|| Error::validation("capped mode needs B"))?;
    Ok((s, ln_lambda_b(b, params.m0, s, 1e-12)?))
}

fn validate(params: &ScheduleParams) -> Result<()> {
    let n1 = params.n as f64 - 1.0;
    if !(2..=3).contains(&params.n) {
        return Err(Error::validation(format!("n must be 2 or 3, got {}", params.n)));
    }
    if !(params.beta > n1) {
        return Err(Error::Hypothesis(format!(
            "beta has to be chosen greater than n - 1 = {n1}, got {}",
            params.beta
        )));
    }
    if !(params.q > 1.0) {
        return Err(Error::validation(format!("q must exceed 1, got {}", params.q)));
    }
    for (name, v) in [("M0", params.m0), ("gamma1_area", params.gamma1_area), ("C_hat", params.c_hat)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::validation(format!("{name} must be positive and finite, got {v}")));
        }
    }
    match (params.mode, params.b) {
        (Mode::Capped, None) => Err(Error::validation("capped mode needs B")),
        (Mode::Capped, Some(b)) if !(b > params.m0) => {
            Err(Error::domain(format!("B = {b} must exceed M0 = {}", params.m0)))
        }
        _ => Ok(()),
    }
}

/// `ln` of the sequence whose infimum over `j ≥ 1` enters `C₂`:
/// `j^{βα} ln((j+2)/(j+1)) / ln^q[(j+2)e]` (global) or
/// `j^{βα} / (ln^q[(j+2)e] (j+2)^{1+s})` (capped), at `j = e^{ln_j}`.
pub fn ln_induction_sequence(mode: Mode, beta_alpha: f64, q: f64, s: f64, ln_j: f64) -> f64 {
    let e = (-ln_j).exp();
    let ln_j1 = ln_j + e.ln_1p();
    let ln_j2 = ln_j + (2.0 * e).ln_1p();
    let head = beta_alpha * ln_j - q * ln_j2.ln_1p();
    match mode {
        Mode::Global => {
            let x = (-ln_j1).exp();
            let ln_step = if x > 1e-300 { x.ln_1p().ln() } else { -ln_j1 };
            head + ln_step
        }
        Mode::Capped => head - (1.0 + s) * ln_j2,
    }
}

/// `ln inf_{j≥1}` of [`ln_induction_sequence`], taken over real `j`, which
/// bounds the integer infimum from below.
fn ln_induction_infimum(mode: Mode, beta_alpha: f64, q: f64, s: f64) -> f64 {
    let f = |l: f64| ln_induction_sequence(mode, beta_alpha, q, s, l);
    let gain = match mode {
        Mode::Global => beta_alpha - 1.0,
        Mode::Capped => beta_alpha - 1.0 - s,
    };
    // asymptotic minimiser of j^gain / ln^q j sits at ln j = q / gain
    let top = (4.0 * q / gain).max(20.0);
    let grid = 4000;
    let (mut best, mut best_i) = (f64::INFINITY, 0);
    for i in 0..=grid {
        let v = f(top * i as f64 / grid as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let h = top / grid as f64;
    let (mut a, mut b) = (((best_i as f64) - 1.0).max(0.0) * h, ((best_i + 1) as f64).min(grid as f64) * h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(f(0.5 * (a + b))).min(f(a)).min(f(b))
}

/// The full constant pipeline of one mode.
pub fn build_constants(params: &ScheduleParams) -> Result<ScheduleConstants> {
    validate(params)?;
    let (alpha, alpha_tilde, s) = exponents(params)?;
    let q = params.q;
    let ba = params.beta * alpha;
    let ln_c = params.c_hat.ln();
    let ln_y = (q - 1.0) * params.m0.ln() + alpha * params.gamma1_area.ln();
    let (ln_c1, ln_c2, ln_lambda) = match params.mode {
        Mode::Global => {
            let ln_c1 = (std::f64::consts::LN_2.ln() - ln_c - q * (1.0 + std::f64::consts::LN_2).ln())
                / alpha_tilde;
            let ln_c2 = ln_induction_infimum(Mode::Global, ba, q, 0.0) - ln_c;
            (ln_c1, ln_c2, None)
        }
        Mode::Capped => {
            let s = s.unwrap_or_default();
            let (_, ln_lam) = capped_series(params)?;
            // ln(1 + λ_B)
            let l1 = softplus(ln_lam);
            let ln_c1 = ((q - 1.0) * std::f64::consts::LN_2 - ln_c + (q - 1.0) * s * l1
                - q * softplus(std::f64::consts::LN_2 + s * l1))
                / alpha_tilde;
            let ln_c2 = ln_induction_infimum(Mode::Capped, ba, q, s) - ln_c - s * l1;
            (ln_c1, ln_c2, Some(ln_lam))
        }
    };
    let ln_t_star = (ln_c1 - ln_y / alpha_tilde).min(0.0);
    let ln_c3 = -ln_c2 / ba + ((alpha_tilde / ba - 1.0) * ln_c1).max(0.0);
    let ln_c_star = ln_c3 + (ln_y / ba).max(ln_y / alpha_tilde);
    Ok(ScheduleConstants {
        mode: params.mode,
        n: params.n,
        q,
        beta: params.beta,
        m0: params.m0,
        gamma1_area: params.gamma1_area,
        b: if params.mode == Mode::Capped { params.b } else { None },
        alpha,
        alpha_tilde,
        s,
        lambda_b: ln_lambda.map(f64::exp),
        ln_lambda_b: ln_lambda,
        y: ln_y.exp(),
        t_star: ln_t_star.exp(),
        c1: ln_c1.exp(),
        c2: ln_c2.exp(),
        c3: ln_c3.exp(),
        c_star: ln_c_star.exp(),
        c_hat: params.c_hat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndBehaviorReport {
    /// `(B/M₀, C_B*)` in sweep order.
    pub points: Vec<(f64, f64)>,
    /// `C_B*` never increases along the sweep; once `1 + λ_B` rounds to 1 the
    /// values coincide exactly.
    pub decreasing: bool,
    /// `C_B*` at the two largest `B`, larger over smaller.
    pub plateau_ratio: f64,
    /// `C_B*` at the smallest `B` over `C_B*` at `B = 2M₀` (if swept).
    pub divergence_ratio: Option<f64>,
}

/// `B/M₀` values spanning `(1, 10⁶]`.
pub fn default_b_sweep() -> Vec<f64> {
    vec![1.0 + 1e-6, 1.0 + 1e-4, 1.01, 1.1, 1.5, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6]
}

/// Sweep `C_B*` over `B = ratio·M₀` for the capped pipeline of `base`.
pub fn verify_schedule_end_behavior(base: &ScheduleParams, ratios: &[f64]) -> Result<EndBehaviorReport> {
    if ratios.len() < 2 {
        return Err(Error::validation("end-behaviour sweep needs at least two B values"));
    }
    let mut points = Vec::with_capacity(ratios.len());
    for &r in ratios {
        let p = ScheduleParams { mode: Mode::Capped, b: Some(r * base.m0), ..base.clone() };
        points.push((r, build_constants(&p)?.c_star));
    }
    let decreasing = points.windows(2).all(|w| w[1].1 <= w[0].1);
    let k = points.len();
    let plateau_ratio = points[k - 2].1 / points[k - 1].1;
    let divergence_ratio =
        points.iter().find(|(r, _)| *r == 2.0).map(|(_, c2m)| points[0].1 / c2m);
    Ok(EndBehaviorReport { points, decreasing, plateau_ratio, divergence_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn midpoint_exponents_match_hand_values() {
        // (n, beta, global α, α̃, capped s, α, α̃)
        let table = [
            (2, 2.0, 0.75, 0.125, 0.5, 0.875, 0.0625),
            (3, 3.0, 5.0 / 12.0, 1.0 / 12.0, 0.25, 11.0 / 24.0, 1.0 / 24.0),
            (3, 4.0, 0.375, 0.125, 0.5, 7.0 / 16.0, 1.0 / 16.0),
        ];
        for (n, beta, ga, gat, cs, ca, cat) in table {
            let g = ScheduleParams::global(n, 2.0, beta, 1.0, 0.1, 1.0);
            let (a, at, _) = exponents(&g).unwrap();
            assert!((a - ga).abs() <= 1e-14 && (at - gat).abs() <= 1e-14);
            // closed forms of α̃ in terms of β alone
            let n1 = n as f64 - 1.0;
            assert!((at - 0.25 * (1.0 - n1 / beta)).abs() <= 1e-14);
            let c = ScheduleParams::capped(n, 2.0, beta, 1.0, 0.1, 5.0, 1.0);
            let (a, at, s) = exponents(&c).unwrap();
            assert!((s.unwrap() - cs).abs() <= 1e-14);
            assert!((a - ca).abs() <= 1e-14 && (at - cat).abs() <= 1e-14);
            assert!((a - 0.25 * (1.0 / beta + 3.0 / n1)).abs() <= 1e-14);
            assert!((at - 0.125 * (1.0 - n1 / beta)).abs() <= 1e-14);
        }
    }

    #[test]
    fn g_s_limits_and_monotonicity() {
        assert!((g_s(1e12, 0.5, 1e-12).unwrap() - 1.0) < 1e-5);
        let a = g_s(0.5, 0.5, 1e-10).unwrap();
        let b = g_s(2.0, 0.5, 1e-10).unwrap();
        assert!(a > b && b > 1.0);
        assert!(matches!(g_s(1.0, 0.0, 1e-8), Err(Error::Domain(_))));
        assert!(matches!(g_s(1.0, -1.0, 1e-8), Err(Error::Domain(_))));
        assert!(g_s(0.0, 0.5, 1e-8).is_err());
    }

    #[test]
    fn tail_strategies_agree() {
        for (lam, s) in [(1.0, 0.5), (0.1, 0.25), (10.0, 1.0), (1e-3, 0.5)] {
            let em = g_s_ln(f64::ln(lam), s, 1e-8, TailStrategy::EulerMaclaurin).unwrap();
            let ib = g_s_ln(f64::ln(lam), s, 1e-8, TailStrategy::IntegralBound).unwrap();
            assert!((em - ib).abs() < 1e-7, "λ={lam} s={s}: {em} vs {ib}");
        }
    }

    #[test]
    fn g_s_matches_brute_force_sum() {
        // s = 2 converges fast enough for a plain 10⁶-term sum
        let brute: f64 = (0..1_000_000u64)
            .rev()
            .map(|m| 1.0 / ((1.0 + m as f64) * (1.0 + 0.7 * m as f64).powi(2)))
            .sum();
        let tail_bound = 1.0 / (0.7f64.powi(2) * 2.0 * 1e12);
        assert!((g_s(0.7, 2.0, 1e-12).unwrap() - brute).abs() < 1e-11 + tail_bound);
    }

    #[test]
    fn lambda_b_round_trip_and_end_behavior() {
        for r in [1.01, 2.0, 10.0, 100.0] {
            let l = ln_lambda_b(r, 1.0, 0.5, 1e-9).unwrap();
            let g = g_s_ln(l, 0.5, 1e-10, TailStrategy::EulerMaclaurin).unwrap();
            assert!((g - r).abs() < 1e-8, "B/M0={r}: {g}");
        }
        assert!(lambda_b(1.0 + 1e-9, 1.0, 0.5, 1e-12).unwrap() > 1e6);
        assert!(ln_lambda_b(1e3, 1.0, 0.5, 1e-8).unwrap() < -100.0);
        assert!(matches!(lambda_b(1.0, 1.0, 0.5, 1e-8), Err(Error::Domain(_))));
    }

    #[test]
    fn milestone_sequences() {
        let g = milestones(&ScheduleParams::global(2, 2.0, 2.0, 3.0, 0.1, 1.0), 5).unwrap();
        assert_eq!(g.values[0], 3.0);
        assert!(rel(g.values[1], (2.0 * std::f64::consts::E).ln() * 3.0) < 1e-15);
        let p = ScheduleParams::capped(2, 2.0, 2.0, 1.0, 0.1, 5.0, 1.0);
        let c = milestones(&p, 100_000).unwrap();
        assert!(c.values.windows(2).all(|w| w[1] > w[0]));
        assert!(c.values.iter().all(|&v| v < 5.0));
        let gaps: Vec<f64> = c.values.iter().map(|v| 5.0 - v).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(c.index_above(1.0), Some(1));
    }

    #[test]
    fn hypothesis_and_parameter_errors() {
        let bad = ScheduleParams::global(2, 2.0, 1.0, 1.0, 0.1, 1.0);
        assert!(matches!(build_constants(&bad), Err(Error::Hypothesis(_))));
        let bad = ScheduleParams::global(3, 2.0, 1.5, 1.0, 0.1, 1.0);
        assert!(matches!(build_constants(&bad), Err(Error::Hypothesis(_))));
        let bad = ScheduleParams::capped(2, 2.0, 2.0, 1.0, 0.1, 0.5, 1.0);
        assert!(matches!(build_constants(&bad), Err(Error::Domain(_))));
        let mut p = ScheduleParams::global(2, 2.0, 2.0, 1.0, 0.1, 1.0);
        p.alpha_override = Some(0.4);
        assert!(build_constants(&p).is_err());
        p.alpha_override = Some(0.6);
        assert!((build_constants(&p).unwrap().alpha_tilde - 0.2).abs() < 1e-15);
    }

    #[test]
    fn unit_y_gives_c_star_equal_c3() {
        for mode in [Mode::Global, Mode::Capped] {
            let mut p = ScheduleParams::capped(2, 2.0, 2.0, 1.0, 1.0, 5.0, 3.0);
            p.mode = mode;
            let c = build_constants(&p).unwrap();
            assert!((c.y - 1.0).abs() < 1e-15);
            assert!(rel(c.c_star, c.c3) < 1e-13);
        }
    }

    #[test]
    fn capped_c1_matches_formula() {
        let p = ScheduleParams::capped(2, 2.0, 2.0, 1.0, 0.1, 5.0, 4.0);
        let c = build_constants(&p).unwrap();
        let (q, s, lam) = (2.0f64, 0.5f64, c.lambda_b.unwrap());
        let direct = (2f64.powf(q - 1.0) / 4.0 * (1.0 + lam).powf((q - 1.0) * s)
            / (1.0 + 2.0 * (1.0 + lam).powf(s)).powf(q))
        .powf(1.0 / c.alpha_tilde);
        assert!(rel(c.c1, direct) < 1e-12);
        // Y and t* by direct substitution
        assert!(rel(c.y, 0.1f64.powf(0.875)) < 1e-14);
        assert!(rel(c.t_star, (c.c1 * c.y.powf(-1.0 / c.alpha_tilde)).min(1.0)) < 1e-12);
        let g = build_constants(&ScheduleParams::global(2, 2.0, 2.0, 1.0, 0.1, 4.0)).unwrap();
        let direct = (2f64.ln() / (4.0 * (2.0 * std::f64::consts::E).ln().powi(2))).powf(8.0);
        assert!(rel(g.c1, direct) < 1e-12);
    }

    #[test]
    fn c2_is_below_the_integer_infimum() {
        for (mode, n, beta) in [(Mode::Global, 2, 2.0), (Mode::Capped, 2, 2.0), (Mode::Global, 3, 4.0)] {
            let mut p = ScheduleParams::capped(n, 2.0, beta, 1.0, 0.1, 5.0, 1.0);
            p.mode = mode;
            let c = build_constants(&p).unwrap();
            let ba = c.beta * c.alpha;
            let s = c.s.unwrap_or(0.0);
            let scale = match mode {
                Mode::Global => 1.0,
                Mode::Capped => (1.0 + c.lambda_b.unwrap()).powf(-s),
            };
            let min_int = (1..200_000)
                .map(|j| ln_induction_sequence(mode, ba, 2.0, s, (j as f64).ln()).exp())
                .fold(f64::INFINITY, f64::min);
            assert!(c.c2 <= min_int * scale * (1.0 + 1e-12));
            assert!(c.c2 >= 0.999 * min_int * scale);
        }
    }

    #[test]
    fn induction_step_closes() {
        for (n, beta) in [(2, 2.0), (2, 3.0), (3, 3.0), (3, 4.0)] {
            for (m0, area) in [(1.0, 0.1), (2.0, 0.5), (0.5, 2.0)] {
                for p in [
                    ScheduleParams::global(n, 2.0, beta, m0, area, 5.0),
                    ScheduleParams::capped(n, 2.0, beta, m0, area, 5.0 * m0, 5.0),
                ] {
                    let c = build_constants(&p).unwrap();
                    assert!(c.t_star > 0.0 && c.t_star <= 1.0);
                    assert!(c.induction_margin() >= -1e-12, "{p:?}: {}", c.induction_margin());
                }
            }
        }
    }

    #[test]
    fn c_star_grows_with_y() {
        let base = build_constants(&ScheduleParams::global(2, 2.0, 2.0, 1.0, 0.1, 2.0)).unwrap();
        let bigger_m0 = build_constants(&ScheduleParams::global(2, 2.0, 2.0, 1.5, 0.1, 2.0)).unwrap();
        let bigger_area = build_constants(&ScheduleParams::global(2, 2.0, 2.0, 1.0, 0.3, 2.0)).unwrap();
        assert!(bigger_m0.c_star > base.c_star && bigger_area.c_star > base.c_star);
    }

    #[test]
    fn capped_end_behavior() {
        let base = ScheduleParams::capped(2, 2.0, 2.0, 1.0, 0.1, 5.0, 5.0);
        let rep = verify_schedule_end_behavior(&base, &default_b_sweep()).unwrap();
        assert!(rep.decreasing, "{:?}", rep.points);
        assert!((rep.plateau_ratio - 1.0).abs() <= 0.01);
        assert!(rep.divergence_ratio.unwrap() > 1e3);
        let c2 = rep.points.iter().find(|p| p.0 == 2.0).unwrap().1;
        let c10 = rep.points.iter().find(|p| p.0 == 10.0).unwrap().1;
        assert!(c2 > c10);
    }

    fn induction_case(mode: Mode, n: usize, beta: f64, q: f64) -> impl Fn(f64) -> f64 {
        let mut p = ScheduleParams::capped(n, q, beta, 1.0, 0.1, 5.0, 1.0);
        p.mode = mode;
        let (alpha, _, s) = exponents(&p).unwrap();
        let s = s.unwrap_or(0.0);
        move |ln_j| ln_induction_sequence(mode, beta * alpha, q, s, ln_j)
    }

    #[test]
    fn divergence_facts() {
        let global = [(2, 2.0, 1.5), (2, 2.0, 2.0), (2, 2.0, 3.0), (2, 3.0, 2.0), (3, 3.0, 1.5), (3, 3.0, 2.0), (3, 4.0, 2.0), (3, 4.0, 3.0)];
        let capped = [(2, 2.0, 1.5), (2, 2.0, 2.0), (2, 3.0, 2.0), (2, 3.0, 3.0), (3, 4.0, 1.5), (3, 4.0, 2.0)];
        for (mode, cases) in [(Mode::Global, &global[..]), (Mode::Capped, &capped[..])] {
            for &(n, beta, q) in cases {
                let f = induction_case(mode, n, beta, q);
                assert!(f(1e6f64.ln()) > f(1e3f64.ln()), "{mode} n={n} beta={beta} q={q}");
            }
        }
    }

    #[test]
    fn slow_cases_diverge_past_their_minimiser() {
        // still decreasing at j = 10⁶; the minimiser sits near ln j = q/gain
        let slow = [(Mode::Global, 3, 3.0, 3.0), (Mode::Capped, 2, 2.0, 3.0), (Mode::Capped, 3, 3.0, 2.0), (Mode::Capped, 3, 4.0, 3.0)];
        for (mode, n, beta, q) in slow {
            let f = induction_case(mode, n, beta, q);
            assert!(f(1e6f64.ln()) < f(1e3f64.ln()));
            let mut p = ScheduleParams::capped(n, q, beta, 1.0, 0.1, 5.0, 1.0);
            p.mode = mode;
            let (alpha, _, s) = exponents(&p).unwrap();
            let gain = beta * alpha - 1.0 - s.unwrap_or(0.0);
            let far = 4.0 * q / gain;
            assert!(f(far) > f(1e3f64.ln()) && f(2.0 * far) > f(far), "{mode} n={n} beta={beta} q={q}");
        }
    }

    proptest! {
        #[test]
        fn g_s_is_decreasing(l1 in -20.0f64..8.0, dl in 0.01f64..5.0, s in 0.1f64..2.0) {
            let a = g_s_ln(l1, s, 1e-10, TailStrategy::EulerMaclaurin).unwrap();
            let b = g_s_ln(l1 + dl, s, 1e-10, TailStrategy::EulerMaclaurin).unwrap();
            prop_assert!(a > b && b > 1.0);
        }

        #[test]
        fn constants_satisfy_invariants(
            n in 2usize..4, extra in 0.5f64..3.0, q in 1.2f64..4.0,
            m0 in 0.2f64..5.0, area in 0.01f64..2.0, ratio in 1.05f64..50.0, c_hat in 0.5f64..50.0,
        ) {
            let beta = n as f64 - 1.0 + extra;
            let n1 = n as f64 - 1.0;
            let g = build_constants(&ScheduleParams::global(n, q, beta, m0, area, c_hat)).unwrap();
            prop_assert!(g.alpha > 1.0 / beta && g.alpha < 1.0 / n1);
            prop_assert!(g.alpha_tilde > 0.0 && g.alpha_tilde < 0.25);
            prop_assert!(g.t_star > 0.0 && g.t_star <= 1.0);
            let c = build_constants(&ScheduleParams::capped(n, q, beta, m0, area, ratio * m0, c_hat)).unwrap();
            let s = c.s.unwrap();
            prop_assert!(s > 0.0 && c.alpha > (1.0 + s) / beta && c.alpha < 1.0 / n1);
            prop_assert!(c.t_star > 0.0 && c.t_star <= 1.0);
            prop_assert!(rel(c.y, m0.powf(q - 1.0) * area.powf(c.alpha)) < 1e-12);
        }
    }
}
