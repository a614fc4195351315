//! Growth of `Λ_j = (M_j − M_{j−1}) / M_j^q` for increasing sequences.
//!
//! Any positive increasing sequence has `liminf j·Λ_j = 0`, and for
//! `M_j = ln(j+1)` the weight `j` cannot be raised to `j^{1+ε}`. Only finite
//! evidence is produced here: running minima, decade ratios and the
//! reciprocal recursion used to derive a contradiction.
//!
//! Everything is evaluated as logarithms with increments computed in closed
//! form, since `Λ_j` underflows for geometric sequences and cancels
//! catastrophically for logarithmic ones.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Generator `j ↦ M_j`, `j ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// `M_j = j`.
    Linear,
    /// `M_j = j^p`.
    Polynomial { p: f64 },
    /// `M_j = r^j`.
    Geometric { r: f64 },
    /// `M_j = 2 − 2^{−j}`.
    Saturating,
    /// `M_j = ln(j+1)`.
    Logarithmic,
    /// Explicit values `M_0, M_1, …`.
    Table { values: Vec<f64> },
}

impl Family {
    /// `(ln M_j, ln(M_j − M_{j−1}))` for `j ≥ 1`.
    fn logs(&self, j: u64) -> (f64, f64) {
        let x = j as f64;
        match self {
            Family::Linear => (x.ln(), 0.0),
            Family::Polynomial { p } => {
                let lm = p * x.ln();
                // j^p − (j−1)^p = j^p (1 − (1 − 1/j)^p)
                (lm, lm + (-(p * (-1.0 / x).ln_1p()).exp_m1()).ln())
            }
            Family::Geometric { r } => {
                let lm = x * r.ln();
                (lm, lm + (-1.0 / r).ln_1p())
            }
            Family::Saturating => {
                let half = (-x * std::f64::consts::LN_2).exp();
                ((2.0 - half).ln(), -x * std::f64::consts::LN_2)
            }
            Family::Logarithmic => (x.ln_1p().ln(), (1.0 / x).ln_1p().ln()),
            Family::Table { values } => {
                let j = j as usize;
                (values[j].ln(), (values[j] - values[j - 1]).ln())
            }
        }
    }

    fn max_index(&self) -> Option<u64> {
        match self {
            Family::Table { values } => Some(values.len() as u64 - 1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub family: Family,
    pub q: f64,
    pub label: String,
}

impl SequenceSpec {
    pub fn new(family: Family, q: f64, label: impl Into<String>) -> Self {
        Self { family, q, label: label.into() }
    }

    fn validate(&self, j_max: u64) -> Result<()> {
        if !(self.q > 1.0) {
            return Err(Error::validation(format!("q must exceed 1, got {}", self.q)));
        }
        match &self.family {
            Family::Polynomial { p } if !(*p > 0.0) => {
                Err(Error::validation(format!("polynomial exponent must be positive, got {p}")))
            }
            Family::Geometric { r } if !(*r > 1.0) => {
                Err(Error::validation(format!("geometric ratio must exceed 1, got {r}")))
            }
            Family::Table { values } => {
                if (values.len() as u64) <= j_max {
                    return Err(Error::validation(format!(
                        "table `{}` has {} values, need M_0..M_{j_max}",
                        self.label,
                        values.len()
                    )));
                }
                if let Some(j) = (1..=j_max as usize).find(|&j| !(values[j] > 0.0)) {
                    return Err(Error::validation(format!("M_{j} = {} is not positive", values[j])));
                }
                if let Some(j) = (1..=j_max as usize).find(|&j| !(values[j] > values[j - 1])) {
                    return Err(Error::validation(format!(
                        "sequence `{}` is not increasing at j = {j}: {} <= {}",
                        self.label,
                        values[j],
                        values[j - 1]
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `ln Λ_j`.
    pub fn ln_lambda(&self, j: u64) -> f64 {
        let (lm, linc) = self.family.logs(j);
        linc - self.q * lm
    }
}

/// The five families of the built-in suite at exponent `q`.
pub fn builtin_suite(q: f64) -> Vec<SequenceSpec> {
    vec![
        SequenceSpec::new(Family::Linear, q, "linear"),
        SequenceSpec::new(Family::Polynomial { p: 2.0 }, q, "polynomial"),
        SequenceSpec::new(Family::Geometric { r: 2.0 }, q, "geometric"),
        SequenceSpec::new(Family::Saturating, q, "saturating"),
        SequenceSpec::new(Family::Logarithmic, q, "logarithmic"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub j: u64,
    pub ln_lambda: f64,
    /// `ln(j^w Λ_j)` for the trace's weight exponent `w`.
    pub ln_weighted: f64,
    pub ln_running_min: f64,
}

/// `(j, Λ_j, j^w Λ_j, min_{i≤j} i^w Λ_i)` for `j = 1..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTrace {
    pub label: String,
    pub q: f64,
    /// Power `w` of `j` in the weighted column.
    pub weight: f64,
    pub rows: Vec<TraceRow>,
}

impl SequenceTrace {
    pub fn at(&self, j: u64) -> Option<&TraceRow> {
        j.checked_sub(1).and_then(|k| self.rows.get(k as usize))
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("traces hold at least two rows")
    }

    /// `min(j ≤ 10J₀) / min(j ≤ J₀)` for each decade `J₀ = 10, 100, …`.
    pub fn decade_ratios(&self) -> Vec<(u64, f64)> {
        let mut out = Vec::new();
        let mut j0 = 10u64;
        while let (Some(a), Some(b)) = (self.at(j0), self.at(10 * j0)) {
            out.push((10 * j0, (b.ln_running_min - a.ln_running_min).exp()));
            j0 *= 10;
        }
        out
    }

    /// Columns `j, Lambda, <weighted>, running_min`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let weighted = if self.weight == 1.0 { "jLambda".to_string() } else { format!("j^{}Lambda", self.weight) };
        w.write_record(["j", "Lambda", weighted.as_str(), "running_min"])?;
        for r in &self.rows {
            w.write_record(&[
                r.j.to_string(),
                format!("{:e}", r.ln_lambda.exp()),
                format!("{:e}", r.ln_weighted.exp()),
                format!("{:e}", r.ln_running_min.exp()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

const CHUNK: u64 = 1 << 14;

fn weighted_trace(spec: &SequenceSpec, weight: f64, j_max: u64, exec: Execution) -> Result<SequenceTrace> {
    if j_max < 2 {
        return Err(Error::validation(format!("J must be at least 2, got {j_max}")));
    }
    if let Some(top) = spec.family.max_index() {
        if j_max > top {
            return Err(Error::validation(format!("table `{}` ends at j = {top}", spec.label)));
        }
    }
    spec.validate(j_max)?;
    let chunks = j_max.div_ceil(CHUNK) as usize;
    let parts = exec.map_range(chunks, |c| {
        let lo = 1 + c as u64 * CHUNK;
        let hi = (lo + CHUNK - 1).min(j_max);
        (lo..=hi)
            .map(|j| {
                let ll = spec.ln_lambda(j);
                TraceRow { j, ln_lambda: ll, ln_weighted: ll + weight * (j as f64).ln(), ln_running_min: 0.0 }
            })
            .collect::<Vec<_>>()
    });
    let mut rows: Vec<TraceRow> = parts.into_iter().flatten().collect();
    let mut m = f64::INFINITY;
    for r in &mut rows {
        m = m.min(r.ln_weighted);
        r.ln_running_min = m;
    }
    Ok(SequenceTrace { label: spec.label.clone(), q: spec.q, weight, rows })
}

/// Running minimum of `jΛ_j` up to `J`.
pub fn running_min_j_lambda(spec: &SequenceSpec, j_max: u64, exec: Execution) -> Result<SequenceTrace> {
    weighted_trace(spec, 1.0, j_max, exec)
}

/// `j^{1+ε} Λ_j` for `M_j = ln(j+1)`.
pub fn sharpness_probe(eps: f64, q: f64, j_max: u64, exec: Execution) -> Result<SequenceTrace> {
    if !(eps >= 0.0) {
        return Err(Error::domain(format!("eps must be non-negative, got {eps}")));
    }
    let spec = SequenceSpec::new(Family::Logarithmic, q, format!("sharpness eps={eps}"));
    weighted_trace(&spec, 1.0 + eps, j_max, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionProbe {
    /// `jΛ_j ≥ ε` on the whole window `[N, J]`.
    pub violates_conclusion: bool,
    /// First index with `M_j ≥ 1` (the proof's `N₁`), if inside the window.
    pub n1: Option<u64>,
    /// Every step of `1/x_{j−1} ≥ 1/x_j + (q̃−1)/j` held.
    pub recursion_holds: bool,
    /// `1/x_{N₁−1}`.
    pub lhs: f64,
    /// `1/x_J + (q̃−1) Σ_{j=N₁}^{J} 1/j`.
    pub rhs: f64,
}

/// Replays the contradiction argument on `[N, J]` with
/// `x_j = ε M_j^{q̃−1}`, `q̃ = min(q, 2)`.
pub fn contradiction_probe(spec: &SequenceSpec, eps: f64, n: u64, j_max: u64) -> Result<ContradictionProbe> {
    if !(eps > 0.0) || n < 2 || n >= j_max {
        return Err(Error::validation("contradiction probe needs eps > 0 and 2 <= N < J"));
    }
    spec.validate(j_max)?;
    let ln_eps = eps.ln();
    let violates = (n..=j_max).all(|j| spec.ln_lambda(j) + (j as f64).ln() >= ln_eps);
    let qt = spec.q.min(2.0);
    let n1 = (n..=j_max).find(|&j| spec.family.logs(j).0 >= 0.0);
    let inv_x = |j: u64| (-ln_eps - (qt - 1.0) * spec.family.logs(j).0).exp();
    let (mut holds, mut lhs, mut rhs) = (false, f64::NAN, f64::NAN);
    if let Some(n1) = n1.filter(|&k| k > 1) {
        holds = true;
        let mut harmonic = crate::numeric::CompensatedSum::new();
        for j in n1..=j_max {
            let step = inv_x(j - 1) - inv_x(j) - (qt - 1.0) / j as f64;
            // relative slack for rounding in 1/x
            if step < -1e-12 * inv_x(j - 1) {
                holds = false;
            }
            harmonic.add(1.0 / j as f64);
        }
        lhs = inv_x(n1 - 1);
        rhs = inv_x(j_max) + (qt - 1.0) * harmonic.value();
    }
    Ok(ContradictionProbe { violates_conclusion: violates, n1, recursion_holds: holds, lhs, rhs })
}

/// One line per family: label, value at `J₀`, value at `J`.
pub fn write_summary<W: Write>(mut out: W, traces: &[SequenceTrace], j0: u64) -> Result<()> {
    writeln!(out, "label,weight,min_at_{j0},min_at_J,J")?;
    for t in traces {
        let a = t.at(j0).map(|r| r.ln_running_min.exp()).unwrap_or(f64::NAN);
        writeln!(out, "{},{},{:e},{:e},{}", t.label, t.weight, a, t.last().ln_running_min.exp(), t.last().j)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn linear_closed_form() {
        let t = running_min_j_lambda(&SequenceSpec::new(Family::Linear, 2.0, "lin"), 10_000, Execution::Sequential)
            .unwrap();
        assert!(rel(t.last().ln_running_min.exp(), 1e-4) < 1e-12);
        for j in [1u64, 7, 500] {
            assert!(rel(t.at(j).unwrap().ln_weighted.exp(), 1.0 / j as f64) < 1e-12);
        }
    }

    #[test]
    fn saturating_closed_form() {
        // increment 2^{-j}
        let t = running_min_j_lambda(&SequenceSpec::new(Family::Saturating, 2.0, "sat"), 2000, Execution::Sequential)
            .unwrap();
        for j in [1u64, 5, 40, 1000] {
            let x = j as f64;
            let expected = x * 2f64.powf(-x) / (2.0 - 2f64.powf(-x)).powi(2);
            assert!(rel(t.at(j).unwrap().ln_weighted.exp(), expected) < 1e-12);
        }
        // geometric decay: past the underflow threshold the log still decreases
        assert!(t.last().ln_running_min < -1000.0);
    }

    #[test]
    fn logarithmic_matches_direct_differences() {
        let spec = SequenceSpec::new(Family::Logarithmic, 2.0, "log");
        for j in [1u64, 10, 1000] {
            let x = j as f64;
            let direct = ((x + 1.0).ln() - x.ln()) / (x + 1.0).ln().powi(2);
            assert!(rel(spec.ln_lambda(j).exp(), direct) < 1e-10);
        }
        let poly = SequenceSpec::new(Family::Polynomial { p: 3.0 }, 1.5, "cubic");
        let direct = (27.0 - 8.0) / 27f64.powf(1.5);
        assert!(rel(poly.ln_lambda(3).exp(), direct) < 1e-13);
    }

    #[test]
    fn suite_minima_drop_between_decades() {
        for spec in builtin_suite(2.0) {
            let t = running_min_j_lambda(&spec, 100_000, Execution::Parallel).unwrap();
            assert!(t.last().ln_running_min < t.at(1000).unwrap().ln_running_min, "{}", spec.label);
            assert!(t.decade_ratios().iter().all(|(_, r)| *r <= 1.0));
        }
    }

    #[test]
    fn sharpness_probe_orders_by_eps() {
        let a = sharpness_probe(0.1, 2.0, 1000, Execution::Sequential).unwrap();
        let b = sharpness_probe(0.3, 2.0, 1000, Execution::Sequential).unwrap();
        assert!(a.rows.iter().zip(&b.rows).skip(1).all(|(x, y)| y.ln_weighted > x.ln_weighted));
        // ε = 0 is the plain jΛ_j trace
        let zero = sharpness_probe(0.0, 2.0, 1000, Execution::Sequential).unwrap();
        let plain = running_min_j_lambda(&SequenceSpec::new(Family::Logarithmic, 2.0, "log"), 1000, Execution::Sequential)
            .unwrap();
        assert_eq!(zero.rows, plain.rows);
        // with a large ε the growth is visible by j = 10³
        let big = sharpness_probe(1.0, 2.0, 1000, Execution::Sequential).unwrap();
        assert!(big.last().ln_weighted > big.at(10).unwrap().ln_weighted);
    }

    #[test]
    fn validation_errors() {
        let bad = SequenceSpec::new(Family::Table { values: vec![0.0, 1.0, 2.0, 2.0, 3.0] }, 2.0, "flat");
        assert!(matches!(running_min_j_lambda(&bad, 4, Execution::Sequential), Err(Error::Validation(_))));
        let ok = SequenceSpec::new(Family::Table { values: vec![0.0, 1.0, 2.0, 3.0] }, 2.0, "table");
        let t = running_min_j_lambda(&ok, 3, Execution::Sequential).unwrap();
        assert!(rel(t.last().ln_running_min.exp(), 1.0 / 3.0) < 1e-14);
        assert!(running_min_j_lambda(&ok, 1, Execution::Sequential).is_err());
        assert!(running_min_j_lambda(&SequenceSpec::new(Family::Linear, 1.0, "q1"), 10, Execution::Sequential).is_err());
    }

    #[test]
    fn contradiction_probe_on_finite_violator() {
        // jΛ_j ≈ 1/ln²j stays above 0.005 up to 10⁶
        let spec = SequenceSpec::new(Family::Logarithmic, 2.0, "log");
        let p = contradiction_probe(&spec, 0.005, 10, 1_000_000).unwrap();
        assert!(p.violates_conclusion && p.recursion_holds);
        assert!(p.lhs >= p.rhs * (1.0 - 1e-12), "{p:?}");
        let lin = SequenceSpec::new(Family::Linear, 2.0, "lin");
        assert!(!contradiction_probe(&lin, 0.01, 10, 10_000).unwrap().violates_conclusion);
    }

    proptest! {
        #[test]
        fn running_min_is_nonincreasing(p in 0.2f64..4.0, q in 1.05f64..4.0, r in 1.01f64..5.0) {
            for fam in [Family::Polynomial { p }, Family::Geometric { r }, Family::Logarithmic] {
                let t = running_min_j_lambda(&SequenceSpec::new(fam, q, "p"), 3000, Execution::Sequential).unwrap();
                prop_assert!(t.rows.windows(2).all(|w| w[1].ln_running_min <= w[0].ln_running_min));
                prop_assert!(t.rows.iter().all(|r| r.ln_running_min <= r.ln_weighted));
            }
        }

        #[test]
        fn parallel_trace_matches_sequential(j in 2u64..60_000) {
            let spec = SequenceSpec::new(Family::Polynomial { p: 1.5 }, 2.5, "p");
            let a = running_min_j_lambda(&spec, j, Execution::Sequential).unwrap();
            let b = running_min_j_lambda(&spec, j, Execution::Parallel).unwrap();
            prop_assert_eq!(a.rows, b.rows);
        }
    }
}
