//! Boundary-time integrals `∫₀ᵗ ∫_Γ N(x, y, t − τ) dS(y) dτ` and empirical
//! calibration of the constants bounding them.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{interval_integral, interval_kernel_unchecked, KernelEvaluator};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{BoundaryArc, BoundaryPatch, BoundaryRegion, Domain};
use crate::numeric::{graded_breaks, halton, GaussLegendre};

const SIGMA_LEVELS: usize = 40;

fn gl8() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(8))
}

/// `∫_region N(x, y, s) dS(y)`: the normal factor is the interval kernel at
/// the face, the tangential factors are exact erf integrals.
pub(crate) fn region_integral(
    eval: &KernelEvaluator,
    region: &BoundaryRegion,
    x: &[f64],
    s: f64,
) -> f64 {
    let (Some(face), Some((lo, hi))) = (region.face(), region.bounds()) else {
        return 0.0;
    };
    let ls = eval.lengths();
    let (axis, side) = (face / 2, face % 2);
    let tr = &eval.truncation;
    let mut acc = interval_kernel_unchecked(x[axis], side as f64 * ls[axis], s, ls[axis], tr);
    let mut j = 0;
    for (k, lk) in ls.iter().enumerate() {
        if k == axis {
            continue;
        }
        acc *= interval_integral(x[k], lo[j], hi[j], s, *lk, tr);
        j += 1;
    }
    acc
}

/// Time integral in `σ = √s` over dyadically graded panels, which resolves
/// the `s^{-1/2}` singularity and the boundary layers of width `dist(x, Γ)`.
pub(crate) fn bti_unchecked(
    eval: &KernelEvaluator,
    region: &BoundaryRegion,
    x: &[f64],
    t: f64,
) -> f64 {
    if region.is_empty() {
        return 0.0;
    }
    let gl = gl8();
    let breaks = graded_breaks(t.sqrt(), 0.5, SIGMA_LEVELS);
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        for (sigma, wt) in gl.scaled(w[0], w[1]) {
            acc += wt * 2.0 * sigma * region_integral(eval, region, x, sigma * sigma);
        }
    }
    acc
}

/// Boundary-time integral of the patch `gamma` seen from `x` over `[0, t]`.
pub fn boundary_time_integral(
    eval: &KernelEvaluator,
    gamma: &BoundaryRegion,
    x: &[f64],
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("boundary-time integral needs t > 0, got {t}")));
    }
    if t > 1.0 {
        log::warn!("boundary-time integral at t = {t} > 1 is outside the range of the power bound");
    }
    if !eval.domain.contains(x) {
        return Err(Error::domain("evaluation point outside the domain"));
    }
    if let Some(face) = gamma.face() {
        if face >= eval.domain.face_count() {
            return Err(Error::domain(format!("face {face} out of range")));
        }
    }
    Ok(bti_unchecked(eval, gamma, x, t))
}

/// One evaluated calibration sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub arc_measure: f64,
    pub region: BoundaryRegion,
    pub x: Vec<f64>,
    pub t: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub alpha: f64,
    pub c_hat: f64,
    #[serde(rename = "samples")]
    pub sample_count: usize,
    pub argmax: CalibrationSample,
    /// Best samples, used as seeds for [`refine_calibration`].
    #[serde(skip)]
    pub leaders: Vec<CalibrationSample>,
}

/// Deterministic sampling plan for calibration.
///
/// Patches lie on `face`; `positions` place the patch between the lower
/// corner of the face (0) and the far corner (1). Evaluation points combine
/// `interior_points` Halton points, the domain corners, and points on or
/// near each patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub face: usize,
    pub arc_measures: Vec<f64>,
    pub positions: Vec<f64>,
    pub interior_points: usize,
    pub halton_offset: u64,
    pub times: Vec<f64>,
}

fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    (0..count)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

impl SamplingPlan {
    /// Patch measures from `1e-5` up to most of the face, times from `1e-5`
    /// to 1, both log-spaced.
    pub fn standard(domain: &Domain) -> Self {
        let face = if domain.dimension() == 3 { 4 } else { 2 };
        let extent = domain.face_extent(face).unwrap_or_else(|_| vec![1.0]);
        let max_measure = if extent.len() == 2 {
            (0.8 * extent[0].min(extent[1])).powi(2)
        } else {
            0.8 * extent[0]
        };
        Self {
            face,
            arc_measures: log_space(1e-5 * max_measure, max_measure, 11),
            positions: vec![0.0, 0.5],
            interior_points: 24,
            halton_offset: 1,
            times: log_space(1e-5, 1.0, 11),
        }
    }

    /// A superset of `self` with twice the interior points and the
    /// log-midpoints of measures and times added.
    pub fn refined(&self) -> Self {
        let mid = |v: &[f64]| -> Vec<f64> {
            let mut out = v.to_vec();
            out.extend(v.windows(2).map(|w| (w[0] * w[1]).sqrt()));
            out.sort_by(f64::total_cmp);
            out
        };
        let mut positions = self.positions.clone();
        positions.push(0.25);
        positions.dedup();
        Self {
            face: self.face,
            arc_measures: mid(&self.arc_measures),
            positions,
            interior_points: 2 * self.interior_points,
            halton_offset: self.halton_offset,
            times: mid(&self.times),
        }
    }

    /// A plan sharing no sample with [`SamplingPlan::standard`] or its
    /// refinements: shifted Halton stream, off-grid measures, times and
    /// positions.
    pub fn held_out(domain: &Domain) -> Self {
        let std = Self::standard(domain);
        let shift = |v: &[f64], f: f64| v.iter().map(|x| (x * f).min(1.0)).collect::<Vec<_>>();
        let mut times = shift(&std.times[..std.times.len() - 1], 1.37);
        times.push(0.93);
        Self {
            face: std.face,
            arc_measures: shift(&std.arc_measures, 0.71),
            positions: vec![0.13, 0.61],
            interior_points: 40,
            halton_offset: 100_003,
            times,
        }
    }

    fn region(&self, domain: &Domain, measure: f64, position: f64) -> Option<BoundaryRegion> {
        let extent = domain.face_extent(self.face).ok()?;
        if extent.len() == 1 {
            if measure > extent[0] {
                return None;
            }
            let start = position * (extent[0] - measure);
            Some(BoundaryRegion::Arc(BoundaryArc {
                edge: self.face,
                start,
                end: start + measure,
            }))
        } else {
            let side = measure.sqrt();
            if side > extent[0].min(extent[1]) {
                return None;
            }
            let lo = [position * (extent[0] - side), position * (extent[1] - side)];
            Some(BoundaryRegion::Patch(BoundaryPatch {
                face: self.face,
                lo,
                hi: [lo[0] + side, lo[1] + side],
            }))
        }
    }

    fn points_near(domain: &Domain, region: &BoundaryRegion) -> Vec<Vec<f64>> {
        let Some(face) = region.face() else { return vec![] };
        let (lo, hi) = region.bounds().unwrap_or_default();
        let centroid = region.centroid().unwrap_or_default();
        let (axis, side) = (face / 2, face % 2);
        let ls = domain.box_lengths().unwrap_or_default();
        let scale = region.measure().powf(1.0 / lo.len() as f64);
        let mut on_face = vec![centroid.clone(), lo.clone(), hi.clone()];
        on_face.push(centroid.iter().zip(&hi).map(|(c, h)| 0.5 * (c + h)).collect());
        let mut out = Vec::new();
        for p in &on_face {
            for depth in [0.0, 0.05 * scale, 0.3 * scale, scale] {
                if let Ok(mut x) = domain.face_point(face, p) {
                    let d = depth.min(ls[axis]);
                    x[axis] = if side == 0 { d } else { ls[axis] - d };
                    out.push(x);
                }
            }
        }
        out
    }

    fn samples(&self, domain: &Domain) -> Vec<(BoundaryRegion, Vec<f64>, f64)> {
        let interior = sample_points(domain, self.interior_points, self.halton_offset, true);
        let mut out = Vec::new();
        for &m in &self.arc_measures {
            for &pos in &self.positions {
                let Some(region) = self.region(domain, m, pos) else { continue };
                let mut xs = interior.clone();
                xs.extend(Self::points_near(domain, &region));
                for x in xs {
                    for &t in &self.times {
                        out.push((region, x.clone(), t));
                    }
                }
            }
        }
        out
    }
}

/// Halton points in the box (first `count` of the stream starting at
/// `offset`), optionally preceded by the box corners.
pub fn sample_points(domain: &Domain, count: usize, offset: u64, corners: bool) -> Vec<Vec<f64>> {
    const BASES: [u64; 3] = [2, 3, 5];
    let ls = domain.box_lengths().unwrap_or_default();
    let n = ls.len();
    let mut out = Vec::new();
    if corners {
        for mask in 0..(1usize << n) {
            out.push((0..n).map(|k| if mask >> k & 1 == 1 { ls[k] } else { 0.0 }).collect());
        }
    }
    for i in 0..count as u64 {
        out.push((0..n).map(|k| ls[k] * halton(offset + i, BASES[k])).collect());
    }
    out
}

fn check_alpha(domain: &Domain, alpha: f64) -> Result<()> {
    let bound = 1.0 / (domain.dimension() as f64 - 1.0);
    if !(alpha >= 0.0 && alpha < bound) {
        return Err(Error::domain(format!("alpha must lie in [0, {bound}), got {alpha}")));
    }
    Ok(())
}

fn bound_scale(n: usize, alpha: f64, measure: f64, t: f64) -> f64 {
    measure.powf(alpha) * t.powf(0.5 * (1.0 - (n as f64 - 1.0) * alpha))
}

fn ratio(eval: &KernelEvaluator, alpha: f64, region: &BoundaryRegion, x: &[f64], t: f64) -> f64 {
    let m = region.measure();
    bti_unchecked(eval, region, x, t) / bound_scale(eval.dimension(), alpha, m, t)
}

const LEADERS: usize = 6;

/// `Ĉ = max bti / (|Γ|^α t^{(1−(n−1)α)/2})` over the plan.
pub fn calibrate_bti_constant(
    eval: &KernelEvaluator,
    alpha: f64,
    plan: &SamplingPlan,
    exec: Execution,
) -> Result<CalibrationResult> {
    check_alpha(&eval.domain, alpha)?;
    let samples = plan.samples(&eval.domain);
    if samples.is_empty() {
        return Err(Error::validation("sampling plan produced no samples"));
    }
    let ratios = exec.map_slice(&samples, |(r, x, t)| ratio(eval, alpha, r, x, *t));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|a, b| ratios[*b].total_cmp(&ratios[*a]));
    let to_sample = |i: usize| {
        let (region, x, t) = &samples[i];
        CalibrationSample {
            arc_measure: region.measure(),
            region: *region,
            x: x.clone(),
            t: *t,
            ratio: ratios[i],
        }
    };
    let leaders: Vec<_> = order.iter().take(LEADERS).map(|&i| to_sample(i)).collect();
    Ok(CalibrationResult {
        alpha,
        c_hat: ratios[order[0]],
        sample_count: samples.len(),
        argmax: leaders[0].clone(),
        leaders,
    })
}

/// Local compass search from the best calibration samples over patch
/// measure, patch position, evaluation point and time. The returned `Ĉ` is
/// the maximum over all samples evaluated so far.
pub fn refine_calibration(
    eval: &KernelEvaluator,
    result: &CalibrationResult,
    exec: Execution,
) -> Result<CalibrationResult> {
    check_alpha(&eval.domain, result.alpha)?;
    let alpha = result.alpha;
    let domain = eval.domain;
    let ls = eval.lengths();
    let runs = exec.map_slice(&result.leaders, |seed| climb(eval, &domain, &ls, alpha, seed));
    let mut best = result.argmax.clone();
    let mut count = result.sample_count;
    let mut leaders = result.leaders.clone();
    for (sample, evals) in runs {
        count += evals;
        if sample.ratio > best.ratio {
            best = sample.clone();
        }
        leaders.push(sample);
    }
    leaders.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    leaders.truncate(LEADERS);
    Ok(CalibrationResult {
        alpha,
        c_hat: best.ratio.max(result.c_hat),
        sample_count: count,
        argmax: best,
        leaders,
    })
}

struct Params {
    face: usize,
    log_measure: f64,
    position: f64,
    x: Vec<f64>,
    log_t: f64,
}

fn decode(domain: &Domain, ls: &[f64], p: &Params) -> Option<(BoundaryRegion, Vec<f64>, f64)> {
    let plan = SamplingPlan {
        face: p.face,
        arc_measures: vec![],
        positions: vec![],
        interior_points: 0,
        halton_offset: 0,
        times: vec![],
    };
    let t = p.log_t.exp();
    if !(t > 0.0 && t <= 1.0) || !(0.0..=1.0).contains(&p.position) {
        return None;
    }
    let region = plan.region(domain, p.log_measure.exp(), p.position)?;
    let x: Vec<f64> = p.x.iter().zip(ls).map(|(v, l)| v.clamp(0.0, *l)).collect();
    Some((region, x, t))
}

fn climb(
    eval: &KernelEvaluator,
    domain: &Domain,
    ls: &[f64],
    alpha: f64,
    seed: &CalibrationSample,
) -> (CalibrationSample, usize) {
    let (lo, _) = seed.region.bounds().unwrap_or_default();
    let face = seed.region.face().unwrap_or(0);
    let extent = domain.face_extent(face).unwrap_or_default();
    let side = seed.arc_measure.powf(1.0 / extent.len() as f64);
    let free = (extent[0] - side).max(0.0);
    let position = if free > 0.0 { (lo[0] / free).clamp(0.0, 1.0) } else { 0.0 };
    let mut cur = Params {
        face,
        log_measure: seed.arc_measure.ln(),
        position,
        x: seed.x.clone(),
        log_t: seed.t.ln(),
    };
    let dim = 3 + ls.len();
    let l_min = ls.iter().copied().fold(f64::INFINITY, f64::min);
    let mut steps: Vec<f64> = vec![0.5, 0.1, 0.5];
    steps.extend(std::iter::repeat(0.05 * l_min).take(ls.len()));
    let mut best = seed.ratio;
    let mut evals = 0;
    let mut best_sample = seed.clone();
    for _ in 0..60 {
        let mut improved = false;
        for k in 0..dim {
            for dir in [1.0, -1.0] {
                let mut trial = Params { x: cur.x.clone(), ..cur };
                let delta = dir * steps[k];
                match k {
                    0 => trial.log_measure += delta,
                    1 => trial.position += delta,
                    2 => trial.log_t += delta,
                    _ => trial.x[k - 3] += delta,
                }
                let Some((region, x, t)) = decode(domain, ls, &trial) else { continue };
                evals += 1;
                let r = ratio(eval, alpha, &region, &x, t);
                if r > best {
                    best = r;
                    best_sample = CalibrationSample {
                        arc_measure: region.measure(),
                        region,
                        x: x.clone(),
                        t,
                        ratio: r,
                    };
                    trial.x = x;
                    cur = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
            if steps[0] < 1e-3 {
                break;
            }
        }
    }
    (best_sample, evals)
}

/// A calibrated `Ĉ` tested on a fresh sampling plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutCheck {
    pub c_hat: f64,
    pub samples: usize,
    /// Samples whose ratio exceeds `c_hat`.
    pub violations: usize,
    pub max_ratio: f64,
    pub worst: CalibrationSample,
}

pub fn held_out_check(
    eval: &KernelEvaluator,
    alpha: f64,
    c_hat: f64,
    plan: &SamplingPlan,
    exec: Execution,
) -> Result<HeldOutCheck> {
    check_alpha(&eval.domain, alpha)?;
    let samples = plan.samples(&eval.domain);
    let ratios = exec.map_slice(&samples, |(r, x, t)| ratio(eval, alpha, r, x, *t));
    let (i, &max_ratio) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::validation("sampling plan produced no samples"))?;
    let (region, x, t) = &samples[i];
    let worst = CalibrationSample { arc_measure: region.measure(), region: *region, x: x.clone(), t: *t, ratio: max_ratio };
    let violations = ratios.iter().filter(|r| **r > c_hat).count();
    Ok(HeldOutCheck { c_hat, samples: samples.len(), violations, max_ratio, worst })
}

impl SamplingPlan {
    /// Number of `(region, x, t)` samples `self` shares with `other`.
    pub fn shared_samples(&self, other: &SamplingPlan, domain: &Domain) -> usize {
        let key = |(r, x, t): &(BoundaryRegion, Vec<f64>, f64)| {
            let (lo, hi) = r.bounds().unwrap_or_default();
            let mut k: Vec<u64> = lo.iter().chain(&hi).chain(x).map(|v| v.to_bits()).collect();
            k.push(t.to_bits());
            k
        };
        let mine: std::collections::HashSet<Vec<u64>> = self.samples(domain).iter().map(key).collect();
        other.samples(domain).iter().filter(|s| mine.contains(&key(s))).count()
    }
}

/// Maximum of `N(x, y, t) / Φ(x − y, 2t)` over a sample grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationResult {
    pub c_hat: f64,
    pub argmax: (Vec<f64>, Vec<f64>, f64),
    pub samples: usize,
}

pub fn gaussian_domination(
    eval: &KernelEvaluator,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    ts: &[f64],
    exec: Execution,
) -> Result<DominationResult> {
    if ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::domain("domination times must be positive"));
    }
    let n = eval.dimension() as f64;
    let per_x = exec.map_slice(xs, |x| {
        let mut best = (0.0, 0usize, 0usize);
        for (j, y) in ys.iter().enumerate() {
            let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
            for (k, &t) in ts.iter().enumerate() {
                let nv = eval.eval_unchecked(x, y, t);
                if nv <= 0.0 {
                    continue;
                }
                let ln_phi = -0.5 * n * (8.0 * std::f64::consts::PI * t).ln() - r2 / (8.0 * t);
                let r = (nv.ln() - ln_phi).exp();
                if r > best.0 {
                    best = (r, j, k);
                }
            }
        }
        best
    });
    let (i, &(c_hat, j, k)) = per_x
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .ok_or_else(|| Error::validation("empty domination grid"))?;
    Ok(DominationResult {
        c_hat,
        argmax: (xs[i].clone(), ys[j].clone(), ts[k]),
        samples: xs.len() * ys.len() * ts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::GaussLegendre;
    use proptest::prelude::*;

    fn unit() -> KernelEvaluator {
        KernelEvaluator::new(Domain::unit_square()).unwrap()
    }

    fn arc(start: f64, end: f64) -> BoundaryRegion {
        BoundaryRegion::Arc(BoundaryArc { edge: 2, start, end })
    }

    /// Brute force: Gauss–Legendre over the arc and over `τ = t − σ²`.
    fn brute_force(e: &KernelEvaluator, a: f64, b: f64, x: &[f64], t: f64) -> f64 {
        let gl = GaussLegendre::new(20);
        let panels = 400;
        let sq = t.sqrt();
        gl.composite(0.0, sq, 40, |sigma| {
            let s = sigma * sigma;
            2.0 * sigma * gl.composite(a, b, panels, |y| e.eval_unchecked(x, &[y, 0.0], s))
        })
    }

    #[test]
    fn matches_brute_force() {
        let e = unit();
        for (x, t) in [([0.5, 0.3], 0.2), ([0.1, 0.05], 0.5), ([0.9, 0.8], 1.0)] {
            let fast = boundary_time_integral(&e, &arc(0.4, 0.6), &x, t).unwrap();
            let slow = brute_force(&e, 0.4, 0.6, &x, t);
            assert!((fast - slow).abs() < 1e-9 * slow.max(1e-3), "{fast} vs {slow}");
        }
    }

    #[test]
    fn on_arc_singularity() {
        // x on Γ far from the ends: about 2√(t/π) for small t
        let e = unit();
        let t = 1e-4;
        let v = boundary_time_integral(&e, &arc(0.2, 0.8), &[0.5, 0.0], t).unwrap();
        assert!((v - 2.0 * (t / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_and_errors() {
        let e = unit();
        assert_eq!(
            boundary_time_integral(&e, &BoundaryRegion::Empty, &[0.5, 0.5], 0.5).unwrap(),
            0.0
        );
        assert!(boundary_time_integral(&e, &arc(0.1, 0.2), &[0.5, 0.5], 0.0).is_err());
        assert!(boundary_time_integral(&e, &arc(0.1, 0.2), &[0.5, 0.5], 2.0).is_ok());
        let plan = SamplingPlan::standard(&e.domain);
        assert!(matches!(
            calibrate_bti_constant(&e, 1.0, &plan, Execution::Sequential),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn small_time_vanishes() {
        let e = unit();
        let v = boundary_time_integral(&e, &arc(0.3, 0.7), &[0.5, 0.0], 1e-12).unwrap();
        assert!(v < 1e-5);
    }

    #[test]
    fn three_d_patch_matches_box_integral() {
        let e = KernelEvaluator::new(Domain::box3d(1.0, 1.0, 1.0).unwrap()).unwrap();
        let patch = BoundaryRegion::Patch(BoundaryPatch { face: 4, lo: [0.3, 0.3], hi: [0.7, 0.6] });
        let x = [0.5, 0.4, 0.2];
        let s = 0.05;
        let gl = GaussLegendre::new(16);
        let quad = gl.composite(0.3, 0.7, 8, |a| {
            gl.composite(0.3, 0.6, 8, |b| e.eval_unchecked(&x, &[a, b, 0.0], s))
        });
        assert!((region_integral(&e, &patch, &x, s) - quad).abs() < 1e-10);
    }

    #[test]
    fn calibration_alpha_zero_and_superset() {
        let e = unit();
        let mut plan = SamplingPlan::standard(&e.domain);
        plan.interior_points = 4;
        plan.arc_measures.truncate(6);
        plan.times.truncate(6);
        let a = calibrate_bti_constant(&e, 0.0, &plan, Execution::Sequential).unwrap();
        assert!(a.c_hat.is_finite() && a.c_hat > 0.0);
        let b = calibrate_bti_constant(&e, 0.0, &plan.refined(), Execution::Sequential).unwrap();
        assert!(b.c_hat >= a.c_hat);
        assert!(b.sample_count > a.sample_count);
        let r = refine_calibration(&e, &b, Execution::Sequential).unwrap();
        assert!(r.c_hat >= b.c_hat);
    }

    #[test]
    fn domination_at_corner() {
        let e = unit();
        let c = vec![vec![0.0, 0.0]];
        let d = gaussian_domination(&e, &c, &c, &[1e-4], Execution::Sequential).unwrap();
        // four images at a corner, Φ(0, t)/Φ(0, 2t) = 2
        assert!((d.c_hat - 8.0).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_in_time_and_inclusion(
            a in 0.0f64..0.5,
            len in 0.01f64..0.4,
            shrink in 0.0f64..1.0,
            x0 in 0.0f64..1.0,
            x1 in 0.0f64..1.0,
            t in 0.001f64..0.9,
            dt in 0.0f64..0.1,
        ) {
            let e = unit();
            let big = arc(a, a + len);
            let small = arc(a + 0.5 * shrink * len, a + len - 0.5 * shrink * len);
            let x = [x0, x1];
            let v_big = boundary_time_integral(&e, &big, &x, t).unwrap();
            let v_small = boundary_time_integral(&e, &small, &x, t).unwrap();
            prop_assert!(v_small <= v_big * (1.0 + 1e-12) + 1e-15);
            let later = boundary_time_integral(&e, &big, &x, t + dt).unwrap();
            prop_assert!(later >= v_big * (1.0 - 1e-12) - 1e-15);
            prop_assert!(v_small >= 0.0);
        }
    }

    #[test]
    fn held_out_plan_is_disjoint_and_counts_violations() {
        let d = Domain::unit_square();
        let std = SamplingPlan::standard(&d);
        let n_std = std.samples(&d).len();
        assert_eq!(std.shared_samples(&SamplingPlan::held_out(&d), &d), 0);
        assert_eq!(std.shared_samples(&std.refined(), &d), n_std);
        let e = unit();
        let small = SamplingPlan { arc_measures: vec![0.05], interior_points: 4, times: vec![0.1, 1.0], ..std };
        let chk = held_out_check(&e, 0.75, 0.0, &small, Execution::Sequential).unwrap();
        assert_eq!(chk.violations, chk.samples);
        let chk = held_out_check(&e, 0.75, chk.max_ratio, &small, Execution::Sequential).unwrap();
        assert_eq!(chk.violations, 0);
    }
}
