//! Computational domains, boundary patches and shrinking radiation schedules.
//!
//! Box faces are numbered `2·axis + side`: for `box2d(a, b)` face 0 is
//! `x = 0`, face 1 is `x = a`, face 2 is `y = 0` and face 3 is `y = b`.
//! Coordinates on a face are the remaining axes in increasing order, so a
//! point on face 2 of a rectangle is addressed by its `x` coordinate. The
//! unit disk has a single face (0) parametrised by arc length (= angle).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Box2d { a: f64, b: f64 },
    Box3d { a: f64, b: f64, c: f64 },
    /// Unit disk centred at the origin.
    Disk2d,
}

impl Domain {
    pub fn box2d(a: f64, b: f64) -> Result<Self> {
        let d = Domain::Box2d { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn box3d(a: f64, b: f64, c: f64) -> Result<Self> {
        let d = Domain::Box3d { a, b, c };
        d.validate()?;
        Ok(d)
    }

    pub fn disk2d() -> Self {
        Domain::Disk2d
    }

    pub fn unit_square() -> Self {
        Domain::Box2d { a: 1.0, b: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.box_lengths() {
            Some(ls) => ls.iter().all(|l| l.is_finite() && *l > 0.0),
            None => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("box side lengths must be positive: {self:?}")))
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Domain::Box2d { .. } | Domain::Disk2d => 2,
            Domain::Box3d { .. } => 3,
        }
    }

    pub fn is_box(&self) -> bool {
        !matches!(self, Domain::Disk2d)
    }

    /// Side lengths for boxes, `None` for the disk.
    pub fn box_lengths(&self) -> Option<Vec<f64>> {
        match *self {
            Domain::Box2d { a, b } => Some(vec![a, b]),
            Domain::Box3d { a, b, c } => Some(vec![a, b, c]),
            Domain::Disk2d => None,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Box2d { a, b } => a * b,
            Domain::Box3d { a, b, c } => a * b * c,
            Domain::Disk2d => PI,
        }
    }

    /// Perimeter in 2D, surface area in 3D.
    pub fn boundary_measure(&self) -> f64 {
        match *self {
            Domain::Box2d { a, b } => 2.0 * (a + b),
            Domain::Box3d { a, b, c } => 2.0 * (a * b + b * c + a * c),
            Domain::Disk2d => 2.0 * PI,
        }
    }

    pub fn face_count(&self) -> usize {
        match self {
            Domain::Box2d { .. } => 4,
            Domain::Box3d { .. } => 6,
            Domain::Disk2d => 1,
        }
    }

    /// `(normal axis, side)` of a box face.
    pub fn face_axis(&self, face: usize) -> Result<(usize, usize)> {
        if !self.is_box() {
            return Err(Error::UnsupportedDomain("disk has no axis-aligned faces".into()));
        }
        if face >= self.face_count() {
            return Err(Error::domain(format!("face {face} out of range")));
        }
        Ok((face / 2, face % 2))
    }

    /// Axes spanning a box face, in increasing order.
    pub fn tangential_axes(&self, face: usize) -> Result<Vec<usize>> {
        let (axis, _) = self.face_axis(face)?;
        Ok((0..self.dimension()).filter(|&k| k != axis).collect())
    }

    /// Extent of each tangential coordinate on `face`.
    pub fn face_extent(&self, face: usize) -> Result<Vec<f64>> {
        match self {
            Domain::Disk2d => {
                if face == 0 {
                    Ok(vec![2.0 * PI])
                } else {
                    Err(Error::domain(format!("disk has a single face, got {face}")))
                }
            }
            _ => {
                let ls = self.box_lengths().unwrap_or_default();
                Ok(self.tangential_axes(face)?.into_iter().map(|k| ls[k]).collect())
            }
        }
    }

    /// Closed-domain membership with a small absolute slack.
    pub fn contains(&self, x: &[f64]) -> bool {
        const SLACK: f64 = 1e-12;
        if x.len() != self.dimension() {
            return false;
        }
        match self.box_lengths() {
            Some(ls) => x.iter().zip(&ls).all(|(xi, l)| *xi >= -SLACK && *xi <= l + SLACK),
            None => x[0].hypot(x[1]) <= 1.0 + SLACK,
        }
    }

    /// Cartesian point on `face` with the given face coordinates.
    pub fn face_point(&self, face: usize, coords: &[f64]) -> Result<Vec<f64>> {
        match self {
            Domain::Disk2d => Ok(vec![coords[0].cos(), coords[0].sin()]),
            _ => {
                let (axis, side) = self.face_axis(face)?;
                let ls = self.box_lengths().unwrap_or_default();
                let mut p = vec![0.0; self.dimension()];
                p[axis] = side as f64 * ls[axis];
                for (k, c) in self.tangential_axes(face)?.into_iter().zip(coords) {
                    p[k] = *c;
                }
                Ok(p)
            }
        }
    }
}

/// A sub-interval of one edge of a planar domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub edge: usize,
    pub start: f64,
    pub end: f64,
}

impl BoundaryArc {
    pub fn measure(&self) -> f64 {
        self.end - self.start
    }
}

/// An axis-aligned rectangle on one face of a 3D box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPatch {
    pub face: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl BoundaryPatch {
    pub fn measure(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }
}

/// The radiating part of the boundary at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundaryRegion {
    Empty,
    Arc(BoundaryArc),
    Patch(BoundaryPatch),
}

impl BoundaryRegion {
    pub fn measure(&self) -> f64 {
        match self {
            BoundaryRegion::Empty => 0.0,
            BoundaryRegion::Arc(a) => a.measure(),
            BoundaryRegion::Patch(p) => p.measure(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.measure() <= 0.0
    }

    pub fn face(&self) -> Option<usize> {
        match self {
            BoundaryRegion::Empty => None,
            BoundaryRegion::Arc(a) => Some(a.edge),
            BoundaryRegion::Patch(p) => Some(p.face),
        }
    }

    /// Lower and upper face coordinates (one entry per tangential axis).
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            BoundaryRegion::Empty => None,
            BoundaryRegion::Arc(a) => Some((vec![a.start], vec![a.end])),
            BoundaryRegion::Patch(p) => Some((p.lo.to_vec(), p.hi.to_vec())),
        }
    }

    /// Set inclusion `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BoundaryRegion) -> bool {
        if self.is_empty() {
            return true;
        }
        match (self, other) {
            (BoundaryRegion::Arc(a), BoundaryRegion::Arc(b)) => {
                a.edge == b.edge && a.start >= b.start && a.end <= b.end
            }
            (BoundaryRegion::Patch(a), BoundaryRegion::Patch(b)) => {
                a.face == b.face && (0..2).all(|k| a.lo[k] >= b.lo[k] && a.hi[k] <= b.hi[k])
            }
            _ => false,
        }
    }

    /// Measure of the intersection with a face cell `[lo, hi]` on `face`.
    /// On the disk the cell may straddle angle 0 and is wrapped periodically.
    pub fn overlap(&self, face: usize, lo: &[f64], hi: &[f64], periodic: Option<f64>) -> f64 {
        let Some((rlo, rhi)) = self.bounds() else {
            return 0.0;
        };
        if self.face() != Some(face) {
            return 0.0;
        }
        let shifts: &[f64] = match periodic {
            Some(p) => &[-p, 0.0, p],
            None => &[0.0],
        };
        let mut total = 0.0;
        for shift in shifts {
            let mut m = 1.0;
            for k in 0..rlo.len() {
                let a = (lo[k] + shift).max(rlo[k]);
                let b = (hi[k] + shift).min(rhi[k]);
                m *= (b - a).max(0.0);
            }
            total += m;
        }
        total
    }

    /// Split into `panels` equal pieces per tangential axis.
    pub fn subdivide(&self, panels: usize) -> Vec<BoundaryRegion> {
        match *self {
            BoundaryRegion::Empty => vec![],
            BoundaryRegion::Arc(a) => {
                let h = a.measure() / panels as f64;
                (0..panels)
                    .map(|i| {
                        let start = a.start + i as f64 * h;
                        let end = if i + 1 == panels { a.end } else { start + h };
                        BoundaryRegion::Arc(BoundaryArc { edge: a.edge, start, end })
                    })
                    .collect()
            }
            BoundaryRegion::Patch(p) => {
                let hx = (p.hi[0] - p.lo[0]) / panels as f64;
                let hy = (p.hi[1] - p.lo[1]) / panels as f64;
                let mut out = Vec::with_capacity(panels * panels);
                for j in 0..panels {
                    for i in 0..panels {
                        let lo = [p.lo[0] + i as f64 * hx, p.lo[1] + j as f64 * hy];
                        let hi = [
                            if i + 1 == panels { p.hi[0] } else { lo[0] + hx },
                            if j + 1 == panels { p.hi[1] } else { lo[1] + hy },
                        ];
                        out.push(BoundaryRegion::Patch(BoundaryPatch { face: p.face, lo, hi }));
                    }
                }
                out
            }
        }
    }

    /// Intersection with another region on the same face.
    pub fn intersect(&self, other: &BoundaryRegion) -> BoundaryRegion {
        match (self, other) {
            (BoundaryRegion::Arc(a), BoundaryRegion::Arc(b)) if a.edge == b.edge => {
                let start = a.start.max(b.start);
                let end = a.end.min(b.end);
                if end > start {
                    BoundaryRegion::Arc(BoundaryArc { edge: a.edge, start, end })
                } else {
                    BoundaryRegion::Empty
                }
            }
            (BoundaryRegion::Patch(a), BoundaryRegion::Patch(b)) if a.face == b.face => {
                let lo = [a.lo[0].max(b.lo[0]), a.lo[1].max(b.lo[1])];
                let hi = [a.hi[0].min(b.hi[0]), a.hi[1].min(b.hi[1])];
                if hi[0] > lo[0] && hi[1] > lo[1] {
                    BoundaryRegion::Patch(BoundaryPatch { face: a.face, lo, hi })
                } else {
                    BoundaryRegion::Empty
                }
            }
            _ => BoundaryRegion::Empty,
        }
    }

    /// Centroid in face coordinates.
    pub fn centroid(&self) -> Option<Vec<f64>> {
        self.bounds()
            .map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect())
    }
}

/// Relative area `f(t)` of the radiating patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecayProfile {
    Constant,
    /// `(1 + rate·t)^(-beta)`.
    Polynomial { rate: f64, beta: f64 },
    /// `exp(-rate·t)`.
    Exponential { rate: f64 },
    /// Relative length of the circular cap `{|x₁| < e^(-rate·t)}` on the
    /// upper unit half circle: `(2/π)·arcsin(e^(-rate·t))`.
    SphericalCap { rate: f64 },
    /// Piecewise-linear through `(t, f)` samples, constant after the last.
    Table { samples: Vec<(f64, f64)> },
}

impl DecayProfile {
    pub fn polynomial(rate: f64, beta: f64) -> Result<Self> {
        let p = DecayProfile::Polynomial { rate, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn table(samples: Vec<(f64, f64)>) -> Result<Self> {
        let p = DecayProfile::Table { samples };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            DecayProfile::Constant => Ok(()),
            DecayProfile::Polynomial { rate, beta } => {
                positive("polynomial rate", *rate)?;
                positive("polynomial beta", *beta)
            }
            DecayProfile::Exponential { rate } | DecayProfile::SphericalCap { rate } => {
                positive("decay rate", *rate)
            }
            DecayProfile::Table { samples } => {
                let Some(&(t0, f0)) = samples.first() else {
                    return Err(Error::validation("table profile needs at least one sample"));
                };
                if t0 != 0.0 || f0 != 1.0 {
                    return Err(Error::validation("table profile must start at (0, 1)"));
                }
                for w in samples.windows(2) {
                    let ((ta, fa), (tb, fb)) = (w[0], w[1]);
                    if tb <= ta {
                        return Err(Error::validation("table times must be strictly increasing"));
                    }
                    if fb > fa {
                        return Err(Error::validation(format!(
                            "table profile is not monotone: f({tb}) = {fb} > f({ta}) = {fa}"
                        )));
                    }
                    if fb <= 0.0 {
                        return Err(Error::validation("table profile must stay positive"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            DecayProfile::Constant => 1.0,
            DecayProfile::Polynomial { rate, beta } => (1.0 + rate * t).powf(-beta),
            DecayProfile::Exponential { rate } => (-rate * t).exp(),
            DecayProfile::SphericalCap { rate } => (-rate * t).exp().asin() / FRAC_PI_2,
            DecayProfile::Table { samples } => {
                let idx = samples.partition_point(|(ts, _)| *ts <= t);
                if idx >= samples.len() {
                    return samples[samples.len() - 1].1;
                }
                let (ta, fa) = samples[idx - 1];
                let (tb, fb) = samples[idx];
                fa + (fb - fa) * (t - ta) / (tb - ta)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DecayProfile::Constant)
    }
}

/// Which part of the initial patch is kept while shrinking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    #[default]
    Center,
    /// Keep the lower coordinate end (or lower corner) fixed.
    LeftEnd,
}

/// Time-dependent radiating patch `Γ₁,ₜ` with `|Γ₁,ₜ| = |Γ₁|·f(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySchedule {
    pub domain: Domain,
    pub initial: BoundaryRegion,
    pub profile: DecayProfile,
    pub anchor: Anchor,
}

/// Place a patch of measure `gamma1_area` on the default face and shrink it
/// according to `profile`.
///
/// Boxes use the face `y = 0` (2D) or `z = 0` (3D), centred; the 3D patch is
/// a square. The disk arc is centred at angle π/2, so an initial length of π
/// is the whole upper half circle.
pub fn make_schedule(
    domain: Domain,
    gamma1_area: f64,
    profile: DecayProfile,
    anchor: Anchor,
) -> Result<BoundarySchedule> {
    domain.validate()?;
    profile.validate()?;
    if !(gamma1_area > 0.0 && gamma1_area < domain.boundary_measure()) {
        return Err(Error::domain(format!(
            "gamma1 area {gamma1_area} must lie in (0, {})",
            domain.boundary_measure()
        )));
    }
    let initial = match domain {
        Domain::Box2d { a, .. } => {
            if gamma1_area > a {
                return Err(Error::domain(format!(
                    "gamma1 area {gamma1_area} exceeds the length {a} of the radiating edge"
                )));
            }
            let start = 0.5 * (a - gamma1_area);
            BoundaryRegion::Arc(BoundaryArc { edge: 2, start, end: start + gamma1_area })
        }
        Domain::Box3d { a, b, .. } => {
            let side = gamma1_area.sqrt();
            if side > a.min(b) {
                return Err(Error::domain(format!(
                    "square patch of area {gamma1_area} does not fit on the face z = 0"
                )));
            }
            let lo = [0.5 * (a - side), 0.5 * (b - side)];
            BoundaryRegion::Patch(BoundaryPatch { face: 4, lo, hi: [lo[0] + side, lo[1] + side] })
        }
        Domain::Disk2d => {
            if gamma1_area > 2.0 * FRAC_PI_2 * 2.0 {
                return Err(Error::domain("arc longer than the circle"));
            }
            let start = FRAC_PI_2 - 0.5 * gamma1_area;
            let (start, end) = if start < 0.0 {
                (0.0, gamma1_area)
            } else {
                (start, start + gamma1_area)
            };
            BoundaryRegion::Arc(BoundaryArc { edge: 0, start, end })
        }
    };
    Ok(BoundarySchedule { domain, initial, profile, anchor })
}

impl BoundarySchedule {
    /// Fully insulated boundary (`Γ₁ = ∅`).
    pub fn insulated(domain: Domain) -> Self {
        BoundarySchedule {
            domain,
            initial: BoundaryRegion::Empty,
            profile: DecayProfile::Constant,
            anchor: Anchor::Center,
        }
    }

    /// Schedule with an explicitly placed initial region.
    pub fn with_region(
        domain: Domain,
        initial: BoundaryRegion,
        profile: DecayProfile,
        anchor: Anchor,
    ) -> Result<Self> {
        domain.validate()?;
        profile.validate()?;
        if let (Some(face), Some((lo, hi))) = (initial.face(), initial.bounds()) {
            let extent = domain.face_extent(face)?;
            if extent.len() != lo.len() {
                return Err(Error::domain("region dimension does not match the face"));
            }
            for k in 0..lo.len() {
                if !(lo[k] >= 0.0 && lo[k] < hi[k] && hi[k] <= extent[k]) {
                    return Err(Error::domain(format!(
                        "region bounds [{}, {}] outside face extent {}",
                        lo[k], hi[k], extent[k]
                    )));
                }
            }
        }
        Ok(BoundarySchedule { domain, initial, profile, anchor })
    }

    pub fn initial_area(&self) -> f64 {
        self.initial.measure()
    }

    /// `A(t) = |Γ₁|·f(t)`.
    pub fn area(&self, t: f64) -> f64 {
        self.initial_area() * self.profile.value(t)
    }

    /// The radiating region `Γ₁,ₜ`.
    pub fn arc_at(&self, t: f64) -> Result<BoundaryRegion> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("time must be nonnegative, got {t}")));
        }
        let f = self.profile.value(t);
        if f >= 1.0 {
            return Ok(self.initial);
        }
        Ok(match self.initial {
            BoundaryRegion::Empty => BoundaryRegion::Empty,
            BoundaryRegion::Arc(a) => {
                let m0 = a.measure();
                let cut = m0 - m0 * f;
                let (start, end) = match self.anchor {
                    Anchor::Center => (a.start + 0.5 * cut, a.end - 0.5 * cut),
                    Anchor::LeftEnd => (a.start, a.end - cut),
                };
                if end > start {
                    BoundaryRegion::Arc(BoundaryArc { edge: a.edge, start, end })
                } else {
                    BoundaryRegion::Empty
                }
            }
            BoundaryRegion::Patch(p) => {
                let scale = f.sqrt();
                let mut lo = p.lo;
                let mut hi = p.hi;
                for k in 0..2 {
                    let side = p.hi[k] - p.lo[k];
                    let cut = side - side * scale;
                    match self.anchor {
                        Anchor::Center => {
                            lo[k] = p.lo[k] + 0.5 * cut;
                            hi[k] = p.hi[k] - 0.5 * cut;
                        }
                        Anchor::LeftEnd => hi[k] = p.hi[k] - cut,
                    }
                }
                if hi[0] > lo[0] && hi[1] > lo[1] {
                    BoundaryRegion::Patch(BoundaryPatch { face: p.face, lo, hi })
                } else {
                    BoundaryRegion::Empty
                }
            }
        })
    }
}

/// Initial temperature `u₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialData {
    Constant { m0: f64 },
    /// `m0·(1 − amp·(1 − Πᵢ cos(kπxᵢ/Lᵢ))/2)` with `Lᵢ` the box sides
    /// (1 on the disk). Its maximum `m0` is attained at the origin.
    Cosine { m0: f64, amp: f64, k: usize },
    /// Values at the solver nodes of a grid with `resolution` cells per axis.
    Nodal { resolution: usize, values: Vec<f64> },
}

impl InitialData {
    pub fn constant(m0: f64) -> Self {
        InitialData::Constant { m0 }
    }

    /// `M₀ = max u₀`.
    pub fn max_value(&self) -> f64 {
        match self {
            InitialData::Constant { m0 } | InitialData::Cosine { m0, .. } => *m0,
            InitialData::Nodal { values, .. } => values.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = match self {
            InitialData::Constant { m0 } => !(m0.is_finite() && *m0 > 0.0),
            InitialData::Cosine { m0, amp, .. } => {
                !(m0.is_finite() && *m0 > 0.0 && (0.0..=1.0).contains(amp))
            }
            InitialData::Nodal { values, .. } => {
                values.iter().any(|v| !v.is_finite() || *v < 0.0)
                    || values.iter().all(|v| *v == 0.0)
            }
        };
        if bad {
            Err(Error::validation("initial data must be finite, nonnegative and not identically zero"))
        } else {
            Ok(())
        }
    }

    /// Pointwise value for the analytic kinds, `None` for nodal data.
    pub fn value(&self, domain: &Domain, x: &[f64]) -> Option<f64> {
        match self {
            InitialData::Constant { m0 } => Some(*m0),
            InitialData::Cosine { m0, amp, k } => {
                let ls = domain.box_lengths().unwrap_or_else(|| vec![1.0; x.len()]);
                let prod: f64 = x
                    .iter()
                    .zip(&ls)
                    .map(|(xi, l)| (*k as f64 * PI * xi / l).cos())
                    .product();
                Some(m0 * (1.0 - 0.5 * amp * (1.0 - prod)))
            }
            InitialData::Nodal { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn domain_measures_match_closed_forms() {
        let d = Domain::box2d(1.5, 0.5).unwrap();
        assert_eq!(d.volume(), 0.75);
        assert_eq!(d.boundary_measure(), 4.0);
        let d3 = Domain::box3d(1.0, 2.0, 3.0).unwrap();
        assert!((d3.volume() - 6.0).abs() < 1e-12);
        assert!((d3.boundary_measure() - 22.0).abs() < 1e-12);
        let disk = Domain::disk2d();
        assert!((disk.volume() - PI).abs() < 1e-12);
        assert!((disk.boundary_measure() - 2.0 * PI).abs() < 1e-12);
        assert!(Domain::box2d(0.0, 1.0).is_err());
    }

    #[test]
    fn constant_profile_keeps_area() {
        let s = make_schedule(Domain::unit_square(), 0.1, DecayProfile::Constant, Anchor::Center)
            .unwrap();
        for t in [0.0, 0.3, 10.0, 1e6] {
            assert!((s.arc_at(t).unwrap().measure() - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn polynomial_profile_area_at_one() {
        let p = DecayProfile::polynomial(1.0, 2.0).unwrap();
        let s = make_schedule(Domain::unit_square(), 0.1, p, Anchor::Center).unwrap();
        assert!((s.arc_at(1.0).unwrap().measure() - 0.025).abs() < 1e-15);
        assert!(s.arc_at(1e9).unwrap().measure() < 1e-15);
    }

    #[test]
    fn disk_cap_matches_arc_length_quadrature() {
        let s = make_schedule(
            Domain::disk2d(),
            PI,
            DecayProfile::SphericalCap { rate: 1.0 },
            Anchor::Center,
        )
        .unwrap();
        let gl = crate::numeric::GaussLegendre::new(16);
        for t in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let arc = s.arc_at(t).unwrap();
            // arc length of the graph x₂ = √(1 − x₁²) over |x₁| < e^{-t}
            let r = (-t).exp();
            let x_max = r.min(1.0 - 1e-16);
            let len = if r >= 1.0 {
                PI
            } else {
                gl.composite(-x_max, x_max, 64, |x| 1.0 / (1.0 - x * x).sqrt())
            };
            let closed = 2.0 * r.asin();
            assert!((arc.measure() - closed).abs() < 1e-12, "t={t}");
            if r < 1.0 {
                assert!((len - closed).abs() < 1e-10, "t={t}: {len} vs {closed}");
            }
            let (lo, hi) = arc.bounds().unwrap();
            assert!((0.5 * (lo[0] + hi[0]) - FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let d = Domain::unit_square();
        assert!(make_schedule(d, 0.0, DecayProfile::Constant, Anchor::Center).is_err());
        assert!(make_schedule(d, 4.5, DecayProfile::Constant, Anchor::Center).is_err());
        let s = make_schedule(d, 0.2, DecayProfile::Constant, Anchor::Center).unwrap();
        assert!(matches!(s.arc_at(-1.0), Err(Error::Domain(_))));
        let bad = DecayProfile::table(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.7)]);
        assert!(matches!(bad, Err(Error::Validation(_))));
    }

    #[test]
    fn t_zero_returns_initial() {
        let p = DecayProfile::Exponential { rate: 3.0 };
        let s = make_schedule(Domain::unit_square(), 0.3, p, Anchor::LeftEnd).unwrap();
        assert_eq!(s.arc_at(0.0).unwrap(), s.initial);
    }

    #[test]
    fn box3d_patch_shrinks_by_area() {
        let d = Domain::box3d(1.0, 1.0, 1.0).unwrap();
        let p = DecayProfile::polynomial(2.0, 3.0).unwrap();
        let s = make_schedule(d, 0.09, p.clone(), Anchor::Center).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let m = s.arc_at(t).unwrap().measure();
            assert!((m / 0.09 - p.value(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_profile_interpolates() {
        let p = DecayProfile::table(vec![(0.0, 1.0), (1.0, 0.5), (3.0, 0.25)]).unwrap();
        assert_eq!(p.value(0.5), 0.75);
        assert_eq!(p.value(2.0), 0.375);
        assert_eq!(p.value(10.0), 0.25);
    }

    fn arb_profile() -> impl Strategy<Value = DecayProfile> {
        prop_oneof![
            Just(DecayProfile::Constant),
            (0.01f64..100.0, 0.1f64..6.0)
                .prop_map(|(rate, beta)| DecayProfile::Polynomial { rate, beta }),
            (0.01f64..10.0).prop_map(|rate| DecayProfile::Exponential { rate }),
            (0.01f64..10.0).prop_map(|rate| DecayProfile::SphericalCap { rate }),
        ]
    }

    proptest! {
        #[test]
        fn nesting_and_measure(
            profile in arb_profile(),
            area in 0.01f64..0.9,
            left in any::<bool>(),
            t1 in 0.0f64..50.0,
            dt in 0.0f64..50.0,
            three_d in any::<bool>(),
        ) {
            let anchor = if left { Anchor::LeftEnd } else { Anchor::Center };
            let domain = if three_d { Domain::box3d(1.0, 1.2, 0.8).unwrap() } else { Domain::unit_square() };
            let s = make_schedule(domain, area, profile.clone(), anchor).unwrap();
            let early = s.arc_at(t1).unwrap();
            let late = s.arc_at(t1 + dt).unwrap();
            prop_assert!(late.is_subset_of(&early));
            if let (Some((l0, h0)), Some((l1, h1))) = (early.bounds(), late.bounds()) {
                for k in 0..l0.len() {
                    prop_assert!(l1[k] >= l0[k] && h1[k] <= h0[k]);
                }
            }
            let f = profile.value(t1);
            if f > 1e-6 {
                prop_assert!((early.measure() / s.initial.measure() - f).abs() <= 1e-12);
            }
        }
    }
}
