//! Vertex-centred finite-volume discretisation.
//!
//! Boxes use a uniform grid with `resolution` cells per axis; boundary nodes
//! own half (edge) or quarter (corner) control volumes, which is the
//! conservative form of the ghost-node closure. The unit disk uses a polar
//! grid with a centre node whose control volume is the disk of radius `Δr/2`,
//! giving the usual `4(ū₁ − u₀)/Δr²` regularisation at `r = 0`.

use std::f64::consts::PI;

use super::linalg::Csr;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryRegion, Domain, InitialData};

/// Part of a boundary face owned by one node, in face coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub node: usize,
    pub face: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub measure: f64,
}

/// How partially covered boundary facets are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcCoverage {
    /// Weight by the exact covered measure.
    #[default]
    Fractional,
    /// Full weight inside, half weight for facets cut by the interface, zero outside.
    Snapped,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain,
    pub resolution: usize,
    pub dim: usize,
    /// Node coordinates, `dim` per node.
    pub coords: Vec<f64>,
    /// Control-volume measures.
    pub volume: Vec<f64>,
    /// Conductance graph: `(K u)_i = Σ_j c_ij (u_i − u_j)`.
    pub conductance: Csr,
    pub facets: Vec<Facet>,
    /// Points per axis for boxes, `(n_r, n_θ)` for the disk.
    pub shape: Vec<usize>,
}

impl Grid {
    pub fn new(domain: Domain, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::validation("grid resolution must be at least 2"));
        }
        domain.validate()?;
        match domain {
            Domain::Disk2d => Ok(Self::disk(resolution)),
            _ => Ok(Self::boxed(domain, resolution)),
        }
    }

    pub fn len(&self) -> usize {
        self.volume.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volume.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn boxed(domain: Domain, n: usize) -> Self {
        let ls = domain.box_lengths().unwrap_or_default();
        let dim = ls.len();
        let h: Vec<f64> = ls.iter().map(|l| l / n as f64).collect();
        let stride = n + 1;
        let count = stride.pow(dim as u32);
        let mut coords = Vec::with_capacity(count * dim);
        let mut volume = Vec::with_capacity(count);
        let mut entries = Vec::new();
        let mut facets = Vec::new();
        let idx_of = |ix: &[usize]| ix.iter().rev().fold(0, |acc, i| acc * stride + i);
        let mut ix = vec![0usize; dim];
        for node in 0..count {
            let mut rest = node;
            for v in ix.iter_mut() {
                *v = rest % stride;
                rest /= stride;
            }
            // half-width factors: ½ on the boundary planes
            let frac: Vec<f64> =
                ix.iter().map(|&i| if i == 0 || i == n { 0.5 } else { 1.0 }).collect();
            let widths: Vec<f64> = (0..dim).map(|a| frac[a] * h[a]).collect();
            volume.push(widths.iter().product());
            for a in 0..dim {
                coords.push(ix[a] as f64 * h[a]);
            }
            for a in 0..dim {
                let cross: f64 = (0..dim).filter(|&b| b != a).map(|b| widths[b]).product();
                if ix[a] < n {
                    let mut jx = ix.clone();
                    jx[a] += 1;
                    let c = cross / h[a];
                    let j = idx_of(&jx);
                    entries.push((node, j, c));
                    entries.push((j, node, c));
                }
                for side in 0..2 {
                    if ix[a] != side * n {
                        continue;
                    }
                    let mut lo = [0.0; 2];
                    let mut hi = [0.0; 2];
                    let mut t = 0;
                    for b in (0..dim).filter(|&b| b != a) {
                        let x = ix[b] as f64 * h[b];
                        lo[t] = (x - 0.5 * h[b]).max(0.0);
                        hi[t] = (x + 0.5 * h[b]).min(ls[b]);
                        t += 1;
                    }
                    facets.push(Facet { node, face: 2 * a + side, lo, hi, measure: cross });
                }
            }
        }
        let conductance = Csr::from_triplets(count, entries);
        Self {
            domain,
            resolution: n,
            dim,
            coords,
            volume,
            conductance,
            facets,
            shape: vec![stride; dim],
        }
    }

    fn disk(n: usize) -> Self {
        let nr = (n / 2).max(2);
        let nt = (2 * n).max(8);
        let dr = 1.0 / nr as f64;
        let dth = 2.0 * PI / nt as f64;
        let count = 1 + nr * nt;
        let id = |i: usize, j: usize| 1 + (i - 1) * nt + (j % nt);
        let mut coords = vec![0.0, 0.0];
        let mut volume = vec![PI * (0.5 * dr).powi(2)];
        let mut entries = Vec::new();
        let mut facets = Vec::new();
        for i in 1..=nr {
            let r = i as f64 * dr;
            let outer = i == nr;
            for j in 0..nt {
                let th = j as f64 * dth;
                coords.push(r * th.cos());
                coords.push(r * th.sin());
                let r_out = if outer { 1.0 } else { r + 0.5 * dr };
                let r_in = r - 0.5 * dr;
                volume.push(0.5 * (r_out * r_out - r_in * r_in) * dth);
                let node = id(i, j);
                let radial_len = if outer { 0.5 * dr } else { dr };
                let c = radial_len / (r * dth);
                let next = id(i, j + 1);
                entries.push((node, next, c));
                entries.push((next, node, c));
                let inner = if i == 1 { 0 } else { id(i - 1, j) };
                let c = r_in * dth / dr;
                entries.push((node, inner, c));
                entries.push((inner, node, c));
                if outer {
                    facets.push(Facet {
                        node,
                        face: 0,
                        lo: [th - 0.5 * dth, 0.0],
                        hi: [th + 0.5 * dth, 0.0],
                        measure: dth,
                    });
                }
            }
        }
        let conductance = Csr::from_triplets(count, entries);
        Self {
            domain: Domain::Disk2d,
            resolution: n,
            dim: 2,
            coords,
            volume,
            conductance,
            facets,
            shape: vec![nr, nt],
        }
    }

    /// `w_i`: radiating measure attributed to each node for `region`.
    pub fn flux_weights(&self, region: &BoundaryRegion, coverage: ArcCoverage) -> Vec<(usize, f64)> {
        let periodic = if self.domain.is_box() { None } else { Some(2.0 * PI) };
        let mut out: Vec<(usize, f64)> = Vec::new();
        if region.is_empty() {
            return out;
        }
        let tdim = self.dim - 1;
        for f in &self.facets {
            let covered = region.overlap(f.face, &f.lo[..tdim], &f.hi[..tdim], periodic);
            if covered <= 0.0 {
                continue;
            }
            let w = match coverage {
                ArcCoverage::Fractional => covered,
                ArcCoverage::Snapped => {
                    let frac = covered / f.measure;
                    if frac >= 1.0 - 1e-12 {
                        f.measure
                    } else if frac <= 1e-12 {
                        0.0
                    } else {
                        0.5 * f.measure
                    }
                }
            };
            if w <= 0.0 {
                continue;
            }
            match out.last_mut() {
                Some((node, acc)) if *node == f.node => *acc += w,
                _ => out.push((f.node, w)),
            }
        }
        out.sort_by_key(|(n, _)| *n);
        out.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        out
    }

    /// Initial data sampled at the nodes.
    pub fn sample(&self, u0: &InitialData) -> Result<Vec<f64>> {
        u0.validate()?;
        match u0 {
            InitialData::Nodal { resolution, values } => {
                if *resolution != self.resolution || values.len() != self.len() {
                    return Err(Error::validation(format!(
                        "nodal initial data has {} values at resolution {resolution}, grid needs {} at {}",
                        values.len(),
                        self.len(),
                        self.resolution
                    )));
                }
                Ok(values.clone())
            }
            _ => Ok((0..self.len())
                .map(|i| u0.value(&self.domain, self.point(i)).unwrap_or(0.0))
                .collect()),
        }
    }

    /// `Σ_i W_i u_i`.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        self.volume.iter().zip(u).map(|(w, v)| w * v).sum()
    }

    /// `(K u)_i`.
    pub fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.conductance.row(i).map(|(j, c)| c * (u[i] - u[j])).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryArc, BoundaryPatch};

    #[test]
    fn volumes_sum_to_domain_measure() {
        for d in [Domain::box2d(1.0, 0.5).unwrap(), Domain::box3d(1.0, 2.0, 0.5).unwrap(), Domain::disk2d()] {
            let g = Grid::new(d, 8).unwrap();
            assert!((g.volume.iter().sum::<f64>() - d.volume()).abs() < 1e-12 * d.volume());
            let facet_total: f64 = g.facets.iter().map(|f| f.measure).sum();
            assert!((facet_total - d.boundary_measure()).abs() < 1e-12 * d.boundary_measure());
        }
    }

    #[test]
    fn bandwidth_follows_fast_axis() {
        let g = Grid::new(Domain::unit_square(), 16).unwrap();
        assert_eq!(g.conductance.bandwidth(), 17);
        let disk = Grid::new(Domain::disk2d(), 16).unwrap();
        assert_eq!(disk.conductance.bandwidth(), disk.shape[1]);
    }

    #[test]
    fn fractional_weights_recover_region_measure() {
        let g = Grid::new(Domain::unit_square(), 10).unwrap();
        let arc = BoundaryRegion::Arc(BoundaryArc { edge: 2, start: 0.33, end: 0.52 });
        let w: f64 = g.flux_weights(&arc, ArcCoverage::Fractional).iter().map(|x| x.1).sum();
        assert!((w - 0.19).abs() < 1e-14);
        // interface exactly on a node: that node gets half of its facet
        let arc = BoundaryRegion::Arc(BoundaryArc { edge: 2, start: 0.3, end: 0.6 });
        let w = g.flux_weights(&arc, ArcCoverage::Snapped);
        assert_eq!(w.first().unwrap().1, 0.05);
        let g3 = Grid::new(Domain::box3d(1.0, 1.0, 1.0).unwrap(), 6).unwrap();
        let p = BoundaryRegion::Patch(BoundaryPatch { face: 4, lo: [0.2, 0.3], hi: [0.7, 0.65] });
        let w: f64 = g3.flux_weights(&p, ArcCoverage::Fractional).iter().map(|x| x.1).sum();
        assert!((w - p.measure()).abs() < 1e-14);
        let disk = Grid::new(Domain::disk2d(), 12).unwrap();
        let wrap = BoundaryRegion::Arc(BoundaryArc { edge: 0, start: 0.0, end: 1.0 });
        let w: f64 = disk.flux_weights(&wrap, ArcCoverage::Fractional).iter().map(|x| x.1).sum();
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        for d in [Domain::unit_square(), Domain::disk2d()] {
            let g = Grid::new(d, 8).unwrap();
            let u = vec![3.0; g.len()];
            let mut out = vec![1.0; g.len()];
            g.apply_laplacian(&u, &mut out);
            assert!(out.iter().all(|v| v.abs() < 1e-12));
        }
    }
}
