//! Sparse symmetric storage, banded Cholesky and Jacobi-preconditioned CG.

/// Symmetric matrix in compressed-row form (both triangles stored).
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(entries.len());
        let mut val: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col.push(j);
            val.push(v);
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }
}

/// Lower-triangular band factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i-bw..=i]`.
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &Csr) -> Option<Self> {
        let n = a.n;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    band[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let kl = lo.max(j.saturating_sub(bw));
                let mut s = band[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in kl..j {
                    s -= band[ri + k] * band[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Some(Self { n, bw, band })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let mut s = b[i];
            for k in lo..i {
                s -= self.band[ri + k] * b[k];
            }
            b[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            b[i] /= self.band[i * w + bw];
            let bi = b[i];
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            for k in lo..i {
                b[k] -= self.band[ri + k] * bi;
            }
        }
    }
}

/// Jacobi-preconditioned conjugate gradients; returns the iteration count
/// or `None` when `max_iter` is exhausted.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Option<usize> {
    let n = a.n;
    let diag: Vec<f64> = (0..n)
        .map(|i| a.row(i).find(|(j, _)| *j == i).map(|(_, v)| v).unwrap_or(1.0))
        .collect();
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= rel_tol * b_norm {
            return Some(it);
        }
        a.mul(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn cholesky_and_cg_solve_the_same_system() {
        let a = laplacian_1d(50, 0.1);
        assert_eq!(a.bandwidth(), 1);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let f = BandedCholesky::factor(&a).unwrap();
        let mut x1 = b.clone();
        f.solve(&mut x1);
        let mut x2 = vec![0.0; 50];
        pcg(&a, &b, &mut x2, 1e-14, 500).unwrap();
        let mut r = vec![0.0; 50];
        a.mul(&x1, &mut r);
        for i in 0..50 {
            assert!((r[i] - b[i]).abs() < 1e-12);
            assert!((x1[i] - x2[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn wide_band() {
        // 2D five-point stencil on a 6×5 grid, bandwidth 6
        let (nx, ny) = (6, 5);
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = i + nx * j;
                t.push((k, k, 4.5));
                if i > 0 {
                    t.push((k, k - 1, -1.0));
                    t.push((k - 1, k, -1.0));
                }
                if j > 0 {
                    t.push((k, k - nx, -1.0));
                    t.push((k - nx, k, -1.0));
                }
            }
        }
        let a = Csr::from_triplets(nx * ny, t);
        assert_eq!(a.bandwidth(), nx);
        let b: Vec<f64> = (0..nx * ny).map(|i| 1.0 + i as f64).collect();
        let mut x = b.clone();
        BandedCholesky::factor(&a).unwrap().solve(&mut x);
        let mut r = vec![0.0; nx * ny];
        a.mul(&x, &mut r);
        assert!(r.iter().zip(&b).all(|(r, b)| (r - b).abs() < 1e-11));
        assert!(BandedCholesky::factor(&laplacian_1d(4, -3.0)).is_none());
    }
}
