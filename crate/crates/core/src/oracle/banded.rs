//! Banded symmetric positive-definite LDLᵀ factorization.
//!
//! Storage keeps the lower band row by row: entry `(i, i - k)` lives at
//! `i * (bw + 1) + k`, so `k = 0` is the diagonal.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly to `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let k = self.idx(hi, lo);
        self.band[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            0.0
        } else {
            self.band[self.idx(hi, lo)]
        }
    }

    /// Matrix-vector product, used for residual checks.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.band[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    pub fn factor(mut self) -> Result<BandedLdlt> {
        let (n, bw) = (self.n, self.bw);
        let mut d = vec![0.0; n];
        for i in 0..n {
            let diag_in = self.band[self.idx(i, i)];
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                let mut s = self.band[self.idx(i, j)];
                for m in j0.max(j.saturating_sub(bw))..j {
                    s -= self.band[self.idx(i, m)] * d[m] * self.band[self.idx(j, m)];
                }
                let k = self.idx(i, j);
                self.band[k] = s / d[j];
            }
            let mut s = diag_in;
            for m in j0..i {
                let l = self.band[self.idx(i, m)];
                s -= l * l * d[m];
            }
            if !(s > diag_in.abs() * 1e-14) {
                return Err(Error::UnsolvableTopology(format!(
                    "nodal matrix is singular at unknown {i} (pivot {s:e})"
                )));
            }
            d[i] = s;
        }
        Ok(BandedLdlt { l: self, d })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLdlt {
    l: BandedSpd,
    d: Vec<f64>,
}

impl BandedLdlt {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.l.n, self.l.bw);
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for m in i.saturating_sub(bw)..i {
                s -= self.l.band[self.l.idx(i, m)] * x[m];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.l.band[self.l.idx(k, i)] * x[k];
            }
            x[i] = s;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_laplacian() {
        // chain of unit resistors grounded at one end, unit current at the other
        let n = 50;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, if i == n - 1 { 1.0 } else { 2.0 });
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let x = a.clone().factor().unwrap().solve(&b);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - (i + 1) as f64).abs() < 1e-10);
        }
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn solves_wider_band_against_dense_reference() {
        let n = 12;
        let bw = 3;
        let mut a = BandedSpd::zeros(n, bw);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 1..=bw {
                if i >= k {
                    let v = -0.1 * ((i * 7 + k * 3) % 5 + 1) as f64;
                    a.add(i, i - k, v);
                    dense[i][i - k] += v;
                    dense[i - k][i] += v;
                }
            }
        }
        for i in 0..n {
            let row: f64 = dense[i].iter().map(|v: &f64| v.abs()).sum();
            a.add(i, i, row + 1.0);
            dense[i][i] += row + 1.0;
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = a.factor().unwrap().solve(&b);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = BandedSpd::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, -1.0);
        assert!(matches!(a.factor(), Err(Error::UnsolvableTopology(_))));
    }
}
