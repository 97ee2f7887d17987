//! Compressed sparse row storage.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::{self, Write};

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed, zeros dropped.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
                continue;
            }
            col.push(c);
            val.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self { n, row_ptr, col, val };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        let mut rp = vec![0; self.n + 1];
        let mut col = Vec::with_capacity(self.col.len());
        let mut val = Vec::with_capacity(self.val.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.val[k] != 0.0 {
                    col.push(self.col[k]);
                    val.push(self.val[k]);
                }
            }
            rp[i + 1] = col.len();
        }
        self.row_ptr = rp;
        self.col = col;
        self.val = val;
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col[k], self.val[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, a)| a * x[j]).sum()).collect()
    }

    pub fn mul_c(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| self.row(i).map(|(j, a)| x[j] * a).sum()).collect()
    }

    pub fn mul_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                y[j] += a * x[i];
            }
        }
        y
    }

    pub fn mul_t_c(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                y[j] += x[i] * a;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let t = (0..self.n).flat_map(|i| self.row(i).map(move |(j, a)| (j, i, a))).collect();
        Self::from_triplets(self.n, t)
    }

    /// `(self + self^T) / 2`.
    pub fn symmetric_part(&self) -> Self {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * self.nnz());
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                t.push((i, j, 0.5 * a));
                t.push((j, i, 0.5 * a));
            }
        }
        Self::from_triplets(self.n, t)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, a)| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_one(&self) -> f64 {
        self.transpose().norm_inf()
    }

    /// Largest `|i - j|` below and above the diagonal.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Spectral norm estimate by power iteration on `A^T A`.
    pub fn norm2_estimate(&self, iters: usize) -> f64 {
        let mut x: Vec<f64> = (0..self.n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        let mut s = 0.0;
        for _ in 0..iters {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nx);
            let y = self.mul_t(&self.mul(&x));
            s = y.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().sqrt();
            x = y;
        }
        s
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// Matrix Market coordinate format (1-based indices).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, a)?;
            }
        }
        Ok(())
    }
}
