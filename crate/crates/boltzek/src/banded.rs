//! Banded LU factorization with partial pivoting (LAPACK `gbtrf` layout ideas,
//! row-major storage), generic over real and complex scalars.

use nalgebra::ComplexField;

#[derive(Clone, Debug)]
pub struct BandLu<T: ComplexField> {
    n: usize,
    kl: usize,
    ku: usize,
    // row i holds columns i-kl ..= i+kl+ku
    width: usize,
    ab: Vec<T>,
    // multipliers of step k: rows k+1 ..= k+kl
    l: Vec<T>,
    piv: Vec<usize>,
    /// `min |u_kk| / max |a_ij|`.
    pub pivot_ratio: f64,
}

impl<T: ComplexField<RealField = f64> + Copy> BandLu<T> {
    /// Factorizes the `n x n` matrix given by `entries(i) -> [(j, a_ij)]` with
    /// lower/upper bandwidths `kl`, `ku`.
    pub fn factor<F>(n: usize, kl: usize, ku: usize, mut entries: F) -> Self
    where
        F: FnMut(usize) -> Vec<(usize, T)>,
    {
        let width = 2 * kl + ku + 1;
        let mut ab = vec![T::zero(); n * width];
        let mut amax: f64 = 0.0;
        for i in 0..n {
            for (j, a) in entries(i) {
                assert!(j + kl >= i && j <= i + ku, "entry ({i},{j}) outside band");
                ab[i * width + j + kl - i] += a;
                amax = amax.max(a.modulus());
            }
        }
        let mut lu = Self { n, kl, ku, width, ab, l: vec![T::zero(); n * kl.max(1)], piv: vec![0; n], pivot_ratio: 0.0 };
        let mut umin = f64::INFINITY;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).modulus();
            for i in k + 1..=last_row {
                let m = lu.at(i, k).modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            lu.piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let a = lu.at(k, j);
                    let b = lu.at(p, j);
                    lu.set(k, j, b);
                    lu.set(p, j, a);
                }
            }
            let pivot = lu.at(k, k);
            umin = umin.min(pivot.modulus());
            if pivot.modulus() == 0.0 {
                continue;
            }
            for i in k + 1..=last_row {
                let m = lu.at(i, k) / pivot;
                lu.l[k * kl + (i - k - 1)] = m;
                if m.modulus() == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let v = lu.at(i, j) - m * lu.at(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        lu.pivot_ratio = if amax > 0.0 { umin / amax } else { 0.0 };
        lu
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.ab[i * self.width + j + self.kl - i]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        self.ab[i * self.width + j + self.kl - i] = v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_singular(&self) -> bool {
        self.pivot_ratio == 0.0
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.l[k * self.kl + (i - k - 1)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + self.kl + self.ku).min(n - 1) {
                s -= self.at(i, j) * b[j];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solves `A^T x = b` (or `A^H x = b` when `conjugate`) in place.
    pub fn solve_transpose_in_place(&self, b: &mut [T], conjugate: bool) {
        let n = self.n;
        let c = |v: T| if conjugate { v.conjugate() } else { v };
        // U^T y = b
        for i in 0..n {
            let mut s = b[i];
            let lo = i.saturating_sub(self.kl + self.ku);
            for j in lo..i {
                s -= c(self.at(j, i)) * b[j];
            }
            b[i] = s / c(self.at(i, i));
        }
        // L^T, undoing the interleaved row swaps
        for k in (0..n).rev() {
            let mut s = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                s -= c(self.l[k * self.kl + (i - k - 1)]) * b[i];
            }
            b[k] = s;
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}
