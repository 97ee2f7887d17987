#![allow(dead_code)]

use boltzek::landscape::analyze;
use boltzek::potential::Potential;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

pub struct Lattice {
    pub lo: Vec<f64>,
    pub step: Vec<f64>,
    pub n: Vec<usize>,
}

impl Lattice {
    pub fn new(p: &dyn Potential<f64>, n: usize) -> Self {
        let w = p.window();
        let d = p.dim();
        Lattice { lo: w.lo.clone(), step: (0..d).map(|i| (w.hi[i] - w.lo[i]) / (n - 1) as f64).collect(), n: vec![n; d] }
    }
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }
    pub fn point(&self, k: usize) -> Vec<f64> {
        match self.n.len() {
            1 => vec![self.lo[0] + k as f64 * self.step[0]],
            _ => vec![self.lo[0] + (k % self.n[0]) as f64 * self.step[0], self.lo[1] + (k / self.n[0]) as f64 * self.step[1]],
        }
    }
    pub fn nearest(&self, x: &[f64]) -> usize {
        let i = |d: usize| (((x[d] - self.lo[d]) / self.step[d]).round() as usize).min(self.n[d] - 1);
        match self.n.len() {
            1 => i(0),
            _ => i(0) + self.n[0] * i(1),
        }
    }
    // 8-neighbourhood in 2D
    pub fn neighbours(&self, k: usize) -> Vec<usize> {
        if self.n.len() == 1 {
            return [k.wrapping_sub(1), k + 1].into_iter().filter(|&j| j < self.n[0]).collect();
        }
        let (i, j) = ((k % self.n[0]) as i64, (k / self.n[0]) as i64);
        let mut out = Vec::new();
        for di in -1..=1 {
            for dj in -1..=1 {
                let (a, b) = (i + di, j + dj);
                if (di, dj) != (0, 0) && a >= 0 && b >= 0 && (a as usize) < self.n[0] && (b as usize) < self.n[1] {
                    out.push(a as usize + self.n[0] * b as usize);
                }
            }
        }
        out
    }
}

// minimax of V/2 over lattice paths from `start` to any node in `targets`
pub fn minimax(lat: &Lattice, half: &[f64], start: usize, targets: &[usize]) -> f64 {
    let mut best = vec![f64::INFINITY; lat.len()];
    let mut heap = BinaryHeap::new();
    let key = |v: f64| Reverse((v * 1e12) as i64);
    best[start] = half[start];
    heap.push((key(half[start]), start));
    while let Some((_, k)) = heap.pop() {
        if targets.contains(&k) {
            return best[k];
        }
        for j in lat.neighbours(k) {
            let c = best[k].max(half[j]);
            if c < best[j] {
                best[j] = c;
                heap.push((key(c), j));
            }
        }
    }
    f64::INFINITY
}

/// `(S, oracle S, energy quantum)` for every non-global labeled minimum; the
/// oracle is the minimax of V/2 from m to the minima with strictly lower V.
pub fn s_oracle_rows(p: &dyn Potential<f64>, res: usize) -> Vec<(f64, f64, f64)> {
    let lab = analyze(p, 48, res).unwrap();
    let lat = Lattice::new(p, res);
    let half: Vec<f64> = (0..lat.len()).map(|k| 0.5 * p.value(&lat.point(k))).collect();
    lab.non_global()
        .map(|m| {
            let lower: Vec<usize> = lab
                .minima
                .iter()
                .filter(|o| o.point.value < m.point.value)
                .map(|o| lat.nearest(&o.point.location))
                .collect();
            let sigma = minimax(&lat, &half, lat.nearest(&m.point.location), &lower);
            (m.s.unwrap(), sigma - 0.5 * m.point.value, lab.quantum)
        })
        .collect()
}
