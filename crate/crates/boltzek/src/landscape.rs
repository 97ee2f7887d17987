//! Critical points, separating saddles and the adapted labeling of a Morse potential.
//!
//! Connectivity of sublevel sets is computed on a uniform grid with union-find
//! (nearest neighbours in d = 1, Moore neighbourhood in d = 2).

use crate::error::{Error, Result};
use crate::potential::{Potential, Window};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct CriticalPoint<T: Real> {
    pub location: Vec<T>,
    /// Morse index.
    pub index: usize,
    pub value: T,
    pub hessian: DMatrix<T>,
    /// Hessian eigenvalues, ascending.
    pub hess_eigen: Vec<T>,
}

impl<T: Real> CriticalPoint<T> {
    pub fn is_minimum(&self) -> bool {
        self.index == 0
    }

    pub fn location_f64(&self) -> Vec<f64> {
        self.location.iter().map(|x| x.f64()).collect()
    }

    /// Unit eigenvector of the most negative hessian eigenvalue.
    pub fn unstable_direction(&self) -> DVector<T> {
        let eig = SymmetricEigen::new(self.hessian.clone());
        let i = eig.eigenvalues.imin();
        eig.eigenvectors.column(i).into_owned()
    }
}

fn classify<T: Real>(p: &dyn Potential<T>, x: Vec<T>) -> Result<CriticalPoint<T>> {
    let hess = p.hess(&x);
    let eig = SymmetricEigen::new(hess.clone());
    let mut ev: Vec<T> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(&bad) = ev.iter().find(|e| e.abs() < T::tol(1e-8)) {
        return Err(Error::DegenerateCritical {
            location: x.iter().map(|v| v.f64()).collect(),
            eigenvalue: bad.f64(),
        });
    }
    let index = ev.iter().filter(|e| **e < T::zero()).count();
    Ok(CriticalPoint { value: p.value(&x), location: x, index, hessian: hess, hess_eigen: ev })
}

fn newton<T: Real>(p: &dyn Potential<T>, x0: &[T], gtol: T) -> Option<Vec<T>> {
    let w = p.window();
    let max_step = w.size() * T::c(0.1);
    let mut x = DVector::from_column_slice(x0);
    for _ in 0..100 {
        let g = p.grad(x.as_slice());
        if g.norm() <= gtol {
            return w.contains(x.as_slice()).then(|| x.as_slice().to_vec());
        }
        let dx = p.hess(x.as_slice()).lu().solve(&g)?;
        let n = dx.norm();
        let dx = if n > max_step { dx * (max_step / n) } else { dx };
        x -= dx;
        if !w.contains(x.as_slice()) {
            return None;
        }
    }
    None
}

/// Backtracking gradient descent from `x0`, polished by Newton.
pub fn descend<T: Real>(p: &dyn Potential<T>, x0: &[T]) -> Vec<T> {
    let w = p.window();
    let mut x = DVector::from_column_slice(x0);
    let mut step = w.size() * T::c(1e-2);
    let gtol = T::tol(1e-9);
    for _ in 0..20000 {
        let g = p.grad(x.as_slice());
        let gn = g.norm();
        if gn <= T::tol(1e-6) {
            break;
        }
        let f = p.value(x.as_slice());
        let mut t = step;
        loop {
            let y = &x - &g * (t / gn);
            if w.contains(y.as_slice()) && p.value(y.as_slice()) < f - T::c(1e-4) * t * gn {
                x = y;
                step = t * T::c(2.0);
                break;
            }
            t *= T::c(0.5);
            if t < T::eps() * T::c(16.0) {
                return x.as_slice().to_vec();
            }
        }
    }
    newton(p, x.as_slice(), gtol).unwrap_or_else(|| x.as_slice().to_vec())
}

/// Newton iterations from a `seeds_per_axis^d` lattice, with a descent fallback.
pub fn find_critical_points<T: Real>(
    p: &dyn Potential<T>,
    seeds_per_axis: usize,
) -> Result<Vec<CriticalPoint<T>>> {
    if seeds_per_axis < 8 {
        return Err(Error::InvalidInput("seeds_per_axis must be at least 8".into()));
    }
    let d = p.dim();
    let w = p.window();
    let gtol = T::tol(1e-9);
    let n = seeds_per_axis;
    let seed = |k: usize| -> Vec<T> {
        let mut r = k;
        (0..d)
            .map(|a| {
                let i = r % n;
                r /= n;
                w.lo[a] + (w.hi[a] - w.lo[a]) * T::c((i as f64 + 0.5) / n as f64)
            })
            .collect()
    };
    let total = n.pow(d as u32);
    let found: Vec<Vec<T>> = (0..total)
        .into_par_iter()
        .filter_map(|k| {
            let x0 = seed(k);
            newton(p, &x0, gtol).or_else(|| {
                let y = descend(p, &x0);
                newton(p, &y, gtol)
            })
        })
        .collect();
    let radius = w.size() * T::tol(1e-6);
    let mut uniq: Vec<Vec<T>> = Vec::new();
    for x in found {
        let dup = uniq.iter().any(|u| {
            u.iter().zip(&x).map(|(&a, &b)| (a - b) * (a - b)).fold(T::zero(), |s, v| s + v).sqrt() <= radius
        });
        if !dup {
            uniq.push(x);
        }
    }
    let mut pts = uniq.into_iter().map(|x| classify(p, x)).collect::<Result<Vec<_>>>()?;
    pts.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    let minima = pts.iter().filter(|c| c.is_minimum()).count();
    if minima < 2 {
        return Err(Error::NoMinima { found: minima });
    }
    Ok(pts)
}

/// Uniform grid covering a window, nodes on the boundary included.
#[derive(Clone, Debug)]
pub struct Grid<T: Real> {
    pub lo: Vec<T>,
    pub step: Vec<T>,
    pub n: Vec<usize>,
}

impl<T: Real> Grid<T> {
    pub fn new(w: &Window<T>, per_axis: usize) -> Self {
        let d = w.dim();
        Self {
            lo: w.lo.clone(),
            step: (0..d).map(|a| (w.hi[a] - w.lo[a]) / T::c((per_axis - 1) as f64)).collect(),
            n: vec![per_axis; d],
        }
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn multi(&self, k: usize) -> Vec<usize> {
        let mut r = k;
        self.n
            .iter()
            .map(|&n| {
                let i = r % n;
                r /= n;
                i
            })
            .collect()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().rev().zip(self.n.iter().rev()).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn point(&self, k: usize) -> Vec<T> {
        self.multi(k)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lo[a] + self.step[a] * T::c(i as f64))
            .collect()
    }

    pub fn nearest(&self, x: &[T]) -> usize {
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let r = ((x[a] - self.lo[a]) / self.step[a]).round().f64();
                r.clamp(0.0, (self.n[a] - 1) as f64) as usize
            })
            .collect();
        self.flat(&idx)
    }

    /// Nearest neighbours in d = 1; Moore neighbourhood in d = 2.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let idx = self.multi(k);
        let mut out = Vec::with_capacity(8);
        match self.dim() {
            1 => {
                if idx[0] > 0 {
                    out.push(k - 1);
                }
                if idx[0] + 1 < self.n[0] {
                    out.push(k + 1);
                }
            }
            _ => {
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let i = idx[0] as i64 + di;
                        let j = idx[1] as i64 + dj;
                        if i >= 0 && j >= 0 && (i as usize) < self.n[0] && (j as usize) < self.n[1] {
                            out.push(self.flat(&[i as usize, j as usize]));
                        }
                    }
                }
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
        }
        ra
    }
}

/// Component labels of `{values < tau}`; `None` outside the set.
pub fn components<T: Real>(grid: &Grid<T>, values: &[T], tau: T) -> Vec<Option<usize>> {
    let n = grid.len();
    let mut uf = UnionFind::new(n);
    for k in 0..n {
        if values[k] < tau {
            for j in grid.neighbors(k) {
                if j > k && values[j] < tau {
                    uf.union(k, j);
                }
            }
        }
    }
    (0..n).map(|k| (values[k] < tau).then(|| uf.find(k))).collect()
}

/// Number of connected components of `{values < tau}`.
pub fn component_count<T: Real>(grid: &Grid<T>, values: &[T], tau: T) -> usize {
    let mut roots: Vec<usize> = components(grid, values, tau).into_iter().flatten().collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// `V/2` sampled on the grid.
pub fn half_values<T: Real>(p: &dyn Potential<T>, grid: &Grid<T>) -> Vec<T> {
    (0..grid.len()).into_par_iter().map(|k| p.value(&grid.point(k)) * T::c(0.5)).collect()
}

/// Largest `|dV/2|` across a grid edge among edges touching `{V/2 <= cap}`.
pub fn energy_quantum<T: Real>(grid: &Grid<T>, values: &[T], cap: T) -> T {
    (0..grid.len())
        .filter(|&k| values[k] <= cap)
        .flat_map(|k| grid.neighbors(k).into_iter().map(move |j| (values[j] - values[k]).abs()))
        .fold(T::zero(), |m, v| if v > m { v } else { m })
}

#[derive(Clone, Debug)]
pub struct SeparatingSaddle<T: Real> {
    pub point: CriticalPoint<T>,
    /// Indices (into the critical point list) of the minima reached by descent
    /// along both unstable directions.
    pub descent_minima: [usize; 2],
}

impl<T: Real> SeparatingSaddle<T> {
    pub fn half_value(&self) -> T {
        self.point.value * T::c(0.5)
    }
}

#[derive(Clone, Debug)]
pub struct SaddleAnalysis<T: Real> {
    /// Distinct separating values of `V/2`, strictly decreasing.
    pub values: Vec<T>,
    pub saddles: Vec<SeparatingSaddle<T>>,
    pub grid: Grid<T>,
    pub half_v: Vec<T>,
    /// Grid energy quantum (in `V/2` units).
    pub quantum: T,
}

impl<T: Real> SaddleAnalysis<T> {
    pub fn delta(&self) -> T {
        self.quantum
    }
}

fn nearest_minimum<T: Real>(crit: &[CriticalPoint<T>], x: &[T]) -> usize {
    let dist = |c: &CriticalPoint<T>| {
        c.location.iter().zip(x).map(|(&a, &b)| (a - b) * (a - b)).fold(T::zero(), |s, v| s + v)
    };
    let mut best = usize::MAX;
    for (i, c) in crit.iter().enumerate() {
        if c.is_minimum() && (best == usize::MAX || dist(c) < dist(&crit[best])) {
            best = i;
        }
    }
    best
}

fn value_tol<T: Real>(crit: &[CriticalPoint<T>]) -> T {
    let scale = crit.iter().fold(T::one(), |m, c| if c.value.abs() > m { c.value.abs() } else { m });
    scale * T::tol(1e-9)
}

/// Decides which index-1 points separate their two descent components.
pub fn separating_saddles<T: Real>(
    p: &dyn Potential<T>,
    crit: &[CriticalPoint<T>],
    grid_resolution: usize,
) -> Result<SaddleAnalysis<T>> {
    let grid = Grid::new(p.window(), grid_resolution);
    let half_v = half_values(p, &grid);
    let cap = crit.iter().fold(T::min_value().unwrap(), |m, c| if c.value > m { c.value } else { m })
        * T::c(0.5);
    let quantum = energy_quantum(&grid, &half_v, cap);
    let w = p.window();
    let eps = w.size() * T::c(1e-3);

    let candidates: Vec<&CriticalPoint<T>> = crit.iter().filter(|c| c.index == 1).collect();
    let found: Vec<Option<SeparatingSaddle<T>>> = candidates
        .par_iter()
        .map(|s| {
            let e = s.unstable_direction();
            let ends: Vec<usize> = [T::one(), -T::one()]
                .iter()
                .map(|&sign| {
                    let x0: Vec<T> = s.location.iter().zip(e.iter()).map(|(&x, &ei)| x + sign * eps * ei).collect();
                    nearest_minimum(crit, &descend(p, &x0))
                })
                .collect();
            if ends[0] == ends[1] {
                return None;
            }
            let tau = s.value * T::c(0.5) - quantum;
            let cc = components(&grid, &half_v, tau);
            let a = cc[grid.nearest(&crit[ends[0]].location)];
            let b = cc[grid.nearest(&crit[ends[1]].location)];
            match (a, b) {
                (Some(a), Some(b)) if a != b => {
                    Some(SeparatingSaddle { point: (*s).clone(), descent_minima: [ends[0], ends[1]] })
                }
                _ => None,
            }
        })
        .collect();
    let mut saddles: Vec<SeparatingSaddle<T>> = found.into_iter().flatten().collect();
    saddles.sort_by(|a, b| b.point.value.partial_cmp(&a.point.value).unwrap());

    let vtol = value_tol(crit);
    let mut values: Vec<T> = Vec::new();
    for s in &saddles {
        let hv = s.half_value();
        match values.last() {
            Some(&last) if (last - hv).abs() <= vtol => {}
            Some(&last) if last - hv < quantum * T::c(4.0) => {
                return Err(Error::ResolutionTooCoarse { a: last.f64(), b: hv.f64(), quantum: quantum.f64() });
            }
            _ => values.push(hv),
        }
    }
    Ok(SaddleAnalysis { values, saddles, grid, half_v, quantum })
}

/// Sublevel component of a labeled minimum.
#[derive(Clone, Debug)]
pub struct Region<T: Real> {
    /// Grid mask (same grid as the labeling).
    pub mask: Vec<bool>,
    /// Extent of the mask along x (d = 1 convenience).
    pub interval: Option<(T, T)>,
}

impl<T: Real> Region<T> {
    pub fn contains_node(&self, k: usize) -> bool {
        self.mask[k]
    }
}

#[derive(Clone, Debug)]
pub struct LabeledMinimum<T: Real> {
    pub point: CriticalPoint<T>,
    /// Index into the critical point list.
    pub crit_index: usize,
    pub k: usize,
    pub j: usize,
    /// `sigma(m)`; `None` for the global minimum (+inf).
    pub sigma: Option<T>,
    /// `S(m) = sigma(m) - V(m)/2`; `None` for the global minimum (+inf).
    pub s: Option<T>,
    pub region: Region<T>,
    /// Indices into [`Labeling::saddles`]; empty for the global minimum.
    pub saddles: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Labeling<T: Real> {
    /// Sorted by `(k, j)`; the first entry is the global minimum.
    pub minima: Vec<LabeledMinimum<T>>,
    /// `sigma_2 > ... > sigma_N`.
    pub separating_values: Vec<T>,
    pub saddles: Vec<SeparatingSaddle<T>>,
    pub critical: Vec<CriticalPoint<T>>,
    pub grid: Grid<T>,
    pub quantum: T,
}

impl<T: Real> Labeling<T> {
    pub fn global_minimum(&self) -> &LabeledMinimum<T> {
        &self.minima[0]
    }

    pub fn n0(&self) -> usize {
        self.minima.len()
    }

    pub fn non_global(&self) -> impl Iterator<Item = &LabeledMinimum<T>> {
        self.minima.iter().skip(1)
    }
}

/// Adapted labeling: walks the separating values downward and labels the global
/// minimum of each newly created component.
pub fn build_labeling<T: Real>(
    crit: &[CriticalPoint<T>],
    saddles: &SaddleAnalysis<T>,
) -> Result<Labeling<T>> {
    let grid = &saddles.grid;
    let hv = &saddles.half_v;
    let delta = saddles.delta();
    let vtol = value_tol(crit);
    let minima: Vec<usize> = (0..crit.len()).filter(|&i| crit[i].is_minimum()).collect();
    let node_of: Vec<usize> = minima.iter().map(|&i| grid.nearest(&crit[i].location)).collect();
    let loc = |i: usize| crit[i].location_f64();

    let unique_min = |cands: &[usize]| -> Result<usize> {
        let mut best = cands[0];
        for &c in cands {
            if crit[c].value < crit[best].value {
                best = c;
            }
        }
        if let Some(&other) = cands.iter().find(|&&c| c != best && (crit[c].value - crit[best].value).abs() <= vtol) {
            return Err(Error::HypothesisJVideViolated(format!(
                "minima at {:?} and {:?} are both global minima of one component",
                loc(best),
                loc(other)
            )));
        }
        Ok(best)
    };

    // (crit index, k, j, sigma)
    let mut labels: Vec<(usize, usize, usize, Option<T>)> = Vec::new();
    let global = unique_min(&minima)?;
    labels.push((global, 1, 1, None));
    for (lvl, &sigma) in saddles.values.iter().enumerate() {
        let k = lvl + 2;
        let cc = components(grid, hv, sigma - delta);
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (mi, &m) in minima.iter().enumerate() {
            if let Some(root) = cc[node_of[mi]] {
                match groups.iter_mut().find(|g| g.0 == root) {
                    Some(g) => g.1.push(m),
                    None => groups.push((root, vec![m])),
                }
            }
        }
        let mut j = 0;
        for (_, members) in groups {
            if members.iter().any(|m| labels.iter().any(|l| l.0 == *m)) {
                continue;
            }
            j += 1;
            labels.push((unique_min(&members)?, k, j, Some(sigma)));
        }
    }
    if let Some(&m) = minima.iter().find(|m| !labels.iter().any(|l| l.0 == **m)) {
        return Err(Error::HypothesisJVideViolated(format!("minimum at {:?} received no label", loc(m))));
    }

    let mut out = Vec::with_capacity(labels.len());
    for &(m, k, j, sigma) in &labels {
        let mask: Vec<bool> = match sigma {
            None => vec![true; grid.len()],
            Some(sg) => {
                let cc = components(grid, hv, sg - delta);
                let root = cc[grid.nearest(&crit[m].location)];
                cc.iter().map(|c| c.is_some() && *c == root).collect()
            }
        };
        let interval = (grid.dim() == 1).then(|| {
            let xs: Vec<T> = (0..grid.len()).filter(|&i| mask[i]).map(|i| grid.point(i)[0]).collect();
            let half = grid.step[0] * T::c(0.5);
            (xs[0] - half, xs[xs.len() - 1] + half)
        });
        let js: Vec<usize> = match sigma {
            None => Vec::new(),
            Some(sg) => (0..saddles.saddles.len())
                .filter(|&si| {
                    let s = &saddles.saddles[si];
                    (s.half_value() - sg).abs() <= vtol
                        && s.descent_minima.iter().any(|&dm| mask[grid.nearest(&crit[dm].location)])
                })
                .collect(),
        };
        if sigma.is_some() && js.is_empty() {
            return Err(Error::HypothesisJVideViolated(format!(
                "no separating saddle on the boundary of E({:?})",
                loc(m)
            )));
        }
        out.push(LabeledMinimum {
            point: crit[m].clone(),
            crit_index: m,
            k,
            j,
            sigma,
            s: sigma.map(|sg| sg - crit[m].value * T::c(0.5)),
            region: Region { mask, interval },
            saddles: js,
        });
    }

    for a in 0..out.len() {
        for b in a + 1..out.len() {
            if let Some(&shared) = out[a].saddles.iter().find(|s| out[b].saddles.contains(s)) {
                let s = &saddles.saddles[shared];
                let twin = saddles
                    .saddles
                    .iter()
                    .enumerate()
                    .find(|(i, o)| *i != shared && (o.half_value() - s.half_value()).abs() <= vtol);
                return Err(match twin {
                    Some((_, o)) => Error::TieBreak {
                        a: s.point.location_f64(),
                        b: o.point.location_f64(),
                        value: s.half_value().f64(),
                    },
                    None => Error::HypothesisJVideViolated(format!(
                        "j-sets of minima {:?} and {:?} intersect",
                        out[a].point.location_f64(),
                        out[b].point.location_f64()
                    )),
                });
            }
        }
    }
    Ok(Labeling {
        minima: out,
        separating_values: saddles.values.clone(),
        saddles: saddles.saddles.clone(),
        critical: crit.to_vec(),
        grid: grid.clone(),
        quantum: saddles.quantum,
    })
}

/// Critical points, separating saddles and labeling in one call.
pub fn analyze<T: Real>(p: &dyn Potential<T>, seeds_per_axis: usize, grid_resolution: usize) -> Result<Labeling<T>> {
    let crit = find_critical_points(p, seeds_per_axis)?;
    let sad = separating_saddles(p, &crit, grid_resolution)?;
    build_labeling(&crit, &sad)
}

/// Merge events of the sublevel filtration: `(value, node)` where two components
/// with persistence above `min_persistence` join.
pub fn merge_events<T: Real>(grid: &Grid<T>, values: &[T], min_persistence: T) -> Vec<(T, usize)> {
    let n = grid.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    let mut low = vec![T::zero(); n];
    let mut events = Vec::new();
    for &k in &order {
        let mut roots: Vec<usize> = grid.neighbors(k).into_iter().filter(|&j| active[j]).map(|j| uf.find(j)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.sort_by(|&a, &b| low[a].partial_cmp(&low[b]).unwrap());
        active[k] = true;
        let Some(&oldest) = roots.first() else {
            low[k] = values[k];
            continue;
        };
        let persistent = roots.iter().filter(|&&r| values[k] - low[r] > min_persistence).count();
        if persistent >= 2 {
            events.push((values[k], k));
        }
        let keep = low[oldest];
        let mut root = uf.union(oldest, k);
        for &r in &roots[1..] {
            root = uf.union(root, r);
        }
        low[root] = keep;
    }
    events
}

#[derive(Clone, Debug)]
pub struct LiftReport<T: Real> {
    pub v_values: Vec<T>,
    pub w_values: Vec<T>,
    /// `(x, v)` of every W merge event.
    pub w_locations: Vec<(T, T)>,
    pub quantum: T,
}

/// Recomputes separating values of `W(x, v) = V(x)/2 + v^2/4` on a 2D grid and
/// checks they coincide with those of `V/2`.
pub fn lift_check_w<T: Real>(p: &dyn Potential<T>, lab: &Labeling<T>, grid_resolution: usize) -> Result<LiftReport<T>> {
    let xs: Vec<T> = lab.saddles.iter().map(|s| s.point.location[0]).collect();
    lift_check_values(p, &lab.separating_values, &xs, grid_resolution)
}

/// Same check from a saddle analysis (no labeling needed).
pub fn lift_check_analysis<T: Real>(p: &dyn Potential<T>, sad: &SaddleAnalysis<T>, grid_resolution: usize) -> Result<LiftReport<T>> {
    let xs: Vec<T> = sad.saddles.iter().map(|s| s.point.location[0]).collect();
    lift_check_values(p, &sad.values, &xs, grid_resolution)
}

fn lift_check_values<T: Real>(p: &dyn Potential<T>, values: &[T], saddle_x: &[T], grid_resolution: usize) -> Result<LiftReport<T>> {
    if p.dim() != 1 {
        return Err(Error::InvalidInput("W-lift check needs d = 1".into()));
    }
    let w = p.window();
    let coarse = Grid::new(w, grid_resolution);
    let gmin = half_values(p, &coarse).into_iter().fold(T::max_value().unwrap(), |m, v| if v < m { v } else { m });
    let top = values.first().copied().unwrap_or(gmin);
    let vmax = T::c(2.0) * (T::c(2.0) * (top - gmin) + T::c(0.1)).sqrt();
    let win = Window::new(vec![w.lo[0], -vmax], vec![w.hi[0], vmax]);
    let grid = Grid::new(&win, grid_resolution);
    let vals: Vec<T> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let q = grid.point(k);
            p.value(&q[..1]) * T::c(0.5) + q[1] * q[1] * T::c(0.25)
        })
        .collect();
    let quantum = energy_quantum(&grid, &vals, top);
    let events = merge_events(&grid, &vals, quantum * T::c(4.0));
    let mut w_values: Vec<T> = events.iter().map(|e| e.0).collect();
    w_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let w_locations: Vec<(T, T)> = events.iter().map(|e| {
        let q = grid.point(e.1);
        (q[0], q[1])
    }).collect();
    let report = LiftReport { v_values: values.to_vec(), w_values, w_locations, quantum };
    let tol = quantum * T::c(2.0);
    let values_ok = report.v_values.len() == report.w_values.len()
        && report.v_values.iter().zip(&report.w_values).all(|(a, b)| (*a - *b).abs() <= tol);
    let locations_ok = report.w_locations.iter().all(|&(x, v)| {
        v.abs() <= grid.step[1] * T::c(2.0)
            && saddle_x.iter().any(|&s| (s - x).abs() <= grid.step[0] * T::c(2.0))
    });
    if !(values_ok && locations_ok) {
        return Err(Error::MismatchDetected {
            v_values: report.v_values.iter().map(|v| v.f64()).collect(),
            w_values: report.w_values.iter().map(|v| v.f64()).collect(),
        });
    }
    Ok(report)
}
