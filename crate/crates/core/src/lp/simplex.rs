//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every row `i` gets a slack `r_i = a_i x` bounded by the row's range, so
//! range rows need no duplication. Rows whose crash activity falls outside
//! their range also get an artificial, and phase 1 minimizes the artificials.
//! The tableau is rebuilt from an LU factorization of the basis every
//! [`REFACTOR_EVERY`] pivots and before optimality is declared, so the
//! reported primal and dual values are computed fresh from the final basis.

use nalgebra::DMatrix;

use super::{BasisStatus, LpError, LpStatus, FEASIBILITY_TOL, PIVOT_TOL};

const DUAL_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 1000;
const REFACTOR_EVERY: usize = 100;
const DRIVE_OUT_TOL: f64 = 1e-7;

/// `min cost·x` subject to `row_lo <= A x <= row_hi`, `col_lo <= x <= col_hi`.
#[derive(Debug, Clone)]
pub(crate) struct DenseLp {
    pub n: usize,
    pub m: usize,
    /// Row-major `m × n`.
    pub a: Vec<f64>,
    pub cost: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
    pub col_status: Vec<BasisStatus>,
    pub row_status: Vec<BasisStatus>,
    pub iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    lp: &'a DenseLp,
    m: usize,
    cols: usize,
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    art_sign: Vec<f64>,
    binv: DMatrix<f64>,
    degenerate: usize,
    bland: bool,
    iterations: usize,
    limit: usize,
    since_refactor: usize,
}

fn rest_value(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

pub(crate) fn solve(lp: &DenseLp) -> Result<RawSolution, LpError> {
    Simplex::new(lp).run()
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a DenseLp) -> Self {
        let (n, m) = (lp.n, lp.m);
        let cols = n + 2 * m;
        let mut lo = Vec::with_capacity(cols);
        let mut hi = Vec::with_capacity(cols);
        lo.extend_from_slice(&lp.col_lo);
        hi.extend_from_slice(&lp.col_hi);
        lo.extend_from_slice(&lp.row_lo);
        hi.extend_from_slice(&lp.row_hi);
        lo.resize(cols, 0.0);
        hi.resize(cols, 0.0);

        let mut x = vec![0.0; cols];
        for j in 0..n {
            x[j] = rest_value(lo[j], hi[j]);
        }
        let mut basis = Vec::with_capacity(m);
        let mut art_sign = vec![1.0; m];
        for i in 0..m {
            let act: f64 = (0..n).map(|j| lp.a[i * n + j] * x[j]).sum();
            let (rlo, rhi) = (lp.row_lo[i], lp.row_hi[i]);
            if rlo <= act && act <= rhi {
                x[n + i] = act;
                basis.push(n + i);
            } else {
                let r = act.clamp(rlo, rhi);
                x[n + i] = r;
                art_sign[i] = if r > act { 1.0 } else { -1.0 };
                let k = n + m + i;
                hi[k] = f64::INFINITY;
                x[k] = (r - act).abs();
                basis.push(k);
            }
        }
        let mut row_of = vec![None; cols];
        for (i, &b) in basis.iter().enumerate() {
            row_of[b] = Some(i);
        }

        // The crash basis is diagonal: -1 for a slack, the sign for an
        // artificial.
        let mut t = vec![0.0; m * cols];
        for i in 0..m {
            let row = &mut t[i * cols..(i + 1) * cols];
            row[..n].copy_from_slice(&lp.a[i * n..(i + 1) * n]);
            row[n + i] = -1.0;
            row[n + m + i] = art_sign[i];
            let scale = if basis[i] == n + i { -1.0 } else { art_sign[i] };
            for v in row.iter_mut() {
                *v /= scale;
            }
        }
        let binv = DMatrix::from_fn(m, m, |r, c| {
            if r != c {
                0.0
            } else if basis[r] == n + r {
                -1.0
            } else {
                art_sign[r]
            }
        });

        Simplex {
            lp,
            m,
            cols,
            t,
            lo,
            hi,
            cost: vec![0.0; cols],
            d: vec![0.0; cols],
            x,
            basis,
            row_of,
            art_sign,
            binv,
            degenerate: 0,
            bland: false,
            iterations: 0,
            limit: 1000 + 50 * (m + cols),
            since_refactor: 0,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.lp.n + self.m
    }

    /// Entry `(i, j)` of `[A | -I | diag(sign)]`.
    fn full_entry(&self, i: usize, j: usize) -> f64 {
        let (n, m) = (self.lp.n, self.m);
        if j < n {
            self.lp.a[i * n + j]
        } else if j < n + m {
            if j - n == i {
                -1.0
            } else {
                0.0
            }
        } else if j - n - m == i {
            self.art_sign[i]
        } else {
            0.0
        }
    }

    fn compute_reduced_costs(&mut self) {
        let cols = self.cols;
        self.d.copy_from_slice(&self.cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                let row = &self.t[i * cols..(i + 1) * cols];
                for (dj, tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
    }

    /// Rebuilds the tableau, basic values and reduced costs from the basis.
    fn refactor(&mut self) -> Result<(), LpError> {
        let (m, cols) = (self.m, self.cols);
        self.since_refactor = 0;
        if m == 0 {
            self.compute_reduced_costs();
            return Ok(());
        }
        let b = DMatrix::from_fn(m, m, |i, k| self.full_entry(i, self.basis[k]));
        let binv = b
            .lu()
            .try_inverse()
            .ok_or_else(|| LpError::NumericalFailure("singular basis".into()))?;
        if binv.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NumericalFailure("basis inverse is not finite".into()));
        }
        let n = self.lp.n;
        for i in 0..m {
            for j in 0..cols {
                let v = if j < n {
                    (0..m).map(|k| binv[(i, k)] * self.lp.a[k * n + j]).sum()
                } else if j < n + m {
                    -binv[(i, j - n)]
                } else {
                    binv[(i, j - n - m)] * self.art_sign[j - n - m]
                };
                self.t[i * cols + j] = v;
            }
        }
        let mut rhs = vec![0.0; m];
        for j in (0..cols).filter(|&j| self.row_of[j].is_none() && self.x[j] != 0.0) {
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= self.full_entry(i, j) * self.x[j];
            }
        }
        for i in 0..m {
            let v: f64 = (0..m).map(|k| binv[(i, k)] * rhs[k]).sum();
            self.x[self.basis[i]] = v;
        }
        self.binv = binv;
        self.compute_reduced_costs();
        Ok(())
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + j];
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v /= piv;
        }
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[j];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, p) in self.d.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
            self.d[j] = 0.0;
        }
        let old = self.basis[r];
        self.row_of[old] = None;
        self.basis[r] = j;
        self.row_of[j] = Some(r);
        self.since_refactor += 1;
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            if self.row_of[j].is_some() || self.lo[j] >= self.hi[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -DUAL_TOL && self.x[j] < self.hi[j] {
                1.0
            } else if dj > DUAL_TOL && self.x[j] > self.lo[j] {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| dj.abs() > s) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn iterate(&mut self) -> Result<Outcome, LpError> {
        let cols = self.cols;
        loop {
            let Some((j, dir)) = self.choose_entering() else {
                if self.since_refactor == 0 {
                    return Ok(Outcome::Optimal);
                }
                self.refactor()?;
                continue;
            };
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit {
                    iterations: self.iterations,
                });
            }
            self.iterations += 1;

            let mut rows: Vec<(usize, f64, f64)> = Vec::new();
            let mut min_ratio = f64::INFINITY;
            for i in 0..self.m {
                let tij = self.t[i * cols + j];
                if tij.abs() <= PIVOT_TOL {
                    continue;
                }
                let alpha = dir * tij;
                let b = self.basis[i];
                let ratio = if alpha > 0.0 {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    (self.x[b] - self.lo[b]).max(0.0) / alpha
                } else {
                    if !self.hi[b].is_finite() {
                        continue;
                    }
                    (self.hi[b] - self.x[b]).max(0.0) / -alpha
                };
                min_ratio = min_ratio.min(ratio);
                rows.push((i, alpha, ratio));
            }
            let flip = self.hi[j] - self.lo[j];
            let (step, leave) = if flip <= min_ratio {
                (flip, None)
            } else {
                let tied = rows
                    .into_iter()
                    .filter(|&(_, _, ratio)| ratio <= min_ratio + DEGENERATE_STEP);
                let chosen = if self.bland {
                    tied.min_by_key(|&(i, _, _)| self.basis[i])
                } else {
                    tied.max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                };
                (min_ratio, chosen.map(|(i, alpha, _)| (i, alpha)))
            };
            if !step.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            self.x[j] += dir * step;
            for i in 0..self.m {
                let tij = self.t[i * cols + j];
                if tij != 0.0 {
                    self.x[self.basis[i]] -= dir * step * tij;
                }
            }
            match leave {
                None => {
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                    self.since_refactor += 1;
                }
                Some((r, alpha)) => {
                    let b = self.basis[r];
                    self.x[b] = if alpha > 0.0 { self.lo[b] } else { self.hi[b] };
                    self.pivot(r, j);
                }
            }
            if step <= DEGENERATE_STEP {
                self.degenerate += 1;
                if self.degenerate >= BLAND_AFTER {
                    self.bland = true;
                }
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
        }
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .filter(|&&b| self.is_artificial(b))
            .map(|&b| self.x[b].max(0.0))
            .sum()
    }

    /// Pivots basic artificials out where some structural or slack column
    /// has a usable entry in their row; the rest sit on redundant rows.
    fn drive_out_artificials(&mut self) {
        let cols = self.cols;
        let first_art = self.lp.n + self.m;
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row = &self.t[r * cols..r * cols + first_art];
            let candidate = (0..first_art)
                .filter(|&j| self.row_of[j].is_none() && row[j].abs() > DRIVE_OUT_TOL)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()));
            if let Some(j) = candidate {
                let b = self.basis[r];
                self.x[b] = 0.0;
                self.pivot(r, j);
            }
        }
        for k in first_art..cols {
            self.lo[k] = 0.0;
            self.hi[k] = 0.0;
            if self.row_of[k].is_none() {
                self.x[k] = 0.0;
            }
        }
    }

    fn run(mut self) -> Result<RawSolution, LpError> {
        let (n, m) = (self.lp.n, self.m);
        if self.basis.iter().any(|&b| self.is_artificial(b)) {
            for k in n + m..self.cols {
                self.cost[k] = if self.hi[k] > 0.0 { 1.0 } else { 0.0 };
            }
            self.compute_reduced_costs();
            self.iterate()?;
            if self.infeasibility() > FEASIBILITY_TOL {
                return Ok(self.finish(LpStatus::Infeasible, None));
            }
            self.drive_out_artificials();
        } else {
            for k in n + m..self.cols {
                self.hi[k] = 0.0;
            }
        }
        self.cost = vec![0.0; self.cols];
        self.cost[..n].copy_from_slice(&self.lp.cost);
        self.refactor()?;
        match self.iterate()? {
            Outcome::Unbounded => Ok(self.finish(LpStatus::Unbounded, None)),
            Outcome::Optimal => {
                let y = self.duals();
                Ok(self.finish(LpStatus::Optimal, Some(y)))
            }
        }
    }

    /// `y` solving `Bᵀ y = c_B` for the current (freshly factored) basis.
    fn duals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| (0..self.m).map(|k| self.cost[self.basis[k]] * self.binv[(k, i)]).sum())
            .collect()
    }

    fn status_of(&self, j: usize) -> BasisStatus {
        if self.row_of[j].is_some() {
            BasisStatus::Basic
        } else if self.x[j] == self.lo[j] {
            BasisStatus::AtLower
        } else if self.x[j] == self.hi[j] {
            BasisStatus::AtUpper
        } else {
            BasisStatus::Free
        }
    }

    fn finish(self, status: LpStatus, y: Option<Vec<f64>>) -> RawSolution {
        let (n, m) = (self.lp.n, self.m);
        let x: Vec<f64> = self.x[..n].to_vec();
        let y = y.unwrap_or_else(|| vec![0.0; m]);
        let d: Vec<f64> = (0..n)
            .map(|j| self.lp.cost[j] - (0..m).map(|i| y[i] * self.lp.a[i * n + j]).sum::<f64>())
            .collect();
        RawSolution {
            status,
            col_status: (0..n).map(|j| self.status_of(j)).collect(),
            row_status: (0..m).map(|i| self.status_of(n + i)).collect(),
            x,
            y,
            d,
            iterations: self.iterations,
        }
    }
}
