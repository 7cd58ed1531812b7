//! Per-triple negative log-likelihood
//!
//! ```text
//! l(theta) = (1/T) * sum_c [ -n(c) * theta'z(c) + t(c) * exp(theta'z(c)) ]
//! ```
//!
//! with `z(c) = [1, c_1, ..., c_{d-1}]`, together with its gradient and
//! Hessian quadratic form. `theta[0]` is the unpenalized intercept.

use std::collections::BTreeSet;

use crate::error::{CtbnError, Result};
use crate::model::NodeId;
use crate::stats::SuffStats;

/// Linear predictors above this value make the loss `+inf`.
pub const EXP_CLAMP: f64 = 700.0;

#[inline]
fn safe_exp(eta: f64) -> f64 {
    if eta > EXP_CLAMP {
        f64::INFINITY
    } else {
        eta.exp()
    }
}

/// Node `w` and transition `s -> 1-s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleKey {
    pub w: NodeId,
    pub s: u8,
}

impl TripleKey {
    pub fn new(w: NodeId, s: u8) -> Result<Self> {
        if s > 1 {
            return Err(CtbnError::InvalidInput(format!("state {s} is not binary")));
        }
        Ok(TripleKey { w, s })
    }

    pub fn target(&self) -> u8 {
        1 - self.s
    }

    /// All `2d` keys in row order `(0,0->1), (0,1->0), (1,0->1), ...`.
    pub fn all(d: usize) -> impl Iterator<Item = TripleKey> {
        (0..d).flat_map(|w| (0..2u8).map(move |s| TripleKey { w, s }))
    }
}

/// One visited restricted configuration with its jump count and occupation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    /// Restricted configuration; bit `k` is covariate `z[k + 1]`.
    pub mask: u64,
    pub n: f64,
    pub t: f64,
}

impl Row {
    #[inline]
    pub fn eta(&self, theta: &[f64]) -> f64 {
        let mut e = theta[0];
        let mut bits = self.mask;
        while bits != 0 {
            e += theta[1 + bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        e
    }

    pub fn z(&self, d: usize) -> Vec<f64> {
        let mut z = vec![0.0; d];
        z[0] = 1.0;
        for (k, zk) in z.iter_mut().enumerate().skip(1) {
            *zk = ((self.mask >> (k - 1)) & 1) as f64;
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleProblem {
    key: TripleKey,
    d: usize,
    horizon: f64,
    rows: Vec<Row>,
}

impl TripleProblem {
    pub fn new(key: TripleKey, d: usize, horizon: f64, rows: Vec<Row>) -> Result<Self> {
        if !(2..=64).contains(&d) {
            return Err(CtbnError::InvalidInput(format!("d must lie in [2, 64], got {d}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(CtbnError::InvalidInput("horizon must be positive".into()));
        }
        let limit = if d - 1 == 64 { u64::MAX } else { (1u64 << (d - 1)) - 1 };
        for r in &rows {
            if r.mask > limit || !(r.n >= 0.0 && r.n.is_finite()) || !(r.t >= 0.0 && r.t.is_finite()) {
                return Err(CtbnError::InvalidInput(format!("invalid row {r:?}")));
            }
        }
        if !rows.iter().any(|r| r.t > 0.0) {
            return Err(CtbnError::DegenerateTriple {
                w: key.w,
                s: key.s,
                sp: key.target(),
            });
        }
        Ok(TripleProblem {
            key,
            d,
            horizon,
            rows,
        })
    }

    pub fn key(&self) -> TripleKey {
        self.key
    }

    /// Coefficient vector length (intercept plus `d - 1` penalized entries).
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn total_count(&self) -> f64 {
        self.rows.iter().map(|r| r.n).sum()
    }

    pub fn total_time(&self) -> f64 {
        self.rows.iter().map(|r| r.t).sum()
    }

    /// Same data on a rescaled clock: times and horizon multiplied by `kappa`.
    pub fn rescaled(&self, time_factor: f64, count_factor: f64) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| Row {
                mask: r.mask,
                n: r.n * count_factor,
                t: r.t * time_factor,
            })
            .collect();
        TripleProblem::new(self.key, self.d, self.horizon * time_factor, rows)
    }
}

/// Rows for one `(w, s -> 1-s)`: every `c` with positive occupation or count.
pub fn build_triple(stats: &SuffStats, key: TripleKey) -> Result<TripleProblem> {
    let d = stats.d();
    if key.w >= d {
        return Err(CtbnError::InvalidInput(format!("node {} out of range", key.w)));
    }
    let times = stats.times(key.w, key.s);
    let counts = stats.counts(key.w, key.s);
    let keys: BTreeSet<u64> = times
        .iter()
        .filter(|(_, &t)| t > 0.0)
        .map(|(&c, _)| c)
        .chain(counts.iter().filter(|(_, &n)| n > 0).map(|(&c, _)| c))
        .collect();
    let rows = keys
        .into_iter()
        .map(|c| Row {
            mask: c,
            n: stats.count(key.w, key.s, c) as f64,
            t: stats.time(key.w, key.s, c),
        })
        .collect();
    TripleProblem::new(key, d, stats.horizon(), rows)
}

pub fn loss(p: &TripleProblem, theta: &[f64]) -> f64 {
    assert_eq!(theta.len(), p.d, "theta length");
    let mut acc = 0.0;
    for r in &p.rows {
        let eta = r.eta(theta);
        let e = safe_exp(eta);
        if e.is_infinite() && r.t > 0.0 {
            return f64::INFINITY;
        }
        acc += -r.n * eta + if r.t > 0.0 { r.t * e } else { 0.0 };
    }
    acc / p.horizon
}

pub fn grad(p: &TripleProblem, theta: &[f64]) -> Vec<f64> {
    assert_eq!(theta.len(), p.d, "theta length");
    let mut g = vec![0.0; p.d];
    for r in &p.rows {
        let e = if r.t > 0.0 { r.t * safe_exp(r.eta(theta)) } else { 0.0 };
        let resid = -r.n + e;
        g[0] += resid;
        let mut bits = r.mask;
        while bits != 0 {
            g[1 + bits.trailing_zeros() as usize] += resid;
            bits &= bits - 1;
        }
    }
    for v in &mut g {
        *v /= p.horizon;
    }
    g
}

/// `b' H(theta) b = (1/T) sum_c t(c) (b'z)^2 exp(theta'z)`.
pub fn hess_quad(p: &TripleProblem, theta: &[f64], b: &[f64]) -> f64 {
    assert_eq!(theta.len(), p.d, "theta length");
    assert_eq!(b.len(), p.d, "direction length");
    let mut acc = 0.0;
    for r in &p.rows {
        if r.t == 0.0 {
            continue;
        }
        let bz = r.eta(b);
        if bz == 0.0 {
            continue;
        }
        acc += r.t * bz * bz * safe_exp(r.eta(theta));
    }
    acc / p.horizon
}

/// A triple restricted to a subset of penalized coordinates, with rows that
/// share the same pattern on that subset merged. Coordinate 0 is the
/// intercept; coordinate `i + 1` is `coords[i]`.
#[derive(Debug, Clone)]
pub(crate) struct CompactDesign {
    pub coords: Vec<usize>,
    ptr: Vec<usize>,
    idx: Vec<u32>,
    n: Vec<f64>,
    t: Vec<f64>,
    inv_horizon: f64,
}

impl CompactDesign {
    pub fn new(p: &TripleProblem, coords: &[usize]) -> Self {
        let mut select = 0u64;
        for &k in coords {
            select |= 1 << k;
        }
        let mut keyed: Vec<(u64, f64, f64)> = p.rows.iter().map(|r| (r.mask & select, r.n, r.t)).collect();
        keyed.sort_by_key(|r| r.0);
        let mut pos = [0u32; 64];
        for (i, &k) in coords.iter().enumerate() {
            pos[k] = i as u32 + 1;
        }
        let mut ptr = vec![0];
        let mut idx = Vec::new();
        let mut n = Vec::new();
        let mut t = Vec::new();
        for group in keyed.chunk_by(|a, b| a.0 == b.0) {
            let key = group[0].0;
            let mut bits = key;
            while bits != 0 {
                idx.push(pos[bits.trailing_zeros() as usize]);
                bits &= bits - 1;
            }
            ptr.push(idx.len());
            n.push(group.iter().map(|r| r.1).sum());
            t.push(group.iter().map(|r| r.2).sum());
        }
        CompactDesign {
            coords: coords.to_vec(),
            ptr,
            idx,
            n,
            t,
            inv_horizon: 1.0 / p.horizon,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len() + 1
    }

    #[inline]
    fn eta(&self, i: usize, theta: &[f64]) -> f64 {
        let mut e = theta[0];
        for &j in &self.idx[self.ptr[i]..self.ptr[i + 1]] {
            e += theta[j as usize];
        }
        e
    }

    #[cfg(test)]
    pub fn loss(&self, theta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n.len() {
            let eta = self.eta(i, theta);
            if self.t[i] > 0.0 {
                let e = safe_exp(eta);
                if e.is_infinite() {
                    return f64::INFINITY;
                }
                acc += self.t[i] * e;
            }
            acc -= self.n[i] * eta;
        }
        acc * self.inv_horizon
    }

    /// Means of each covariate under row weights `t e^eta`, intercept slot 0.
    pub fn weighted_means(&self, theta: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        let mut total = 0.0;
        for i in 0..self.n.len() {
            let w = self.t[i] * safe_exp(self.eta(i, theta));
            total += w;
            for &j in &self.idx[self.ptr[i]..self.ptr[i + 1]] {
                m[j as usize] += w;
            }
        }
        if total > 0.0 && total.is_finite() {
            m.iter_mut().for_each(|v| *v /= total);
        } else {
            m.iter_mut().for_each(|v| *v = 0.0);
        }
        m[0] = 0.0;
        m
    }

    /// Loss and gradient in one pass; gradient written into `g`.
    pub fn loss_grad(&self, theta: &[f64], g: &mut [f64]) -> f64 {
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut acc = 0.0;
        for i in 0..self.n.len() {
            let eta = self.eta(i, theta);
            let mut resid = -self.n[i];
            acc -= self.n[i] * eta;
            if self.t[i] > 0.0 {
                let e = safe_exp(eta);
                if e.is_infinite() {
                    g.iter_mut().for_each(|v| *v = f64::INFINITY);
                    return f64::INFINITY;
                }
                acc += self.t[i] * e;
                resid += self.t[i] * e;
            }
            g[0] += resid;
            for &j in &self.idx[self.ptr[i]..self.ptr[i + 1]] {
                g[j as usize] += resid;
            }
        }
        g.iter_mut().for_each(|v| *v *= self.inv_horizon);
        acc * self.inv_horizon
    }
}

/// Dense, column-centered copy of a [`CompactDesign`] for the inner solver.
///
/// Column `j >= 1` holds `z_j - m_j` over the merged rows, so a coefficient
/// vector `u` in centered coordinates gives `eta = u_0 + sum_j u_j (z_j - m_j)`,
/// which equals the original linear predictor at `theta_0 = u_0 - m . u_{1..}`.
#[derive(Debug, Clone)]
pub(crate) struct CenteredDesign {
    rows: usize,
    cols: Vec<f64>,
    means: Vec<f64>,
    n: Vec<f64>,
    t: Vec<f64>,
    inv_horizon: f64,
}

/// Sum of `a_i * b_i` with eight independent accumulators.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
fn sum(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let ra = ca.remainder();
    for x in ca {
        for k in 0..8 {
            acc[k] += x[k];
        }
    }
    let tail: f64 = ra.iter().sum();
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

impl CenteredDesign {
    pub fn new(design: &CompactDesign, means: &[f64]) -> Self {
        let rows = design.n.len();
        let p = design.dim() - 1;
        let mut cols = vec![0.0; rows * p];
        for j in 0..p {
            cols[j * rows..(j + 1) * rows].iter_mut().for_each(|v| *v = -means[j + 1]);
        }
        for i in 0..rows {
            for &j in &design.idx[design.ptr[i]..design.ptr[i + 1]] {
                cols[(j as usize - 1) * rows + i] += 1.0;
            }
        }
        CenteredDesign {
            rows,
            cols,
            means: means.to_vec(),
            n: design.n.clone(),
            t: design.t.clone(),
            inv_horizon: design.inv_horizon,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn count_total(&self) -> f64 {
        self.n.iter().sum()
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[(j - 1) * self.rows..j * self.rows]
    }

    /// Linear predictor for centered coefficients `u`.
    pub fn eta(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = u[0]);
        for (j, &uj) in u.iter().enumerate().skip(1) {
            if uj != 0.0 {
                for (o, c) in out.iter_mut().zip(self.col(j)) {
                    *o += uj * c;
                }
            }
        }
    }

    /// Loss at a linear predictor; `exp_out` receives `t e^eta` per row.
    pub fn loss_at(&self, eta: &[f64], exp_out: &mut [f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            let e = if self.t[i] > 0.0 {
                let e = safe_exp(eta[i]);
                if e.is_infinite() {
                    return f64::INFINITY;
                }
                self.t[i] * e
            } else {
                0.0
            };
            exp_out[i] = e;
            acc += e - self.n[i] * eta[i];
        }
        acc * self.inv_horizon
    }

    /// Gradient in centered coordinates from the `t e^eta` values of [`Self::loss_at`].
    pub fn grad_at(&self, exp_vals: &[f64], resid: &mut [f64], g: &mut [f64]) {
        for i in 0..self.rows {
            resid[i] = exp_vals[i] - self.n[i];
        }
        g[0] = sum(resid) * self.inv_horizon;
        for j in 1..g.len() {
            g[j] = dot(self.col(j), resid) * self.inv_horizon;
        }
    }

    /// Gradient with respect to the original coordinates, given the centered one.
    pub fn to_theta_grad(&self, gu: &[f64], gt: &mut [f64]) {
        gt[0] = gu[0];
        for j in 1..gu.len() {
            gt[j] = gu[j] + self.means[j] * gu[0];
        }
    }

    pub fn to_theta(&self, u: &[f64], theta: &mut [f64]) {
        theta.copy_from_slice(u);
        theta[0] = u[0] - (1..u.len()).map(|j| self.means[j] * u[j]).sum::<f64>();
    }

    pub fn from_theta(&self, theta: &[f64], u: &mut [f64]) {
        u.copy_from_slice(theta);
        u[0] = theta[0] + (1..theta.len()).map(|j| self.means[j] * theta[j]).sum::<f64>();
    }
}
