//! Sufficient statistics under the full-parent model `pa(w) = -w`.
//!
//! For every node `w` and state `s`, `times[w][s]` maps a restricted
//! configuration `c` (the other nodes packed over ascending `-w` order) to
//! the time spent with `X_w = s, X_{-w} = c`, and `counts[w][s]` maps `c` to
//! the number of flips `s -> 1-s` of `w` made while the others were at `c`.
//! Only visited keys are stored.

use std::collections::BTreeMap;

use crate::error::{CtbnError, Result};
use crate::model::NodeId;
use crate::simulate::Trajectory;

/// Tolerance on `sum_{c,s} t_w(c; s) = T`.
pub const TIME_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    d: usize,
    horizon: f64,
    counts: Vec<[BTreeMap<u64, u64>; 2]>,
    times: Vec<[BTreeMap<u64, f64>; 2]>,
}

impl SuffStats {
    pub fn from_parts(
        d: usize,
        horizon: f64,
        counts: Vec<[BTreeMap<u64, u64>; 2]>,
        times: Vec<[BTreeMap<u64, f64>; 2]>,
    ) -> Result<Self> {
        if d < 2 || d > 64 || counts.len() != d || times.len() != d {
            return Err(CtbnError::InvalidInput(format!("inconsistent node count {d}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(CtbnError::InvalidInput("horizon must be positive and finite".into()));
        }
        let limit = if d - 1 >= 64 { u64::MAX } else { (1u64 << (d - 1)) - 1 };
        for w in 0..d {
            let mut total = 0.0;
            for s in 0..2 {
                for (&c, &t) in &times[w][s] {
                    if c > limit || !(t.is_finite() && t >= 0.0) {
                        return Err(CtbnError::InvalidInput(format!(
                            "bad occupation entry for node {w}, state {s}, key {c}"
                        )));
                    }
                    total += t;
                }
                if counts[w][s].keys().any(|&c| c > limit) {
                    return Err(CtbnError::InvalidInput(format!("bad count key for node {w}")));
                }
            }
            if (total - horizon).abs() > TIME_SUM_TOL * horizon.max(1.0) {
                return Err(CtbnError::InvalidInput(format!(
                    "occupation times of node {w} sum to {total}, expected {horizon}"
                )));
            }
        }
        Ok(SuffStats {
            d,
            horizon,
            counts,
            times,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `c -> n_w(c; s, 1-s)`.
    pub fn counts(&self, w: NodeId, s: u8) -> &BTreeMap<u64, u64> {
        &self.counts[w][s as usize]
    }

    /// `c -> t_w(c; s)`.
    pub fn times(&self, w: NodeId, s: u8) -> &BTreeMap<u64, f64> {
        &self.times[w][s as usize]
    }

    pub fn count(&self, w: NodeId, s: u8, c: u64) -> u64 {
        self.counts[w][s as usize].get(&c).copied().unwrap_or(0)
    }

    pub fn time(&self, w: NodeId, s: u8, c: u64) -> f64 {
        self.times[w][s as usize].get(&c).copied().unwrap_or(0.0)
    }

    /// Total number of flips `n` over all nodes and directions.
    pub fn total_jumps(&self) -> u64 {
        self.counts
            .iter()
            .flat_map(|pair| pair.iter())
            .flat_map(|m| m.values())
            .sum()
    }

    /// Statistics of several independent trajectories of the same model,
    /// treated as one path whose horizon is the sum of theirs.
    pub fn pooled(parts: &[SuffStats]) -> Result<SuffStats> {
        let first = parts
            .first()
            .ok_or_else(|| CtbnError::InvalidInput("nothing to pool".into()))?;
        let d = first.d;
        if parts.iter().any(|p| p.d != d) {
            return Err(CtbnError::InvalidInput("pooled statistics disagree on d".into()));
        }
        let mut counts = first.counts.clone();
        let mut times = first.times.clone();
        for p in &parts[1..] {
            for w in 0..d {
                for s in 0..2 {
                    for (&c, &n) in &p.counts[w][s] {
                        *counts[w][s].entry(c).or_insert(0) += n;
                    }
                    for (&c, &t) in &p.times[w][s] {
                        *times[w][s].entry(c).or_insert(0.0) += t;
                    }
                }
            }
        }
        let horizon = parts.iter().map(|p| p.horizon).sum();
        SuffStats::from_parts(d, horizon, counts, times)
    }

    /// Total occupation time of node `w` in state `s`.
    pub fn occupation(&self, w: NodeId, s: u8) -> f64 {
        self.times[w][s as usize].values().sum()
    }
}

/// Accumulates the statistics of a trajectory in one pass over its segments.
pub fn extract(traj: &Trajectory) -> SuffStats {
    let d = traj.d();
    let mut counts: Vec<[BTreeMap<u64, u64>; 2]> = vec![Default::default(); d];
    let mut times: Vec<[BTreeMap<u64, f64>; 2]> = vec![Default::default(); d];
    let mut x = traj.initial();
    let mut t = 0.0;
    let close = |x: crate::model::State, dt: f64, times: &mut Vec<[BTreeMap<u64, f64>; 2]>| {
        for (w, per_state) in times.iter_mut().enumerate() {
            *per_state[x.get(w) as usize].entry(x.restrict(w)).or_insert(0.0) += dt;
        }
    };
    for j in traj.jumps() {
        close(x, j.time - t, &mut times);
        *counts[j.node][x.get(j.node) as usize]
            .entry(x.restrict(j.node))
            .or_insert(0) += 1;
        x = x.flipped(j.node);
        t = j.time;
    }
    close(x, traj.horizon() - t, &mut times);
    SuffStats {
        d,
        horizon: traj.horizon(),
        counts,
        times,
    }
}
