//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ctbn_core::model::State;
use ctbn_core::objective::{Row, TripleKey, TripleProblem};
use ctbn_core::simulate::{Jump, Trajectory};
use rand::Rng;

/// Per-node statistics keyed by restricted configuration, as plain maps.
pub struct DenseStats {
    pub counts: Vec<[BTreeMap<u64, u64>; 2]>,
    pub times: Vec<[BTreeMap<u64, f64>; 2]>,
}

/// Accumulates time and flips per full joint state, then reads off every
/// `(w, s, c)` cell by enumerating all `2^d` states.
pub fn dense_stats(traj: &Trajectory) -> DenseStats {
    let d = traj.d();
    let size = 1usize << d;
    let mut time_in = vec![0.0f64; size];
    let mut flips = vec![vec![0u64; d]; size];
    let mut x = traj.initial().0 as usize;
    let mut t = 0.0;
    for j in traj.jumps() {
        time_in[x] += j.time - t;
        flips[x][j.node] += 1;
        x ^= 1 << j.node;
        t = j.time;
    }
    time_in[x] += traj.horizon() - t;

    let mut counts: Vec<[BTreeMap<u64, u64>; 2]> = vec![Default::default(); d];
    let mut times: Vec<[BTreeMap<u64, f64>; 2]> = vec![Default::default(); d];
    for state in 0..size {
        for w in 0..d {
            let s = (state >> w) & 1;
            let mut c = 0u64;
            let mut pos = 0;
            for u in 0..d {
                if u == w {
                    continue;
                }
                c |= (((state >> u) & 1) as u64) << pos;
                pos += 1;
            }
            if time_in[state] > 0.0 {
                times[w][s].insert(c, time_in[state]);
            }
            if flips[state][w] > 0 {
                counts[w][s].insert(c, flips[state][w]);
            }
        }
    }
    DenseStats { counts, times }
}

/// Trajectory with uniformly placed jumps on random nodes.
pub fn random_trajectory<R: Rng>(rng: &mut R, d: usize, horizon: f64, max_jumps: usize) -> Trajectory {
    let k = rng.gen_range(0..=max_jumps);
    let mut times: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..horizon)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times.retain(|&t| t > 0.0);
    let jumps = times
        .into_iter()
        .map(|time| Jump {
            time,
            node: rng.gen_range(0..d),
        })
        .collect();
    let initial = State(rng.gen_range(0..1u64 << d));
    Trajectory::new(d, horizon, initial, jumps).unwrap()
}

/// Triple with one row per configuration of the `d - 1` covariates, every
/// row with positive occupation time, so the loss is strictly convex.
pub fn random_problem<R: Rng>(rng: &mut R, d: usize) -> TripleProblem {
    let rows: Vec<Row> = (0..1u64 << (d - 1))
        .map(|mask| Row {
            mask,
            n: rng.gen_range(0..8) as f64,
            t: rng.gen_range(0.2..3.0),
        })
        .collect();
    let horizon = rows.iter().map(|r| r.t).sum::<f64>() / 2.0;
    TripleProblem::new(TripleKey { w: 0, s: 0 }, d, horizon, rows).unwrap()
}

fn eta(row: &Row, theta: &[f64]) -> f64 {
    row.z(theta.len()).iter().zip(theta).map(|(z, b)| z * b).sum()
}

/// Loss computed straight from the dummy vectors.
pub fn ref_loss(p: &TripleProblem, theta: &[f64]) -> f64 {
    p.rows()
        .iter()
        .map(|r| {
            let e = eta(r, theta);
            -r.n * e + r.t * e.exp()
        })
        .sum::<f64>()
        / p.horizon()
}

pub fn ref_grad(p: &TripleProblem, theta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    for r in p.rows() {
        let z = r.z(theta.len());
        let resid = r.t * eta(r, theta).exp() - r.n;
        for (gj, zj) in g.iter_mut().zip(&z) {
            *gj += resid * zj;
        }
    }
    g.iter_mut().for_each(|v| *v /= p.horizon());
    g
}

pub fn ref_objective(p: &TripleProblem, theta: &[f64], lambda: f64) -> f64 {
    ref_loss(p, theta) + lambda * theta[1..].iter().map(|v| v.abs()).sum::<f64>()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + h;
            let up = f(&y);
            y[j] = x[j] - h;
            let down = f(&y);
            y[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Plain proximal gradient with monotone backtracking, run for `iters` steps
/// from the intercept-only start.
pub fn ista(p: &TripleProblem, lambda: f64, iters: usize) -> Vec<f64> {
    let dim = p.dim();
    let n: f64 = p.rows().iter().map(|r| r.n).sum();
    let t: f64 = p.rows().iter().map(|r| r.t).sum();
    let mut x = vec![0.0; dim];
    x[0] = (n.max(1e-3) / t).ln();
    let mut lip = 1.0;
    let mut fx = ref_loss(p, &x);
    let mut z = vec![0.0; dim];
    for _ in 0..iters {
        let g = ref_grad(p, &x);
        loop {
            let step = 1.0 / lip;
            z[0] = x[0] - step * g[0];
            for j in 1..dim {
                let v = x[j] - step * g[j];
                z[j] = v.signum() * (v.abs() - lambda * step).max(0.0);
            }
            let fz = ref_loss(p, &z);
            let quad: f64 = (0..dim)
                .map(|j| g[j] * (z[j] - x[j]) + 0.5 * lip * (z[j] - x[j]).powi(2))
                .sum();
            if fz <= fx + quad + 1e-13 * (1.0 + fx.abs()) {
                fx = fz;
                break;
            }
            lip *= 2.0;
        }
        x.copy_from_slice(&z);
    }
    x
}
