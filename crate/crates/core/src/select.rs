//! Model selection along a penalty path and edge recovery.
//!
//! BIC picks one fit per triple, GIC then picks a hard threshold for its
//! penalized coefficients, and edges are read off what survives. Both
//! criteria use the per-triple loss exactly as the solver sees it (with the
//! `1/T` prefactor), multiplied by a jump count `n`. By default `n` is the
//! number of jumps of the transition being fitted; [`SampleSize::Total`]
//! uses every jump of the trajectory instead.

use rayon::prelude::*;

use crate::error::{CtbnError, Result};
use crate::model::{coordinate_node, EdgeSet};
use crate::objective::{build_triple, loss, TripleKey, TripleProblem};
use crate::solver::{path, LambdaPath, SolverConfig};
use crate::stats::SuffStats;

fn nnz(beta: &[f64]) -> usize {
    beta[1..].iter().filter(|v| **v != 0.0).count()
}

/// `n * loss + log(n) * ||beta||_0` (intercept excluded).
pub fn bic_value(loss_value: f64, beta: &[f64], n_jumps: u64) -> f64 {
    let n = n_jumps as f64;
    n * loss_value + n.ln() * nnz(beta) as f64
}

/// `n * loss + log(2d(d-1)) * ||beta||_0` (intercept excluded).
pub fn gic_value(loss_value: f64, beta: &[f64], n_jumps: u64, d: usize) -> f64 {
    let n = n_jumps as f64;
    n * loss_value + ((2 * d * (d - 1)) as f64).ln() * nnz(beta) as f64
}

/// Index minimizing BIC over the path; ties go to the larger penalty. With
/// at most one observed jump the empty model (index 0) is returned.
pub fn bic_select(path: &LambdaPath, n_jumps: u64) -> Result<usize> {
    if path.is_empty() {
        return Err(CtbnError::InvalidInput("empty lambda path".into()));
    }
    if n_jumps <= 1 {
        return Ok(0);
    }
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for i in 0..path.len() {
        let v = bic_value(path.losses[i], &path.solutions[i], n_jumps);
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    Ok(best)
}

/// Candidate thresholds for GIC.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ThresholdGrid {
    /// `{0}` together with every distinct penalized magnitude of the estimate.
    #[default]
    Realized,
    Custom(Vec<f64>),
}

impl ThresholdGrid {
    pub fn values(&self, beta: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = match self {
            ThresholdGrid::Realized => std::iter::once(0.0)
                .chain(beta[1..].iter().map(|b| b.abs()))
                .collect(),
            ThresholdGrid::Custom(v) => v.clone(),
        };
        v.retain(|x| x.is_finite() && *x >= 0.0);
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        v.dedup();
        v
    }
}

/// Zeroes penalized coordinates with `|beta_j| <= delta`; the intercept is kept.
pub fn hard_threshold(beta: &[f64], delta: f64) -> Vec<f64> {
    let mut out = beta.to_vec();
    for v in &mut out[1..] {
        if v.abs() <= delta {
            *v = 0.0;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdChoice {
    pub delta: f64,
    pub beta: Vec<f64>,
    pub gic: f64,
}

/// Minimizes GIC over the threshold grid; ties go to the larger threshold.
pub fn gic_threshold(
    beta_hat: &[f64],
    p: &TripleProblem,
    n_jumps: u64,
    d: usize,
    grid: &ThresholdGrid,
) -> ThresholdChoice {
    let mut deltas = grid.values(beta_hat);
    if deltas.is_empty() {
        deltas.push(0.0);
    }
    let mut best: Option<ThresholdChoice> = None;
    for delta in deltas {
        let beta = hard_threshold(beta_hat, delta);
        let gic = gic_value(loss(p, &beta), &beta, n_jumps, d);
        if best.as_ref().map_or(true, |b| gic <= b.gic) {
            best = Some(ThresholdChoice { delta, beta, gic });
        }
    }
    best.expect("grid is non-empty")
}

/// Which jump count plays the role of `n` in both criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleSize {
    /// `sum_c n_w(c; s, 1-s)` for the triple being selected.
    #[default]
    Transition,
    /// All jumps of the trajectory.
    Total,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectConfig {
    pub grid: ThresholdGrid,
    pub sample_size: SampleSize,
}

/// Selection outcome for one `(w, s -> 1-s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleSelection {
    pub key: TripleKey,
    /// `None` when the triple has no occupation time and was not fitted.
    pub index: Option<usize>,
    pub lambda: f64,
    pub beta_pre: Vec<f64>,
    pub delta: f64,
    pub beta: Vec<f64>,
    pub bic: f64,
    pub gic: f64,
}

impl TripleSelection {
    fn degenerate(key: TripleKey, d: usize) -> Self {
        TripleSelection {
            key,
            index: None,
            lambda: 0.0,
            beta_pre: vec![0.0; d],
            delta: 0.0,
            beta: vec![0.0; d],
            bic: 0.0,
            gic: 0.0,
        }
    }
}

/// Edge `u -> w` is present iff either transition of `w` keeps a nonzero
/// coefficient on `u`.
pub fn assemble_edges(selections: &[TripleSelection]) -> EdgeSet {
    selections
        .iter()
        .flat_map(|sel| {
            let w = sel.key.w;
            sel.beta[1..]
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(move |(k, _)| (coordinate_node(w, k), w))
        })
        .collect()
}

/// Everything produced by fitting one trajectory.
#[derive(Debug, Clone)]
pub struct StructureFit {
    pub d: usize,
    pub n_jumps: u64,
    /// Indexed like [`TripleKey::all`]; `None` for degenerate triples.
    pub paths: Vec<Option<LambdaPath>>,
    pub selections: Vec<TripleSelection>,
    pub edges: EdgeSet,
}

fn fit_triple(
    stats: &SuffStats,
    key: TripleKey,
    total_jumps: u64,
    cfg: &SolverConfig,
    sel: &SelectConfig,
) -> Result<(Option<LambdaPath>, TripleSelection)> {
    let d = stats.d();
    let p = match build_triple(stats, key) {
        Ok(p) => p,
        Err(CtbnError::DegenerateTriple { .. }) => {
            return Ok((None, TripleSelection::degenerate(key, d)))
        }
        Err(e) => return Err(e),
    };
    let lp = path(&p, cfg)?;
    let n_jumps = match sel.sample_size {
        SampleSize::Transition => p.total_count() as u64,
        SampleSize::Total => total_jumps,
    };
    let i = if n_jumps == 0 { 0 } else { bic_select(&lp, n_jumps)? };
    let beta_pre = lp.solutions[i].clone();
    let bic = bic_value(lp.losses[i], &beta_pre, n_jumps);
    let choice = if n_jumps == 0 {
        let beta = hard_threshold(&beta_pre, f64::INFINITY);
        ThresholdChoice {
            delta: 0.0,
            gic: gic_value(loss(&p, &beta), &beta, n_jumps, d),
            beta,
        }
    } else {
        gic_threshold(&beta_pre, &p, n_jumps, d, &sel.grid)
    };
    let sel = TripleSelection {
        key,
        index: Some(i),
        lambda: lp.lambdas[i],
        beta_pre,
        delta: choice.delta,
        beta: choice.beta,
        bic,
        gic: choice.gic,
    };
    Ok((Some(lp), sel))
}

/// Fits every triple's path, selects by BIC, thresholds by GIC and assembles edges.
pub fn learn(stats: &SuffStats, cfg: &SolverConfig, sel: &SelectConfig) -> Result<StructureFit> {
    cfg.validate()?;
    let d = stats.d();
    let n_jumps = stats.total_jumps();
    let keys: Vec<TripleKey> = TripleKey::all(d).collect();
    let fitted: Vec<(Option<LambdaPath>, TripleSelection)> = keys
        .par_iter()
        .map(|&k| fit_triple(stats, k, n_jumps, cfg, sel))
        .collect::<Result<_>>()?;
    let (paths, selections): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let edges = assemble_edges(&selections);
    Ok(StructureFit {
        d,
        n_jumps,
        paths,
        selections,
        edges,
    })
}
