//! Structure-recovery scores and the replicated simulation study.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{CtbnError, Result};
use crate::model::{make_m1, make_m2, CtbnModel, EdgeSet};
use crate::seed;
use crate::select::{learn, SelectConfig};
use crate::simulate::{PathSampler, StartSpec};
use crate::solver::SolverConfig;
use crate::stats::extract;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryScore {
    /// Fraction of true edges selected.
    pub power: f64,
    /// Fraction of selected edges that are false, with `max(|est|, 1)` in the denominator.
    pub fdr: f64,
    /// Number of selected edges.
    pub md: usize,
    /// Fraction of true edges selected in at least one direction.
    pub undirected_power: f64,
}

pub fn score(truth: &EdgeSet, est: &EdgeSet) -> Result<RecoveryScore> {
    if truth.is_empty() {
        return Err(CtbnError::UndefinedPower);
    }
    let hits = truth.iter().filter(|&&(u, w)| est.contains(u, w)).count();
    let loose = truth
        .iter()
        .filter(|&&(u, w)| est.contains(u, w) || est.contains(w, u))
        .count();
    let false_pos = est.len() - est.iter().filter(|&&(u, w)| truth.contains(u, w)).count();
    Ok(RecoveryScore {
        power: hits as f64 / truth.len() as f64,
        fdr: false_pos as f64 / est.len().max(1) as f64,
        md: est.len(),
        undirected_power: loose as f64 / truth.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    M1,
    M2,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::M1 => "M1",
            ModelKind::M2 => "M2",
        }
    }

    pub fn generate(self, d: usize, rng_seed: u64) -> Result<CtbnModel> {
        match self {
            ModelKind::M1 => make_m1(d, rng_seed),
            ModelKind::M2 => make_m2(d, rng_seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub model: ModelKind,
    pub d: usize,
    pub horizon: f64,
    pub n_reps: usize,
    pub seed: u64,
}

/// Seeds used by replicate `rep`: `(model seed, simulation seed)`.
pub fn replicate_seeds(seed: u64, rep: usize) -> (u64, u64) {
    let base = seed::derive(seed, rep as u64);
    (seed::derive(base, 0), seed::derive(base, 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub rep: usize,
    pub model_seed: u64,
    pub sim_seed: u64,
    pub n_jumps: u64,
    pub result: std::result::Result<RecoveryScore, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub mean_power: f64,
    pub mean_fdr: f64,
    pub mean_md: f64,
    pub mean_undirected_power: f64,
    pub failures: usize,
    pub reps: Vec<RepOutcome>,
    pub runtime_secs: f64,
}

/// Runs one replicate: fresh model draw, stationary-start simulation, fit, score.
pub fn run_replicate(spec: &ExperimentSpec, cfg: &SolverConfig, sel: &SelectConfig, rep: usize) -> RepOutcome {
    let (model_seed, sim_seed) = replicate_seeds(spec.seed, rep);
    let mut n_jumps = 0;
    let result = (|| -> Result<RecoveryScore> {
        let model = spec.model.generate(spec.d, model_seed)?;
        let traj = PathSampler::new(&model, StartSpec::Stationary)?.sample(spec.horizon, sim_seed)?;
        let stats = extract(&traj);
        n_jumps = stats.total_jumps();
        let fit = learn(&stats, cfg, sel)?;
        score(&model.edges(), &fit.edges)
    })()
    .map_err(|e| e.to_string());
    RepOutcome {
        rep,
        model_seed,
        sim_seed,
        n_jumps,
        result,
    }
}

pub fn run_experiment(spec: &ExperimentSpec, cfg: &SolverConfig, sel: &SelectConfig) -> Result<ExperimentReport> {
    if spec.n_reps == 0 {
        return Err(CtbnError::param("reps", "must be at least 1"));
    }
    if !(spec.horizon.is_finite() && spec.horizon > 0.0) {
        return Err(CtbnError::param("T", "must be positive and finite"));
    }
    cfg.validate()?;
    // surface generator errors (e.g. d too small) before spawning replicates
    spec.model.generate(spec.d, 0)?;
    let start = Instant::now();
    let reps: Vec<RepOutcome> = (0..spec.n_reps)
        .into_par_iter()
        .map(|r| run_replicate(spec, cfg, sel, r))
        .collect();
    let ok: Vec<&RecoveryScore> = reps.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let mean = |f: &dyn Fn(&RecoveryScore) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|s| f(s)).sum::<f64>() / ok.len() as f64
        }
    };
    Ok(ExperimentReport {
        spec: spec.clone(),
        mean_power: mean(&|s| s.power),
        mean_fdr: mean(&|s| s.fdr),
        mean_md: mean(&|s| s.md as f64),
        mean_undirected_power: mean(&|s| s.undirected_power),
        failures: reps.len() - ok.len(),
        reps,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}
