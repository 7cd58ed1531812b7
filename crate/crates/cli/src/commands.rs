use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;

use ctbn_core::chain::{analyze_chain, MAX_AMALGAMATE_NODES};
use ctbn_core::io::{
    edges_to_text, fmt_num, model_from_json, model_to_json, paths_to_csv, selections_to_json, stats_from_json, stats_to_json,
    trajectory_from_json, trajectory_to_json,
};
use ctbn_core::metrics::{run_experiment, ExperimentSpec, ModelKind};
use ctbn_core::model::{CtbnModel, State};
use ctbn_core::seed;
use ctbn_core::select::{learn, SampleSize, SelectConfig, ThresholdGrid};
use ctbn_core::simulate::{PathSampler, StartSpec};
use ctbn_core::solver::SolverConfig;
use ctbn_core::stats::{extract, SuffStats};
use ctbn_core::theory::{cif_diagnostic, cif_report, theory_report};

use crate::output::{csv_field, Metadata, OutDir};
use crate::{BicN, ExperimentArgs, FitArgs, SimulateArgs, SolverArgs, StartArg, TheoryArgs};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        bail!("--T must be positive and finite, got {t}");
    }
    Ok(())
}

fn generate(kind: ModelKind, d: usize, model_seed: u64) -> Result<CtbnModel> {
    kind.generate(d, model_seed).context("invalid --d")
}

fn solver_config(a: &SolverArgs) -> Result<(SolverConfig, SelectConfig)> {
    let cfg = SolverConfig {
        grid_size: a.grid_size,
        lambda_min_ratio: a.lambda_min_ratio,
        l0: a.l0,
        eta: a.backtrack,
        max_iter: a.max_iter,
        tol: a.tol,
    };
    cfg.validate().context("invalid solver flag")?;
    let grid = match &a.delta_grid {
        Some(v) => {
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                bail!("--delta-grid values must be finite and >= 0");
            }
            ThresholdGrid::Custom(v.clone())
        }
        None => ThresholdGrid::Realized,
    };
    let sample_size = match a.bic_n {
        BicN::Transition => SampleSize::Transition,
        BicN::Total => SampleSize::Total,
    };
    Ok((cfg, SelectConfig { grid, sample_size }))
}

fn solver_json(a: &SolverArgs) -> serde_json::Value {
    json!({
        "grid_size": a.grid_size,
        "lambda_min_ratio": a.lambda_min_ratio,
        "tol": a.tol,
        "max_iter": a.max_iter,
        "l0": a.l0,
        "backtrack": a.backtrack,
        "bic_n": match a.bic_n { BicN::Transition => "transition", BicN::Total => "total" },
        "delta_grid": a.delta_grid,
    })
}

const START_NOTE: &str =
    "stationary starts are exact for d <= 14 and use a burn-in of 10 time units from the all-zero state otherwise";

pub fn simulate(a: &SimulateArgs, threads: usize) -> Result<()> {
    check_horizon(a.horizon)?;
    let model_seed = seed::derive(a.seed, 0);
    let (model, source) = if let Some(path) = &a.source.model {
        let model = model_from_json(&read(path)?).with_context(|| format!("invalid model file {}", path.display()))?;
        (model, json!({ "model_file": path.display().to_string() }))
    } else {
        let kind = if a.source.m1 { ModelKind::M1 } else { ModelKind::M2 };
        let d = a.d.context("--d is required with --m1 / --m2")?;
        (generate(kind, d, model_seed)?, json!({ "generator": kind.name(), "d": d }))
    };
    let start = match a.start {
        StartArg::Stationary => StartSpec::Stationary,
        StartArg::Zero => StartSpec::Fixed(State(0)),
    };
    let sampler = PathSampler::new(&model, start)?;
    let sim_seeds: Vec<u64> = (0..a.reps).map(|r| seed::derive(seed::derive(a.seed, 1), r)).collect();
    let trajectories = sim_seeds
        .par_iter()
        .map(|&s| sampler.sample(a.horizon, s))
        .collect::<ctbn_core::Result<Vec<_>>>()?;

    let mut out = OutDir::create(&a.out)?;
    out.write("model.json", &(model_to_json(&model) + "\n"))?;
    for (r, traj) in trajectories.iter().enumerate() {
        out.write(&format!("traj_{r:03}.json"), &(trajectory_to_json(traj) + "\n"))?;
    }
    out.finish(Metadata {
        command: "simulate",
        threads,
        parameters: json!({
            "source": source,
            "T": a.horizon,
            "reps": a.reps,
            "seed": a.seed,
            "start": match a.start { StartArg::Stationary => "stationary", StartArg::Zero => "zero" },
        }),
        seeds: json!({ "model": if a.source.model.is_some() { None } else { Some(model_seed) }, "trajectories": sim_seeds }),
        notes: vec![START_NOTE],
    })
}

pub fn fit(a: &FitArgs, threads: usize) -> Result<()> {
    let (cfg, sel) = solver_config(&a.solver)?;
    let parts = a
        .inputs
        .iter()
        .map(|path| {
            let text = read(path)?;
            let parsed = if a.stats {
                stats_from_json(&text)
            } else {
                trajectory_from_json(&text).map(|t| extract(&t))
            };
            parsed.with_context(|| format!("cannot parse {}", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = SuffStats::pooled(&parts)?;
    let fit = learn(&stats, &cfg, &sel)?;

    let mut out = OutDir::create(&a.out)?;
    out.write("stats.json", &(stats_to_json(&stats) + "\n"))?;
    out.write("paths.csv", &paths_to_csv(&fit))?;
    out.write("selections.json", &(selections_to_json(&fit.selections) + "\n"))?;
    out.write("edges.txt", &edges_to_text(&fit.edges))?;
    out.finish(Metadata {
        command: "fit",
        threads,
        parameters: json!({
            "inputs": a.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "input_kind": if a.stats { "stats" } else { "trajectory" },
            "solver": solver_json(&a.solver),
            "d": stats.d(),
            "T": stats.horizon(),
            "n_jumps": fit.n_jumps,
            "n_edges": fit.edges.len(),
        }),
        seeds: json!(null),
        notes: vec![],
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn experiment(a: &ExperimentArgs, threads: usize) -> Result<()> {
    check_horizon(a.horizon)?;
    let (cfg, sel) = solver_config(&a.solver)?;
    let kind = if a.generator.m1 { ModelKind::M1 } else { ModelKind::M2 };
    generate(kind, a.d, 0)?;
    let spec = ExperimentSpec {
        model: kind,
        d: a.d,
        horizon: a.horizon,
        n_reps: a.reps as usize,
        seed: a.seed,
    };
    let report = run_experiment(&spec, &cfg, &sel)?;

    let mut reps_csv = String::from("model,d,T,rep,power,fdr,md,undirected_power,error\n");
    for r in &report.reps {
        let (p, f, m, u, err) = match &r.result {
            Ok(s) => (Some(s.power), Some(s.fdr), Some(s.md as f64), Some(s.undirected_power), String::new()),
            Err(e) => (None, None, None, None, e.clone()),
        };
        reps_csv += &format!(
            "{},{},{},{},{},{},{},{},{}\n",
            kind.name(),
            a.d,
            fmt_num(a.horizon),
            r.rep,
            fmt_opt(p),
            fmt_opt(f),
            fmt_opt(m),
            fmt_opt(u),
            csv_field(&err)
        );
    }
    let summary = format!(
        "model,d,T,reps,power,fdr,md,undirected_power,failures\n{},{},{},{},{},{},{},{},{}\n",
        kind.name(),
        a.d,
        fmt_num(a.horizon),
        a.reps,
        fmt_num(report.mean_power),
        fmt_num(report.mean_fdr),
        fmt_num(report.mean_md),
        fmt_num(report.mean_undirected_power),
        report.failures
    );

    let mut out = OutDir::create(&a.out)?;
    out.write("reps.csv", &reps_csv)?;
    out.write("summary.csv", &summary)?;
    out.finish(Metadata {
        command: "experiment",
        threads,
        parameters: json!({
            "model": kind.name(),
            "d": a.d,
            "T": a.horizon,
            "reps": a.reps,
            "seed": a.seed,
            "solver": solver_json(&a.solver),
        }),
        seeds: json!(report
            .reps
            .iter()
            .map(|r| json!({ "rep": r.rep, "model": r.model_seed, "trajectory": r.sim_seed, "n_jumps": r.n_jumps }))
            .collect::<Vec<_>>()),
        notes: vec!["a fresh model is drawn for every replicate", START_NOTE],
    })?;
    eprintln!(
        "{} d={} T={} reps={}: power {:.3} fdr {:.3} md {:.2} undirected {:.3} failures {} ({:.1}s)",
        kind.name(),
        a.d,
        a.horizon,
        a.reps,
        report.mean_power,
        report.mean_fdr,
        report.mean_md,
        report.mean_undirected_power,
        report.failures,
        report.runtime_secs
    );
    Ok(())
}

pub fn theory(a: &TheoryArgs, threads: usize) -> Result<()> {
    let model =
        model_from_json(&read(&a.model)?).with_context(|| format!("invalid model file {}", a.model.display()))?;
    if model.beta().is_none() {
        bail!("unsupported model: theory quantities need log-linear coefficients (beta), which this model does not carry");
    }
    if model.d() > MAX_AMALGAMATE_NODES {
        bail!(
            "unsupported model: theory bounds need the exact stationary law, computed only for d <= {MAX_AMALGAMATE_NODES} (model has d = {})",
            model.d()
        );
    }
    if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
        bail!("--epsilon must lie in (0, 1), got {}", a.epsilon);
    }
    if let Some(t) = a.horizon {
        check_horizon(t)?;
    }
    let analysis = analyze_chain(&model, None)?;
    let report = theory_report(&model, &analysis, a.xi, a.epsilon, a.horizon)?;
    let cif = cif_report(&model, a.xi)?;
    let mut value = serde_json::to_value(&report)?;
    let obj = value.as_object_mut().expect("report serializes to an object");
    obj.insert("S_size".into(), json!(cif.s_size));
    obj.insert("max_Sw".into(), json!(cif.max_sw));
    if a.cone_samples > 0 {
        let ratio = cif_diagnostic(&model, a.xi, a.cone_samples, a.seed)?;
        obj.insert("cone_samples".into(), json!(a.cone_samples));
        obj.insert("cone_min_ratio".into(), json!(ratio));
    }

    let mut out = OutDir::create(&a.out)?;
    out.write("theory.json", &(serde_json::to_string_pretty(&value)? + "\n"))?;
    out.finish(Metadata {
        command: "theory",
        threads,
        parameters: json!({
            "model_file": a.model.display().to_string(),
            "xi": a.xi,
            "epsilon": a.epsilon,
            "T": a.horizon,
            "cone_samples": a.cone_samples,
        }),
        seeds: json!({ "cone": if a.cone_samples > 0 { Some(a.seed) } else { None } }),
        notes: vec!["the initial law is taken to be the stationary law"],
    })
}
