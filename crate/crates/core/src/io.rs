//! JSON and CSV encodings of models, trajectories, statistics and fit reports.
//!
//! CIM configurations are keyed by bitstrings whose `i`-th character is the
//! state of the `i`-th parent in ascending order. Trajectory times are written
//! with 17 significant digits so that a round trip is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{CtbnError, Result};
use crate::model::{BetaMatrix, CtbnModel, State, MAX_NODES};
use crate::select::{StructureFit, TripleSelection};
use crate::simulate::{Jump, Trajectory};
use crate::stats::SuffStats;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    d: usize,
    parents: Vec<Vec<usize>>,
    cims: BTreeMap<String, BTreeMap<String, [f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<[Vec<f64>; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn config_key(k: usize, n_parents: usize) -> String {
    (0..n_parents).map(|i| if (k >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_config_key(key: &str, n_parents: usize) -> Option<usize> {
    if key.len() != n_parents {
        return None;
    }
    let mut k = 0usize;
    for (i, ch) in key.bytes().enumerate() {
        match ch {
            b'0' => {}
            b'1' => k |= 1 << i,
            _ => return None,
        }
    }
    Some(k)
}

pub fn model_to_json(model: &CtbnModel) -> String {
    let cims = (0..model.d())
        .map(|w| {
            let np = model.parents(w).len();
            let table = model.cims()[w]
                .iter()
                .enumerate()
                .map(|(k, q)| (config_key(k, np), *q))
                .collect();
            (w.to_string(), table)
        })
        .collect();
    let doc = ModelDoc {
        d: model.d(),
        parents: model.parent_lists().to_vec(),
        cims,
        beta: model.beta().map(|b| b.to_rows()),
        seed: model.seed(),
    };
    serde_json::to_string_pretty(&doc).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<CtbnModel> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    let d = doc.d;
    if !(2..=MAX_NODES).contains(&d) {
        return Err(CtbnError::param("d", format!("must lie in [2, {MAX_NODES}], got {d}")));
    }
    if doc.parents.len() != d {
        return Err(CtbnError::InvalidModel(format!(
            "expected {d} parent lists, got {}",
            doc.parents.len()
        )));
    }
    if doc.cims.len() != d {
        return Err(CtbnError::InvalidModel(format!("expected {d} CIM tables, got {}", doc.cims.len())));
    }
    let mut cims = Vec::with_capacity(d);
    for (w, pa) in doc.parents.iter().enumerate() {
        if pa.len() > 20 {
            return Err(CtbnError::Capacity(format!("node {w} has more than 20 parents")));
        }
        let table = doc
            .cims
            .get(&w.to_string())
            .ok_or_else(|| CtbnError::InvalidModel(format!("missing CIM table for node {w}")))?;
        let size = 1usize << pa.len();
        if table.len() != size {
            return Err(CtbnError::InvalidModel(format!(
                "node {w} has {} CIM entries, expected {size}",
                table.len()
            )));
        }
        let mut rows = vec![[0.0; 2]; size];
        for (key, q) in table {
            let k = parse_config_key(key, pa.len())
                .ok_or_else(|| CtbnError::InvalidModel(format!("bad configuration key {key:?} for node {w}")))?;
            rows[k] = *q;
        }
        cims.push(rows);
    }
    let beta = match doc.beta {
        Some(rows) => Some(BetaMatrix::from_rows(d, &rows)?),
        None => None,
    };
    CtbnModel::new(d, doc.parents, cims, beta, doc.seed)
}

/// Formats a real with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn trajectory_to_json(traj: &Trajectory) -> String {
    let mut out = String::new();
    let initial: Vec<String> = traj
        .initial()
        .to_bits(traj.d())
        .iter()
        .map(|b| b.to_string())
        .collect();
    let _ = write!(
        out,
        "{{\"d\": {}, \"T\": {}, \"initial\": [{}], \"jumps\": [",
        traj.d(),
        fmt17(traj.horizon()),
        initial.join(", ")
    );
    for (i, j) in traj.jumps().iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{{\"t\": {}, \"node\": {}}}", fmt17(j.time), j.node);
    }
    out.push_str("]}\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpDoc {
    t: f64,
    node: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    d: usize,
    #[serde(rename = "T")]
    horizon: f64,
    initial: Vec<u8>,
    jumps: Vec<JumpDoc>,
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    let doc: TrajectoryDoc = serde_json::from_str(text)?;
    if !(2..=MAX_NODES).contains(&doc.d) {
        return Err(CtbnError::param("d", format!("must lie in [2, {MAX_NODES}], got {}", doc.d)));
    }
    if doc.initial.len() != doc.d {
        return Err(CtbnError::InvalidInput(format!(
            "initial state has {} entries, expected {}",
            doc.initial.len(),
            doc.d
        )));
    }
    let initial = State::from_bits(&doc.initial)?;
    let jumps = doc
        .jumps
        .into_iter()
        .map(|j| Jump { time: j.t, node: j.node })
        .collect();
    Trajectory::new(doc.d, doc.horizon, initial, jumps)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsDoc {
    d: usize,
    #[serde(rename = "T")]
    horizon: f64,
    n: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>,
    t: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
}

const COUNT_KEYS: [&str; 2] = ["01", "10"];
const TIME_KEYS: [&str; 2] = ["0", "1"];

pub fn stats_to_json(stats: &SuffStats) -> String {
    let mut n = BTreeMap::new();
    let mut t = BTreeMap::new();
    for w in 0..stats.d() {
        let mut nw = BTreeMap::new();
        let mut tw = BTreeMap::new();
        for s in 0..2u8 {
            let counts = stats.counts(w, s).iter().map(|(c, v)| (c.to_string(), *v)).collect();
            let times = stats.times(w, s).iter().map(|(c, v)| (c.to_string(), *v)).collect();
            nw.insert(COUNT_KEYS[s as usize].to_string(), counts);
            tw.insert(TIME_KEYS[s as usize].to_string(), times);
        }
        n.insert(w.to_string(), nw);
        t.insert(w.to_string(), tw);
    }
    let doc = StatsDoc {
        d: stats.d(),
        horizon: stats.horizon(),
        n,
        t,
    };
    serde_json::to_string(&doc).expect("stats serialize")
}

pub fn stats_from_json(text: &str) -> Result<SuffStats> {
    let doc: StatsDoc = serde_json::from_str(text)?;
    let d = doc.d;
    if !(2..=MAX_NODES).contains(&d) {
        return Err(CtbnError::param("d", format!("must lie in [2, {MAX_NODES}], got {d}")));
    }
    let bad = |what: &str| CtbnError::InvalidInput(format!("stats JSON: {what}"));
    let parse_node = |k: &str| -> Result<usize> {
        k.parse::<usize>().ok().filter(|w| *w < d).ok_or_else(|| bad(&format!("node key {k:?}")))
    };
    let parse_mask = |k: &str| -> Result<u64> { k.parse::<u64>().map_err(|_| bad(&format!("mask key {k:?}"))) };
    let mut counts: Vec<[BTreeMap<u64, u64>; 2]> = vec![Default::default(); d];
    let mut times: Vec<[BTreeMap<u64, f64>; 2]> = vec![Default::default(); d];
    for (wk, per) in &doc.n {
        let w = parse_node(wk)?;
        for (sk, m) in per {
            let s = COUNT_KEYS.iter().position(|k| k == sk).ok_or_else(|| bad(&format!("transition {sk:?}")))?;
            for (c, v) in m {
                counts[w][s].insert(parse_mask(c)?, *v);
            }
        }
    }
    for (wk, per) in &doc.t {
        let w = parse_node(wk)?;
        for (sk, m) in per {
            let s = TIME_KEYS.iter().position(|k| k == sk).ok_or_else(|| bad(&format!("state {sk:?}")))?;
            for (c, v) in m {
                times[w][s].insert(parse_mask(c)?, *v);
            }
        }
    }
    SuffStats::from_parts(d, doc.horizon, counts, times)
}

#[derive(Serialize)]
struct SelectionDoc<'a> {
    w: usize,
    s: u8,
    sp: u8,
    lambda: f64,
    delta: f64,
    beta: &'a [f64],
    bic: f64,
    gic: f64,
}

/// One JSON object per triple, in row order.
pub fn selections_to_json(selections: &[TripleSelection]) -> String {
    let docs: Vec<SelectionDoc> = selections
        .iter()
        .map(|s| SelectionDoc {
            w: s.key.w,
            s: s.key.s,
            sp: s.key.target(),
            lambda: s.lambda,
            delta: s.delta,
            beta: &s.beta,
            bic: s.bic,
            gic: s.gic,
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&docs).expect("selections serialize");
    out.push('\n');
    out
}

/// `w,s,index,lambda,objective,nnz,kkt_gap` for every fitted grid point.
pub fn paths_to_csv(fit: &StructureFit) -> String {
    let mut out = String::from("w,s,index,lambda,objective,nnz,kkt_gap\n");
    for p in fit.paths.iter().flatten() {
        for i in 0..p.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.key.w,
                p.key.s,
                i,
                fmt_num(p.lambdas[i]),
                fmt_num(p.objectives[i]),
                p.nnz(i),
                fmt_num(p.kkt_gap[i])
            );
        }
    }
    out
}

/// One `u w` pair per line.
pub fn edges_to_text(edges: &crate::model::EdgeSet) -> String {
    let mut out = String::new();
    for (u, w) in edges.iter() {
        let _ = writeln!(out, "{u} {w}");
    }
    out
}
