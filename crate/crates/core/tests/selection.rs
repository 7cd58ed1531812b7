use ctbn_core::model::{make_m1, CtbnModel};
use ctbn_core::seed;
use ctbn_core::select::{learn, SelectConfig};
use ctbn_core::simulate::{sample_path, StartSpec};
use ctbn_core::solver::SolverConfig;
use ctbn_core::stats::extract;
use ctbn_core::theory::corollary2_check;
use ctbn_core::model::BetaMatrix;
use rayon::prelude::*;

/// Node 1 leaves state `s` at rate 1 when `s` equals node 0's state and at
/// rate 9 otherwise; nodes 0 and 2 flip at rate 5.
fn strong_edge() -> CtbnModel {
    CtbnModel::new(
        3,
        vec![vec![], vec![0], vec![]],
        vec![vec![[5.0, 5.0]], vec![[1.0, 9.0], [9.0, 1.0]], vec![[5.0, 5.0]]],
        None,
        None,
    )
    .unwrap()
}

#[test]
fn strong_edge_is_selected() {
    let model = strong_edge();
    let hits: usize = (0..100u64)
        .into_par_iter()
        .map(|r| {
            let traj = sample_path(&model, &StartSpec::Stationary, 50.0, seed::derive(501, r)).unwrap();
            let fit = learn(&extract(&traj), &SolverConfig::default(), &SelectConfig::default()).unwrap();
            usize::from(fit.edges.contains(0, 1))
        })
        .sum();
    assert!(hits >= 95, "strong edge found in {hits}/100 runs");
}

#[test]
fn jump_free_trajectory_gives_no_edges() {
    let traj = ctbn_core::simulate::Trajectory::new(4, 3.0, ctbn_core::model::State(0b0110), vec![]).unwrap();
    let fit = learn(&extract(&traj), &SolverConfig::default(), &SelectConfig::default()).unwrap();
    assert!(fit.edges.is_empty());
}

#[test]
fn m1_chain_is_recovered_at_long_horizon() {
    let model = make_m1(3, 12).unwrap();
    let traj = sample_path(&model, &StartSpec::Stationary, 200.0, 13).unwrap();
    let fit = learn(&extract(&traj), &SolverConfig::default(), &SelectConfig::default()).unwrap();
    assert!(fit.edges.contains(0, 1) && fit.edges.contains(1, 2), "{:?}", fit.edges);
}

fn estimate(fit: &ctbn_core::select::StructureFit, d: usize) -> BetaMatrix {
    let mut b = BetaMatrix::zeros(d);
    for sel in &fit.selections {
        b.row_mut(sel.key.w, sel.key.s).copy_from_slice(&sel.beta_pre);
    }
    b
}

#[test]
fn thresholding_recovers_support_whenever_premise_holds() {
    let mut applicable = 0;
    for r in 0..20u64 {
        let model = make_m1(3, seed::derive(900, r)).unwrap();
        let beta = model.beta().unwrap();
        let traj = sample_path(&model, &StartSpec::Stationary, 200.0, seed::derive(901, r)).unwrap();
        let fit = learn(&extract(&traj), &SolverConfig::default(), &SelectConfig::default()).unwrap();
        let beta_hat = estimate(&fit, 3);
        for delta in [0.25, 0.5, 0.75, 1.0] {
            if let Some(exact) = corollary2_check(&beta_hat, beta, delta) {
                applicable += 1;
                assert!(exact, "run {r} delta {delta}");
            }
        }
    }
    println!("premise held in {applicable}/80 (run, delta) pairs");
}
