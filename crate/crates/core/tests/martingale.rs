use ctbn_core::model::CtbnModel;
use ctbn_core::objective::TripleKey;
use ctbn_core::seed;
use ctbn_core::simulate::{PathSampler, StartSpec};
use ctbn_core::stats::extract;
use ctbn_core::theory::martingale_residual_stats;
use rayon::prelude::*;

/// Two nodes that are each other's parent; a node leaves state `s` at rate
/// 1 when `s` equals its parent's state and at rate 3 otherwise.
fn symmetric_pair() -> CtbnModel {
    let table = vec![[1.0, 3.0], [3.0, 1.0]];
    CtbnModel::new(2, vec![vec![1], vec![0]], vec![table.clone(), table], None, None).unwrap()
}

#[test]
fn residual_has_zero_mean() {
    let model = symmetric_pair();
    let sampler = PathSampler::new(&model, StartSpec::Stationary).unwrap();
    let reps = 10_000u64;
    let cells: Vec<(TripleKey, usize)> = TripleKey::all(2).flat_map(|key| (0..2).map(move |k| (key, k))).collect();
    let samples: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let traj = sampler.sample(5.0, seed::derive(77, r)).unwrap();
            let st = extract(&traj);
            cells
                .iter()
                .map(|&(key, k)| martingale_residual_stats(&st, &model, key, k).unwrap())
                .collect()
        })
        .collect();
    for (i, (key, k)) in cells.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|v| v[i]).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!(se > 0.0);
        assert!(mean.abs() <= 3.0 * se, "{key:?} coordinate {k}: mean {mean} se {se}");
    }
}
