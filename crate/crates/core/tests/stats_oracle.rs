mod oracles;

use ctbn_core::seed;
use ctbn_core::stats::{extract, TIME_SUM_TOL};

#[test]
fn sparse_extract_matches_dense_accumulator() {
    let mut rng = seed::rng(90);
    for case in 0..50 {
        let d = 2 + case % 2;
        let horizon = [0.5, 3.0, 17.0][case % 3];
        let traj = oracles::random_trajectory(&mut rng, d, horizon, 40);
        let sparse = extract(&traj);
        let dense = oracles::dense_stats(&traj);
        for w in 0..d {
            for s in 0..2u8 {
                assert_eq!(sparse.counts(w, s), &dense.counts[w][s as usize], "case {case} w {w} s {s}");
                assert_eq!(sparse.times(w, s), &dense.times[w][s as usize], "case {case} w {w} s {s}");
            }
            let total = sparse.occupation(w, 0) + sparse.occupation(w, 1);
            assert!((total - horizon).abs() <= TIME_SUM_TOL, "case {case}: {total} vs {horizon}");
        }
        assert_eq!(sparse.total_jumps(), traj.jumps().len() as u64);
    }
}

#[test]
fn jump_free_trajectory_has_single_cell() {
    let traj = ctbn_core::simulate::Trajectory::new(3, 2.5, ctbn_core::model::State(0b101), vec![]).unwrap();
    let st = extract(&traj);
    assert_eq!(st.total_jumps(), 0);
    assert_eq!(st.time(1, 0, 0b11), 2.5);
    assert_eq!(st.times(0, 1).len(), 1);
    assert!(st.times(0, 0).is_empty());
}
