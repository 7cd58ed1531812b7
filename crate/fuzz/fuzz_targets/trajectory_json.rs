#![no_main]

use ctbn_core::io::{trajectory_from_json, trajectory_to_json};
use ctbn_core::stats::extract;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(traj) = trajectory_from_json(&text) {
        let again = trajectory_from_json(&trajectory_to_json(&traj)).expect("written trajectory parses");
        assert_eq!(again, traj);
        if traj.d() <= 16 && traj.jumps().len() <= 4096 {
            let _ = extract(&traj);
        }
    }
});
