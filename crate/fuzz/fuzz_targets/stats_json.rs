#![no_main]

use ctbn_core::io::{stats_from_json, stats_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(stats) = stats_from_json(&text) {
        let again = stats_from_json(&stats_to_json(&stats)).expect("written statistics parse");
        assert_eq!(again, stats);
    }
});
