//! Model JSON: parsing never panics and accepted models survive a round trip.

#![no_main]

use ctbn_core::io::{model_from_json, model_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(model) = model_from_json(&text) {
        let again = model_from_json(&model_to_json(&model)).expect("written model parses");
        assert_eq!(model_to_json(&again), model_to_json(&model));
    }
});
