//! Config files: parsing and splicing into an argument list never panic.

#![no_main]

use ctbn_cli::config::{parse_config, splice};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(cfg) = parse_config(&text) {
        let argv: Vec<String> = ["ctbn", "--threads", "1", "fit", "x.json"].iter().map(|s| s.to_string()).collect();
        let spliced = splice(&argv, &cfg);
        assert!(spliced.len() >= argv.len());
        assert_eq!(spliced[0], "ctbn");
    }
});
