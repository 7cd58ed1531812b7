//! Output directory handling and the per-run metadata record.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Collects the files written by one command; `finish` adds `metadata.json`.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self, meta: Metadata) -> Result<()> {
        let record = MetadataRecord {
            tool: "ctbn",
            version: env!("CARGO_PKG_VERSION"),
            core_version: ctbn_core::VERSION,
            command: meta.command,
            threads: meta.threads,
            parameters: meta.parameters,
            seeds: meta.seeds,
            notes: meta.notes,
            outputs: self.written.clone(),
        };
        let text = serde_json::to_string_pretty(&record)? + "\n";
        self.write("metadata.json", &text)
    }
}

pub struct Metadata {
    pub command: &'static str,
    pub threads: usize,
    pub parameters: Value,
    pub seeds: Value,
    pub notes: Vec<&'static str>,
}

#[derive(Serialize)]
struct MetadataRecord {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'static str,
    threads: usize,
    parameters: Value,
    seeds: Value,
    notes: Vec<&'static str>,
    outputs: Vec<String>,
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    }
}
