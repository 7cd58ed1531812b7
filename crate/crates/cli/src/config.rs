//! TOML config files. Keys are flag names without the leading dashes;
//! top-level keys are global flags and `[simulate]`, `[fit]`, `[experiment]`,
//! `[theory]` tables hold subcommand flags. Values are spliced into the
//! command line ahead of the user's own flags, so explicit flags win.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use toml::{Table, Value};

pub const COMMANDS: [&str; 4] = ["simulate", "fit", "experiment", "theory"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub global: Vec<String>,
    pub commands: BTreeMap<String, Vec<String>>,
}

fn scalar(key: &str, v: &Value) -> Result<Option<String>> {
    Ok(match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(_) => None,
        _ => bail!("config key `{key}` must be a string, number, boolean or array of those"),
    })
}

fn flags(table: &Table, allow_tables: bool, out: &mut ConfigFile) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    for (key, v) in table {
        if key.is_empty() || key.starts_with('-') {
            bail!("config key `{key}` is not a flag name");
        }
        match v {
            Value::Table(sub) if allow_tables => {
                if !COMMANDS.contains(&key.as_str()) {
                    bail!("unknown config section `[{key}]`");
                }
                let sub_tokens = flags(sub, false, out)?;
                out.commands.insert(key.clone(), sub_tokens);
            }
            Value::Table(_) => bail!("config section `{key}` is nested too deeply"),
            Value::Boolean(b) => {
                if *b {
                    tokens.push(format!("--{key}"));
                }
            }
            Value::Array(items) => {
                for item in items {
                    let s = scalar(key, item)?
                        .with_context(|| format!("config key `{key}` holds a boolean inside an array"))?;
                    tokens.push(format!("--{key}"));
                    tokens.push(s);
                }
            }
            other => {
                tokens.push(format!("--{key}"));
                tokens.push(scalar(key, other)?.expect("non-boolean scalar"));
            }
        }
    }
    Ok(tokens)
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let table: Table = text.parse().context("config file is not valid TOML")?;
    let mut out = ConfigFile::default();
    out.global = flags(&table, true, &mut out)?;
    Ok(out)
}

/// Path given by `--config`, if any, looked up before clap runs.
pub fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            return None;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
        if a == "--config" {
            return it.next().cloned();
        }
    }
    None
}

/// Inserts config tokens: global ones right after the program name and
/// command ones right after the subcommand name.
pub fn splice(argv: &[String], cfg: &ConfigFile) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len() + cfg.global.len());
    let mut iter = argv.iter();
    if let Some(prog) = iter.next() {
        out.push(prog.clone());
    }
    out.extend(cfg.global.iter().cloned());
    let mut placed = false;
    let mut skip_value = false;
    for a in iter {
        out.push(a.clone());
        if skip_value {
            skip_value = false;
            continue;
        }
        if a == "--config" || a == "--threads" {
            skip_value = true;
            continue;
        }
        if !placed && COMMANDS.contains(&a.as_str()) {
            placed = true;
            if let Some(extra) = cfg.commands.get(a) {
                out.extend(extra.iter().cloned());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn tables_map_to_flags() {
        let cfg = parse_config("threads = 1\n[experiment]\nm1 = true\nd = 20\nT = 10.5\nbic-n = \"total\"\n").unwrap();
        assert_eq!(cfg.global, v(&["--threads", "1"]));
        assert_eq!(
            cfg.commands["experiment"],
            v(&["--T", "10.5", "--bic-n", "total", "--d", "20", "--m1"])
        );
    }

    #[test]
    fn splice_puts_user_flags_last() {
        let cfg = parse_config("[fit]\ntol = 1e-6\n").unwrap();
        let argv = v(&["ctbn", "--threads", "2", "fit", "--tol", "1e-7", "a.json"]);
        assert_eq!(
            splice(&argv, &cfg),
            v(&["ctbn", "--threads", "2", "fit", "--tol", "0.000001", "--tol", "1e-7", "a.json"])
        );
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(parse_config("[bogus]\nx = 1\n").is_err());
        assert!(parse_config("[fit.inner]\nx = 1\n").is_err());
        assert!(parse_config("x = { a = 1 }\n").is_err());
        assert!(parse_config("= 1").is_err());
        assert!(parse_config("x = [true]").is_err());
        assert!(parse_config("x = 1979-05-27").is_err());
    }

    #[test]
    fn finds_config_path() {
        assert_eq!(config_path(&v(&["ctbn", "--config", "c.toml", "fit"])), Some("c.toml".into()));
        assert_eq!(config_path(&v(&["ctbn", "--config=c.toml"])), Some("c.toml".into()));
        assert_eq!(config_path(&v(&["ctbn", "fit", "x.json"])), None);
    }
}
