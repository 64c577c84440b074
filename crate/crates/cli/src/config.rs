//! Config-file overlay.
//!
//! Values from the file are spliced into the argument list right after the
//! subcommand, ahead of the user's own flags. Since every flag overrides
//! itself, anything given explicitly wins.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config-file" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config-file=") {
            return Some(v.into());
        }
        if s == "--" {
            break;
        }
    }
    None
}

fn render(key: &str, value: &toml::Value) -> Result<Option<String>, String> {
    let scalar = |v: &toml::Value| match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        other => Err(format!("config key `{key}`: unsupported value {other}")),
    };
    Ok(match value {
        toml::Value::Boolean(true) => Some(format!("--{key}")),
        toml::Value::Boolean(false) => None,
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
            Some(format!("--{key}={}", parts.join(",")))
        }
        v => Some(format!("--{key}={}", scalar(v)?)),
    })
}

/// Returns `args` with the config file's values inserted, or a usage error.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;

    // locate the subcommand chain among the arguments
    let mut cmd = Cli::command();
    let mut chain: Vec<String> = Vec::new();
    let mut insert_at = None;
    let mut skip_next = false;
    for (i, a) in args.iter().enumerate().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        let s = a.to_string_lossy();
        if s == "--config-file" {
            skip_next = true;
            continue;
        }
        if s.starts_with('-') {
            continue;
        }
        match cmd.find_subcommand(s.as_ref()) {
            Some(sub) => {
                let sub = sub.clone();
                chain.push(s.into_owned());
                insert_at = Some(i + 1);
                cmd = sub;
                if !cmd.has_subcommands() {
                    break;
                }
            }
            None => break,
        }
    }
    let Some(insert_at) = insert_at else {
        return Ok(args);
    };
    let known = |key: &str| cmd.get_arguments().any(|a| a.get_long() == Some(key));

    let mut extra: Vec<String> = Vec::new();
    for (key, value) in &table {
        if !value.is_table() && known(key) {
            extra.extend(render(key, value)?);
        }
    }
    let mut section = Some(&table);
    for name in &chain {
        section = section.and_then(|t| t.get(name)).and_then(toml::Value::as_table);
    }
    if let Some(section) = section {
        for (key, value) in section {
            if value.is_table() {
                continue;
            }
            if !known(key) {
                return Err(format!(
                    "config {}: `{key}` is not a flag of `{}`",
                    path.display(),
                    chain.join(" ")
                ));
            }
            extra.extend(render(key, value)?);
        }
    }
    let mut out = args;
    out.splice(insert_at..insert_at, extra.into_iter().map(OsString::from));
    Ok(out)
}
