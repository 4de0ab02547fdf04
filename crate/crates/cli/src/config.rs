//! `--config <file>` support: flat `key=value` lines merged into the
//! command line so that explicit flags win.

use std::ffi::OsString;
use std::fmt;
use std::path::Path;

/// Bad flags, bad config file, or values rejected before any work starts.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may use `_` or `-`.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected key=value, got {line:?}", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(ConfigError(format!("config line {}: invalid key {key:?}", i + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Converts config entries into flags. `true` becomes a bare switch and
/// `false` is dropped.
fn as_flags(entries: &[(String, String)]) -> Vec<OsString> {
    let mut out = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "false" => {}
            "true" => out.push(format!("--{key}").into()),
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    out
}

/// Value of `--config` in `args`, if any.
fn config_path(args: &[OsString]) -> Result<Option<OsString>, ConfigError> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned().map(Some).ok_or_else(|| ConfigError("--config needs a file path".into()));
        }
        if let Some(path) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            return Ok(Some(path.into()));
        }
    }
    Ok(None)
}

/// Inserts flags from the config file right after the sub-command name.
/// Command-line flags come later and therefore override them.
pub fn merge_config(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| ConfigError(format!("reading config {}: {e}", Path::new(&path).display())))?;
    let flags = as_flags(&parse_config(&text)?);
    let at = args.iter().position(|a| a.to_str().is_some_and(|s| subcommands.contains(&s)));
    let Some(at) = at else {
        return Ok(args);
    };
    let mut merged = args[..=at].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&args[at + 1..]);
    Ok(merged)
}
