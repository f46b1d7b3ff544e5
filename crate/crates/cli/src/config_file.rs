//! `key = value` files whose entries override command-line flags.
//!
//! Each entry becomes `--key value` appended after the real arguments, so with
//! self-overriding flags the file wins. `true` turns a switch on, `false`
//! leaves it off. Keys may use `_` or `-`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use ppi_core::Error;

/// Path given by `--config FILE` or `--config=FILE`, if any.
pub fn find_config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

pub fn parse(text: &str, path: &Path) -> Result<Vec<OsString>, Error> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected `key = value`, found `{line}`",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!(
                "{}:{}: invalid key `{key}`",
                path.display(),
                i + 1
            )));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<OsString>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse(&text, path)
}
