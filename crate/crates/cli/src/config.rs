//! `key=value` config files. Entries override command-line flags.

use std::collections::BTreeMap;
use std::ffi::OsString;

use clap::CommandFactory;

use crate::error::CliError;

pub fn parse(text: &str, source: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("{source}: line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::input(format!("{source}: line {}: empty key", i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Appends `--key=value` for every config entry the subcommand accepts, so
/// the config takes precedence over earlier flags. Keys that no command
/// knows are an error; keys for other commands are ignored.
pub fn apply<C: CommandFactory>(
    args: Vec<OsString>,
    subcommand: &str,
    entries: &BTreeMap<String, String>,
) -> Result<Vec<OsString>, CliError> {
    let cmd = C::command();
    let longs = |c: &clap::Command| -> Vec<String> {
        c.get_arguments()
            .filter_map(|a| a.get_long().map(str::to_string))
            .collect()
    };
    let global = longs(&cmd);
    let here = cmd
        .find_subcommand(subcommand)
        .map(longs)
        .unwrap_or_default();
    let mut out = args;
    for (k, v) in entries {
        if k == "config" {
            continue;
        }
        if here.contains(k) || global.contains(k) {
            out.push(format!("--{k}={v}").into());
        } else if !cmd.get_subcommands().any(|s| longs(s).contains(k)) {
            return Err(CliError::input(format!("config: unknown key {k:?}")));
        }
    }
    Ok(out)
}
