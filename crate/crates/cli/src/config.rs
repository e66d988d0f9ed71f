//! `--config FILE`: `key=value` lines where each key is a flag name without
//! the leading dashes (`_` may stand for `-`). `#` starts a comment and `config_version` (currently
//! 1) is optional. Values are injected as flags of the selected subcommand
//! unless the command line already sets them.

use std::path::Path;

use anyhow::{bail, Context};
use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};

use crate::args::command;

pub const CONFIG_VERSION: &str = "1";

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

pub fn parse(content: &str, path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), i + 1);
        };
        let (k, v) = (k.trim(), v.trim());
        if k == "config_version" {
            if v != CONFIG_VERSION {
                bail!("{}:{}: unsupported config_version {v}", path.display(), i + 1);
            }
            continue;
        }
        out.push((k.replace('_', "-"), v.to_string()));
    }
    Ok(out)
}

fn leaf(mut cmd: Command, mut m: ArgMatches) -> (Command, ArgMatches) {
    while let Some((name, sub)) = m.remove_subcommand() {
        let Some(next) = cmd.find_subcommand(&name).cloned() else { break };
        cmd = next;
        m = sub;
    }
    (cmd, m)
}

/// Return `argv` with the config file's settings appended.
pub fn apply(mut argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let Some(file) = config_path(&argv) else { return Ok(argv) };
    let path = Path::new(&file);
    let content = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let entries = parse(&content, path)?;

    let root = command();
    let root_matches = root.clone().ignore_errors(true).try_get_matches_from(&argv)?;
    let (leaf_cmd, leaf_matches) = leaf(root.clone(), root_matches.clone());
    for (key, value) in entries {
        let (arg, matches) = match leaf_cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
            Some(a) => (a, &leaf_matches),
            None => match root.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
                Some(a) => (a, &root_matches),
                None => bail!("{}: unknown key {key:?} for this command", path.display()),
            },
        };
        if key == "config" {
            bail!("{}: a config file cannot name another config file", path.display());
        }
        let id = arg.get_id().as_str();
        if matches!(matches.try_contains_id(id), Ok(true)) && matches.value_source(id) == Some(ValueSource::CommandLine) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => {
                let on: bool = value.parse().with_context(|| format!("{}: {key} must be true or false", path.display()))?;
                if on {
                    argv.push(format!("--{key}"));
                }
            }
            _ => {
                argv.push(format!("--{key}"));
                argv.push(value);
            }
        }
    }
    Ok(argv)
}
