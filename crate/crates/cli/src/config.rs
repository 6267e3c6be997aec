//! `key = value` configuration files. Every key names a command-line flag
//! (underscores may stand for dashes); a key is applied only when the
//! command accepts that flag and the command line does not already set it.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};

/// Config keys accepted as synonyms of flags.
const ALIASES: [(&str, &str); 3] = [("master-seed", "seed"), ("corpus-size", "count"), ("fold-count", "folds")];

/// One `key = value` setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Flag name the key resolves to.
    pub key: String,
    /// Key as written in the file.
    pub written: String,
    pub value: String,
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got `{line}`", i + 1);
        };
        let mut key = k.trim().replace('_', "-");
        if let Some((_, to)) = ALIASES.iter().find(|(from, _)| *from == key) {
            key = to.to_string();
        }
        if key.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        out.push(Entry {
            key,
            written: k.trim().to_string(),
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

/// Value of `--config` in `args`, if any.
fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn flag_given(args: &[String], long: &str) -> bool {
    let eq = format!("--{long}=");
    args.iter().any(|a| a.strip_prefix("--") == Some(long) || a.starts_with(&eq))
}

/// Appends the config file's settings that apply to the chosen subcommand
/// and are not already on the command line.
pub fn inject(args: Vec<String>, mut cmd: Command) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path}"))?;
    let entries = parse(&text).with_context(|| format!("config {path}"))?;
    cmd.build();
    let sub_name = args
        .iter()
        .skip(1)
        .find(|a| cmd.find_subcommand(a.as_str()).is_some())
        .cloned();
    let known_anywhere = |key: &str| {
        cmd.get_arguments().any(|a| a.get_long() == Some(key))
            || cmd
                .get_subcommands()
                .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key)))
    };
    let mut out = args.clone();
    for Entry { key, written, value } in entries {
        if !known_anywhere(&key) {
            bail!("config {path}: unknown key `{written}`");
        }
        let arg = sub_name
            .as_deref()
            .and_then(|s| cmd.find_subcommand(s))
            .and_then(|s| s.get_arguments().find(|a| a.get_long() == Some(key.as_str())))
            .or_else(|| cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())));
        let Some(arg) = arg else { continue };
        if key == "config" || flag_given(&args, &key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "on" => out.push(format!("--{key}")),
                "false" | "0" | "no" | "off" => {}
                _ => bail!("config {path}: `{key}` expects true or false, got `{value}`"),
            }
        } else {
            out.push(format!("--{key}={value}"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_aliases_and_underscores() {
        let e = parse("# pipeline\nmaster_seed = 7\n\ngrid_profile=desk\n").unwrap();
        let pairs: Vec<(&str, &str)> = e.iter().map(|x| (x.key.as_str(), x.value.as_str())).collect();
        assert_eq!(pairs, vec![("seed", "7"), ("grid-profile", "desk")]);
        assert_eq!(e[0].written, "master_seed");
        assert!(parse("novalue\n").is_err());
    }
}
