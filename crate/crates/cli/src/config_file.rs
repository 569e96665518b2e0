//! Flat `key = value` config files, merged into the argument list so that
//! explicit flags take precedence.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

const SUBCOMMANDS: [&str; 4] = ["generate", "walk", "cluster", "compare"];
const SWITCHES: [&str; 1] = ["paper-shape"];
const EXCLUSIVE: [(&str, &str); 2] = [("clusters", "merge-distance"), ("input", "paper-shape")];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config file {path}, line {line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("--config needs a file path")]
    MissingPath,
}

pub fn parse(text: &str, path: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| ConfigError::Syntax {
            path: path.to_string(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
        {
            return Err(syntax(format!("invalid key `{key}`")));
        }
        if key == "config" {
            return Err(syntax("config files cannot include other config files".into()));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn config_path(args: &[OsString]) -> Result<Option<OsString>, ConfigError> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned().map(Some).ok_or(ConfigError::MissingPath);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(p.into()));
        }
    }
    Ok(None)
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// Inserts the config file's settings right after the subcommand name,
/// skipping any key the command line already sets (or sets a rival of).
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let Some(at) = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    let display = Path::new(&path).display().to_string();
    let text = fs::read_to_string(&path).map_err(|source| ConfigError::Read {
        path: display.clone(),
        source,
    })?;
    let explicit = &args[at + 1..];
    let mut inserted: Vec<OsString> = Vec::new();
    for (key, value) in parse(&text, &display)? {
        let rivals = EXCLUSIVE.iter().filter_map(|&(a, b)| {
            if a == key {
                Some(b)
            } else if b == key {
                Some(a)
            } else {
                None
            }
        });
        if given(explicit, &key) || rivals.into_iter().any(|r| given(explicit, r)) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" | "yes" | "1" => inserted.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => {
                    return Err(ConfigError::Syntax {
                        path: display,
                        line: 0,
                        message: format!("`{key}` expects true or false, got `{other}`"),
                    })
                }
            }
        } else {
            inserted.push(format!("--{key}").into());
            inserted.push(value.into());
        }
    }
    let mut out = args[..=at].to_vec();
    out.extend(inserted);
    out.extend_from_slice(explicit);
    Ok(out)
}
