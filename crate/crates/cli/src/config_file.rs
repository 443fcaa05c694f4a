//! `--config FILE` support: `key=value` lines become `--key value` flags
//! placed before the user's own flags, so the command line wins.

use std::ffi::OsString;
use std::path::Path;

fn config_path(argv: &[OsString]) -> Option<Result<OsString, String>> {
    let mut it = argv.iter().skip(2);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return Some(it.next().cloned().ok_or_else(|| "--config needs a file".to_string()));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(Ok(p.into()));
        }
    }
    None
}

/// Parses the file into flags.
pub fn flags_from_text(text: &str, origin: &Path) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value, got '{line}'", origin.display(), i + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("{}:{}: invalid key '{key}'", origin.display(), i + 1));
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

/// Splices the config file's flags in right after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let path = match config_path(&argv) {
        None => return Ok(argv),
        Some(p) => p?,
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let flags = flags_from_text(&text, path)?;
    let mut out: Vec<OsString> = argv[..2.min(argv.len())].to_vec();
    out.extend(flags);
    out.extend(argv.into_iter().skip(2));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_flags_come_first() {
        let flags = flags_from_text("# c\ntrials = 50\nfast=true\nquiet=false\nmin_sep=1\n", Path::new("x")).unwrap();
        let flags: Vec<String> = flags.into_iter().map(|f| f.into_string().unwrap()).collect();
        assert_eq!(flags, ["--trials", "50", "--fast", "--min-sep", "1"]);
        assert!(flags_from_text("oops\n", Path::new("x")).is_err());
    }
}
