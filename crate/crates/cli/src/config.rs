//! Global settings: command-line flags, then the `key=value` file named by
//! `NCRW_CONFIG`, then built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncrw::Tolerances;

use crate::CliError;

pub const CONFIG_ENV: &str = "NCRW_CONFIG";

const KEYS: [&str; 6] = ["tol-tail", "tol-quad", "threads", "seed", "output", "out"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("expected csv or json, got {s:?}")),
        }
    }
}

/// Values given on the command line; `None` falls through to the file.
#[derive(Debug, Clone, Default)]
pub struct GlobalFlags {
    pub tol_tail: Option<f64>,
    pub tol_quad: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<OutputFormat>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub threads: usize,
    pub seed: u64,
    /// `None` means the subcommand's natural format.
    pub output: Option<OutputFormat>,
    pub out: Option<PathBuf>,
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str, origin: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("{}:{}: expected key=value", origin.display(), i + 1)));
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Usage(format!("{}:{}: unknown key {key:?}", origin.display(), i + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| CliError::Usage(format!("{CONFIG_ENV}: invalid value for {key}: {e}")))
        })
        .transpose()
}

fn check_tolerance(flag: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v <= 1e-4 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{flag} must lie in (0, 1e-4], got {v}")))
    }
}

impl RunConfig {
    /// Layers `flags` over the config file (if any) over the defaults.
    pub fn resolve(flags: &GlobalFlags, config_path: Option<&Path>) -> Result<Self, CliError> {
        let file = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{CONFIG_ENV}={}: {e}", path.display())))?;
                parse_config_file(&text, path)?
            }
            None => BTreeMap::new(),
        };
        let defaults = Tolerances::default();
        let tail = match flags.tol_tail {
            Some(v) => Some(v),
            None => from_file(&file, "tol-tail")?,
        };
        let quad = match flags.tol_quad {
            Some(v) => Some(v),
            None => from_file(&file, "tol-quad")?,
        };
        let threads = match flags.threads {
            Some(v) => v,
            None => from_file(&file, "threads")?.unwrap_or_else(default_threads),
        };
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let output = match flags.output {
            Some(v) => Some(v),
            None => from_file(&file, "output")?,
        };
        let out = match &flags.out {
            Some(p) => Some(p.clone()),
            None => file.get("out").map(PathBuf::from),
        };
        Ok(Self {
            tolerances: Tolerances {
                tail: check_tolerance("tol-tail", tail.unwrap_or(defaults.tail))?,
                quad: check_tolerance("tol-quad", quad.unwrap_or(defaults.quad))?,
            },
            threads,
            seed: match flags.seed {
                Some(v) => v,
                None => from_file(&file, "seed")?.unwrap_or(0),
            },
            output,
            out,
        })
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> (PathBuf, impl Drop) {
        struct Cleanup(PathBuf);
        impl Drop for Cleanup {
            fn drop(&mut self) {
                let _ = std::fs::remove_file(&self.0);
            }
        }
        let path = std::env::temp_dir().join(format!("ncrw-config-{}-{}", std::process::id(), text.len()));
        std::fs::write(&path, text).unwrap();
        (path.clone(), Cleanup(path))
    }

    #[test]
    fn precedence() {
        let (path, _guard) = write("# settings\nseed = 9\ntol-quad=1e-10\noutput=json\n");
        let none = RunConfig::resolve(&GlobalFlags::default(), None).unwrap();
        assert_eq!(none.seed, 0);
        assert_eq!(none.tolerances, Tolerances::default());
        let file = RunConfig::resolve(&GlobalFlags::default(), Some(&path)).unwrap();
        assert_eq!(file.seed, 9);
        assert_eq!(file.tolerances.quad, 1e-10);
        assert_eq!(file.output, Some(OutputFormat::Json));
        let flags = GlobalFlags {
            seed: Some(3),
            output: Some(OutputFormat::Csv),
            ..Default::default()
        };
        let both = RunConfig::resolve(&flags, Some(&path)).unwrap();
        assert_eq!(both.seed, 3);
        assert_eq!(both.tolerances.quad, 1e-10);
        assert_eq!(both.output, Some(OutputFormat::Csv));
    }

    #[test]
    fn rejects_bad_values() {
        let flags = GlobalFlags {
            tol_tail: Some(0.1),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&flags, None), Err(CliError::Usage(_))));
        let flags = GlobalFlags {
            threads: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&flags, None).is_err());
        assert!(parse_config_file("colour=red\n", Path::new("x")).is_err());
        assert!(parse_config_file("seed\n", Path::new("x")).is_err());
    }
}
