//! Flat `key = value` run configuration.
//!
//! ```text
//! # exponents
//! p = 3
//! q = 1
//! lambda = 10
//! initial = sine            # or file:profile.csv
//! ```

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::params::{InitialData, SimParams};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("initial data file {path}: {message}")]
    Initial { path: String, message: String },
}

/// Where the initial profile comes from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialSpec {
    #[default]
    Sine,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub params: SimParams<T>,
    pub initial: InitialSpec,
}

impl<T: Scalar> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            params: SimParams::default(),
            initial: InitialSpec::Sine,
        }
    }
}

pub const PARAM_KEYS: [&str; 9] = [
    "p",
    "q",
    "tau",
    "h",
    "lambda",
    "blow_threshold",
    "max_steps",
    "picard_tol",
    "picard_max_iters",
];

fn parse_real<T: Scalar>(key: &str, value: &str) -> Result<T, ConfigError> {
    let bad = || ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    };
    let v: f64 = value.parse().map_err(|_| bad())?;
    T::from_f64(v)
        .filter(|x| x.is_finite() == v.is_finite())
        .ok_or_else(bad)
}

fn parse_count(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

/// Sets one field of `params` from its textual value.
pub fn set_param<T: Scalar>(
    params: &mut SimParams<T>,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    match key {
        "p" => params.p = parse_real(key, value)?,
        "q" => params.q = parse_real(key, value)?,
        "tau" => params.tau = parse_real(key, value)?,
        "h" => params.h = parse_real(key, value)?,
        "lambda" => params.lambda = parse_real(key, value)?,
        "blow_threshold" => params.blow_threshold = parse_real(key, value)?,
        "picard_tol" => params.picard_tol = parse_real(key, value)?,
        "max_steps" => params.max_steps = parse_count(key, value)?,
        "picard_max_iters" => params.picard_max_iters = parse_count(key, value)?,
        _ => return Err(ConfigError::UnknownKey(key.into())),
    }
    Ok(())
}

fn split_pair(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    let k = k.trim();
    let v = v.trim().trim_matches('"');
    (!k.is_empty() && !v.is_empty()).then_some((k, v))
}

impl<T: Scalar> RunConfig<T> {
    /// Parses config text. Relative `file:` paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = split_pair(line).ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.into(),
            })?;
            if key == "initial" {
                cfg.initial = match value {
                    "sine" => InitialSpec::Sine,
                    v => match v.strip_prefix("file:") {
                        Some(path) if !path.is_empty() => InitialSpec::File(base_dir.join(path)),
                        _ => {
                            return Err(ConfigError::BadValue {
                                key: key.into(),
                                value: value.into(),
                            })
                        }
                    },
                };
            } else {
                set_param(&mut cfg.params, key, value)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies a `key=value` override; only parameter keys are accepted.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = split_pair(pair).ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: pair.into(),
        })?;
        set_param(&mut self.params, key, value)
    }

    pub fn initial_data(&self) -> Result<InitialData<T>, ConfigError> {
        match &self.initial {
            InitialSpec::Sine => Ok(InitialData::sine(self.params.lambda)),
            InitialSpec::File(path) => read_initial_csv(path),
        }
    }
}

/// Reads a two-column `x,u0` table. A non-numeric first row is taken as a header.
pub fn read_initial_csv<T: Scalar>(path: &Path) -> Result<InitialData<T>, ConfigError> {
    let err = |message: String| ConfigError::Initial {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let mut samples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if rec.len() != 2 {
            return Err(err(format!(
                "row {} has {} columns, expected 2",
                i + 1,
                rec.len()
            )));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(u)) => samples.push((T::lit(x), T::lit(u))),
            _ if i == 0 => continue,
            _ => return Err(err(format!("row {} is not numeric", i + 1))),
        }
    }
    Ok(InitialData::Custom { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_initial() {
        let cfg: RunConfig<f64> = RunConfig::parse(
            "# test\np = 2\nq=1 # inline\n\nh = 0.5\nmax_steps = 10\ninitial = file:u0.csv\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(cfg.params.p, 2.0);
        assert_eq!(cfg.params.h, 0.5);
        assert_eq!(cfg.params.max_steps, 10);
        assert_eq!(
            cfg.initial,
            InitialSpec::File(PathBuf::from("/data/u0.csv"))
        );
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new(".");
        assert!(matches!(
            RunConfig::<f64>::parse("p 3", base),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::<f64>::parse("r = 3", base),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            RunConfig::<f64>::parse("p = three", base),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            RunConfig::<f64>::parse("max_steps = -1", base),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            RunConfig::<f64>::parse("initial = cosine", base),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn overrides_touch_parameters_only() {
        let mut cfg = RunConfig::<f64>::default();
        cfg.apply_override("lambda=100").unwrap();
        assert_eq!(cfg.params.lambda, 100.0);
        assert!(cfg.apply_override("initial=sine").is_err());
        assert!(cfg.apply_override("lambda").is_err());
    }

    #[test]
    fn reads_initial_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u0.csv");
        std::fs::write(&path, "x,u0\n-1,0\n0,5\n1,0\n").unwrap();
        match read_initial_csv::<f64>(&path).unwrap() {
            InitialData::Custom { samples } => {
                assert_eq!(samples, vec![(-1.0, 0.0), (0.0, 5.0), (1.0, 0.0)])
            }
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "-1,0\n0,oops\n1,0\n").unwrap();
        assert!(read_initial_csv::<f64>(&path).is_err());
        assert!(read_initial_csv::<f64>(&dir.path().join("missing.csv")).is_err());
    }
}
