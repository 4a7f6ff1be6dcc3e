//! Optional TOML defaults file and flag/file/env/default resolution.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Environment variable consulted for the seed when neither a flag nor the
/// config file sets one.
pub const SEED_ENV: &str = "PGSPLIT_SEED";

/// Keys accepted in a `--config` file. Every key is optional; subcommands
/// ignore keys they do not use.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub k: Option<Vec<f64>>,
    pub scheme: Option<String>,
    pub schemes: Option<Vec<String>>,
    pub gamma: Option<f64>,
    pub h: Option<f64>,
    pub h_list: Option<Vec<f64>>,
    pub steps: Option<usize>,
    pub thin: Option<usize>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<Vec<f64>>,
    pub init_a: Option<Vec<f64>>,
    pub init_b: Option<Vec<f64>>,
    pub moments: Option<Vec<String>>,
    pub precision: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Seed precedence: flag, config file, environment, then `0`.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{SEED_ENV}={v:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg: FileConfig = toml::from_str(
            r#"
            model = "logistic"
            schemes = ["pgp", "obabo"]
            gamma = 2.0
            h_list = [0.01, 0.02]
            seed = 7
            init_a = [1.0, 1.0, 1.0, 1.0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model.as_deref(), Some("logistic"));
        assert_eq!(cfg.h_list, Some(vec![0.01, 0.02]));
        assert_eq!(cfg.seed, Some(7));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("stepz = 3").is_err());
    }

    #[test]
    fn flag_beats_file_beats_default() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
        assert_eq!(resolve_seed(Some(4), Some(5)).unwrap(), 4);
        assert_eq!(resolve_seed(None, Some(5)).unwrap(), 5);
    }
}
