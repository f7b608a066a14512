use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use crate::args::Format;

/// Values read from a flat `key = value` config file. Every field is
/// optional; command-line flags take precedence over anything set here.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    pub ell: Option<u32>,
    pub epsilon: Option<f64>,
    pub phi_d: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub kicks: Option<u32>,
    pub ensemble_n: Option<usize>,
    pub seed: Option<u64>,
    pub engine: Option<String>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value", i + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                bail!("line {}: duplicate key {key}", i + 1);
            }
            seen.push(key);
            cfg.set(key, value)
                .with_context(|| format!("line {}: bad value for {key}", i + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "ell" => self.ell = Some(value.parse()?),
            "epsilon" => self.epsilon = Some(value.parse()?),
            "phi_d" => self.phi_d = Some(value.parse()?),
            "gamma" => self.gamma = Some(value.parse()?),
            "beta" => self.beta = Some(value.parse()?),
            "kicks" => self.kicks = Some(value.parse()?),
            "ensemble_n" => self.ensemble_n = Some(value.parse()?),
            "seed" => self.seed = Some(value.parse()?),
            "engine" => self.engine = Some(value.to_string()),
            "output" => self.output = Some(PathBuf::from(value)),
            "format" => {
                self.format = Some(match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => bail!("unknown format {other}"),
                })
            }
            other => bail!("unknown key {other}"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let cfg = Config::parse("# run\nphi_d = 0.9\nepsilon=-0.36\n\nformat = json\n").unwrap();
        assert_eq!(cfg.phi_d, Some(0.9));
        assert_eq!(cfg.epsilon, Some(-0.36));
        assert_eq!(cfg.format, Some(Format::Json));
        assert_eq!(cfg.kicks, None);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let err = Config::parse("phi = 1").unwrap_err();
        assert!(format!("{err:#}").contains("unknown key phi"));
        assert!(Config::parse("ell = 1\nell = 2").is_err());
        assert!(Config::parse("kicks = many").is_err());
        assert!(Config::parse("just words").is_err());
    }
}
