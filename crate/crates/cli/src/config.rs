use std::path::{Path, PathBuf};

use longtail::eval::DEFAULT_FOLDS;
use longtail::recommenders::{ModelConfigs, ModelKind};
use longtail::synth::SynthConfig;
use longtail::Error;
use serde::Deserialize;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    ConfigFile {
        path: PathBuf,
        source: toml::de::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::UnknownCity(_)) => 3,
            CliError::Core(Error::IllConditioned { .. } | Error::Training(_)) => 4,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

/// Optional TOML run configuration; command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub models: Option<Vec<String>>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub als: Option<longtail::recommenders::AlsConfig>,
    pub bpr: Option<longtail::recommenders::BprConfig>,
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|source| CliError::ConfigFile {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub models: Vec<ModelKind>,
    pub configs: ModelConfigs,
    pub folds: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(
        file: FileConfig,
        models: &[String],
        folds: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Self, CliError> {
        let names = if models.is_empty() {
            file.models.unwrap_or_default()
        } else {
            models.to_vec()
        };
        let mut kinds = Vec::new();
        for name in names.iter().filter(|n| !n.trim().is_empty()) {
            let kind: ModelKind = name.parse()?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            kinds = ModelKind::ALL.to_vec();
        }
        let folds = folds.or(file.folds).unwrap_or(DEFAULT_FOLDS);
        if folds < 2 {
            return Err(CliError::Config(format!(
                "--folds must be at least 2, got {folds}"
            )));
        }
        let configs = ModelConfigs {
            als: file.als.unwrap_or_default(),
            bpr: file.bpr.unwrap_or_default(),
        };
        configs.validate()?;
        Ok(RunConfig {
            models: kinds,
            configs,
            folds,
            seed: seed.or(file.seed).unwrap_or(0),
        })
    }
}

pub fn synth_config(
    file: Option<&Path>,
    overrides: impl FnOnce(&mut SynthConfig),
) -> Result<SynthConfig, CliError> {
    let mut config = match file {
        Some(path) => read_toml(path)?,
        None => SynthConfig::default(),
    };
    overrides(&mut config);
    config.validate()?;
    Ok(config)
}
