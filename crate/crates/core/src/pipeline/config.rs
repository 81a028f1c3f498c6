use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{CategoryMap, PasteConfig, StyleRanges};
use crate::court::CropParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Area fraction of the crop given to the outer band.
    pub band_frac: f64,
    pub categories: CategoryMap,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            band_frac: 0.2,
            categories: CategoryMap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub duplication_factor: u32,
    pub seed: u64,
    /// Label for this dataset in statistics (e.g. `train`, `val`).
    pub split: String,
    /// Worker threads; 0 uses one per core. Not part of the run snapshot:
    /// results do not depend on it.
    #[serde(skip_serializing)]
    pub workers: usize,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            duplication_factor: 10,
            seed: 0,
            split: "train".into(),
            workers: 0,
            output_dir: None,
        }
    }
}

/// Everything a run needs, read from a TOML file with the sections
/// `[crop]`, `[regions]`, `[style]`, `[paste]` and `[run]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub crop: CropParams,
    pub regions: RegionConfig,
    pub style: StyleRanges,
    pub paste: PasteConfig,
    pub run: RunConfig,
}

impl AugmentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: AugmentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.crop.validate()?;
        self.style.validate()?;
        self.paste.validate()?;
        if self.run.duplication_factor < 1 {
            return Err(Error::Config(
                "duplication_factor must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.regions.band_frac) {
            return Err(Error::Config(format!(
                "band_frac must be in [0, 1], got {}",
                self.regions.band_frac
            )));
        }
        Ok(())
    }
}
