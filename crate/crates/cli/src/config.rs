use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use roomtopo::occupancy::DEFAULT_TILE_SIZE;
use roomtopo::synthgen::{SceneSpec, GRID_PADDING};
use roomtopo::{LabelerConfig, SegmenterParams, SliceBand, SliceConfig};

/// Contents of a `--config` TOML file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub tile_size: Option<f64>,
    pub padding: Option<usize>,
    pub seed: Option<u64>,
    pub beta_ceiling: Option<[f64; 2]>,
    pub beta_floor: Option<[f64; 2]>,
    pub segmenter: Option<SegmenterParams>,
    pub labeler: Option<LabelerConfig>,
    pub synth: Option<SceneSpec>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Command-line values that override the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub tile_size: Option<f64>,
    pub beta_ceiling: Option<[f64; 2]>,
    pub beta_floor: Option<[f64; 2]>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub tile_size: f64,
    pub padding: usize,
    pub slices: SliceConfig,
    pub seed: u64,
    pub segmenter: SegmenterParams,
    pub labeler: LabelerConfig,
    pub synth: SceneSpec,
    pub out: PathBuf,
}

fn band(pair: [f64; 2], name: &str) -> Result<SliceBand> {
    SliceBand::new(pair[0], pair[1]).with_context(|| format!("invalid {name} band"))
}

impl PipelineConfig {
    pub fn resolve(file: FileConfig, flags: &Overrides) -> Result<Self> {
        let tile_size = flags.tile_size.or(file.tile_size).unwrap_or(DEFAULT_TILE_SIZE);
        let seed = flags.seed.or(file.seed).unwrap_or(0);
        let ceiling = flags.beta_ceiling.or(file.beta_ceiling);
        let floor = flags.beta_floor.or(file.beta_floor);
        let slices = SliceConfig {
            ceiling: ceiling.map_or(Ok(SliceBand::CEILING), |p| band(p, "ceiling"))?,
            floor: floor.map_or(Ok(SliceBand::FLOOR), |p| band(p, "floor"))?,
        };
        let labeler = LabelerConfig {
            seed,
            ..file.labeler.unwrap_or_default()
        };
        let synth = SceneSpec {
            tile_size,
            seed,
            ..file.synth.unwrap_or_default()
        };
        let config = Self {
            tile_size,
            padding: file.padding.unwrap_or(GRID_PADDING),
            slices,
            seed,
            segmenter: file.segmenter.unwrap_or_default(),
            labeler,
            synth,
            out: flags.out.clone().unwrap_or_else(|| PathBuf::from(".")),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tile_size > 0.0 && self.tile_size.is_finite()) {
            bail!("tile size must be positive, got {}", self.tile_size);
        }
        self.slices.validate()?;
        self.labeler.validate().context("invalid labeler config")?;
        Ok(())
    }

    /// `explicit` if given, else `name` inside the output directory.
    pub fn input(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out.join(name))
    }

    pub fn output(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }
}
