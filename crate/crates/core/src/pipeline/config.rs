//! Pipeline configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetSettings;
use crate::geodata::LandUse;
use crate::layout::{default_land_use_table, validate_table, LandUseParams, LandUseTable};
use crate::render::{RenderSettings, DEFAULT_AMBIENT, DEFAULT_FOCAL_PX};
use crate::scenegen::{default_feature_table, FeatureProbabilities, FeatureTable};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputsConfig {
    /// Street-network document; may also carry building attribute records.
    pub network: Option<PathBuf>,
    /// ASCII elevation raster.
    pub terrain: Option<PathBuf>,
    /// Extra document with building attribute records.
    pub attributes: Option<PathBuf>,
    /// Material manifest; the built-in library when absent.
    pub materials: Option<PathBuf>,
}

/// Any subset of land-use parameters; missing fields keep their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandUseOverride {
    pub min_lot_area: Option<f64>,
    pub max_lot_area: Option<f64>,
    pub gar: Option<f64>,
    pub level_height: Option<f64>,
    pub min_levels: Option<u32>,
    pub max_levels: Option<u32>,
    pub tree_density: Option<f64>,
    pub setback: Option<f64>,
}

impl LandUseOverride {
    fn apply(&self, p: &mut LandUseParams) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { p.$f = v; })*};
        }
        set!(min_lot_area, max_lot_area, gar, level_height, min_levels, max_levels, tree_density, setback);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureOverride {
    pub gable_roof: Option<f64>,
    pub hip_roof: Option<f64>,
    pub chimney: Option<f64>,
    pub stairs: Option<f64>,
    pub curtain_wall: Option<f64>,
}

impl FeatureOverride {
    fn apply(&self, p: &mut FeatureProbabilities) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { p.$f = v; })*};
        }
        set!(gable_roof, hip_roof, chimney, stairs, curtain_wall);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub gsd: f64,
    pub focal_px: f64,
    pub ambient: f64,
    pub irradiance: [f64; 3],
    /// Site latitude; taken from the network's geographic origin when unset,
    /// else 40 degrees.
    pub latitude: Option<f64>,
    pub n_views: u64,
    /// Hue shift interval in degrees, one draw per material instance.
    pub hue_range: [f64; 2],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 1024,
            gsd: 0.3,
            focal_px: DEFAULT_FOCAL_PX,
            ambient: DEFAULT_AMBIENT,
            irradiance: [1.0; 3],
            latitude: None,
            n_views: 10,
            hue_range: [-180.0, 180.0],
        }
    }
}

pub const DEFAULT_LATITUDE: f64 = 40.0;

impl RenderConfig {
    pub fn settings(&self, fallback_latitude: Option<f64>) -> RenderSettings {
        RenderSettings {
            width: self.width,
            height: self.height,
            gsd: self.gsd,
            focal_px: self.focal_px,
            ambient: self.ambient,
            irradiance: self.irradiance,
            latitude: self.latitude.or(fallback_latitude).unwrap_or(DEFAULT_LATITUDE),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Prefix of view and patch file names.
    pub scene_name: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), scene_name: "scene".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Predicted label mask, or a directory of masks.
    pub pred: Option<PathBuf>,
    /// Reference mask or directory; the rendered views when unset.
    pub gt: Option<PathBuf>,
    pub positive_class: u8,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self { pred: None, gt: None, positive_class: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub inputs: InputsConfig,
    pub land_use: BTreeMap<LandUse, LandUseOverride>,
    pub features: BTreeMap<LandUse, FeatureOverride>,
    pub render: RenderConfig,
    pub dataset: DatasetSettings,
    pub output: OutputConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            inputs: InputsConfig::default(),
            land_use: BTreeMap::new(),
            features: BTreeMap::new(),
            render: RenderConfig::default(),
            dataset: DatasetSettings::default(),
            output: OutputConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, Vec<String>> {
        toml::from_str(text).map_err(|e| vec![e.to_string().trim_end().to_string()])
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        let mut cfg = Self::parse(&text).map_err(|errs| errs.into_iter().map(|e| format!("{}: {e}", path.display())).collect::<Vec<_>>())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.inputs.network);
        fix(&mut self.inputs.terrain);
        fix(&mut self.inputs.attributes);
        fix(&mut self.inputs.materials);
        fix(&mut self.evaluate.pred);
        fix(&mut self.evaluate.gt);
        if self.output.dir.is_relative() {
            self.output.dir = base.join(&self.output.dir);
        }
    }

    pub fn land_use_table(&self) -> LandUseTable {
        let mut t = default_land_use_table();
        for (lu, o) in &self.land_use {
            if let Some(p) = t.get_mut(lu) {
                o.apply(p);
            }
        }
        t
    }

    pub fn feature_table(&self) -> FeatureTable {
        let mut t = default_feature_table();
        for (lu, o) in &self.features {
            if let Some(p) = t.get_mut(lu) {
                o.apply(p);
            }
        }
        t
    }

    /// Every violation at once. Input files are checked only for existence.
    pub fn validate(&self) -> Vec<String> {
        let mut errs: Vec<String> = validate_table(&self.land_use_table()).iter().map(ToString::to_string).collect();
        for (lu, p) in &self.feature_table() {
            errs.extend(p.validate().into_iter().map(|e| format!("features.{lu}: {e}")));
        }
        errs.extend(self.render.settings(None).validate().into_iter().map(|e| format!("render: {e}")));
        if self.render.n_views < 1 {
            errs.push("render: n_views must be at least 1".into());
        }
        let [lo, hi] = self.render.hue_range;
        if !(-180.0 <= lo && lo <= hi && hi <= 180.0) {
            errs.push(format!("render: hue_range [{lo}, {hi}] must be an interval within [-180, 180]"));
        }
        errs.extend(self.dataset.validate().into_iter().map(|e| format!("dataset: {e}")));
        if self.output.scene_name.is_empty() || self.output.scene_name.contains(['/', '\\']) {
            errs.push(format!("output: scene_name {:?} must be a plain file name", self.output.scene_name));
        }
        for (name, p) in [
            ("inputs.network", &self.inputs.network),
            ("inputs.terrain", &self.inputs.terrain),
            ("inputs.attributes", &self.inputs.attributes),
            ("inputs.materials", &self.inputs.materials),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    errs.push(format!("{name}: {} does not exist", p.display()));
                }
            }
        }
        errs
    }
}
