//! Pipeline configuration file: deformation, lights, and optional scene,
//! augmentation and comparison sections.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentFile;
use crate::elastomer::DeformParams;
use crate::error::{Error, Result};
use crate::evaluate::AlignMode;
use crate::illumination::{
    Ambient, IlluminationConfig, LightSource, Vec3, BASELINE_LEDS, DEFAULT_AMBIENT,
    DEFAULT_PIXEL_TO_METER,
};
use crate::imagecore::read_rgb;
use crate::scenegen::SceneSpec;

pub const CONFIG_VERSION: u32 = 1;

/// The shipped baseline configuration.
pub const BASELINE_JSON: &str = include_str!("baseline.json");

/// How unknown keys in a JSON document are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownKeys {
    #[default]
    Reject,
    Warn,
}

/// Parse `text`, collecting the paths of keys the schema does not know.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str, unknown: UnknownKeys) -> Result<(T, Vec<String>)> {
    let mut ignored = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_ignored::deserialize(&mut de, |path| ignored.push(path.to_string()))
        .and_then(|v| de.end().map(|_| v))
        .map_err(|e| Error::Config(format!("{what}: {e}")))?;
    if unknown == UnknownKeys::Reject && !ignored.is_empty() {
        return Err(Error::Config(format!("{what}: unknown key(s) {}", ignored.join(", "))));
    }
    Ok((value, ignored))
}

/// Read and parse a JSON file.
pub fn load_json<T: DeserializeOwned>(path: &Path, unknown: UnknownKeys) -> Result<(T, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, &path.display().to_string(), unknown)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightSpec {
    pub name: String,
    pub direction: Vec3,
    pub color: Vec3,
    pub kd: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientSpec {
    Constant(Vec3),
    /// Background capture used as a per-pixel ambient term.
    Image(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminationSpec {
    pub lights: Vec<LightSpec>,
    pub ambient: AmbientSpec,
    pub ka: f64,
    pub alpha: f64,
    pub pixel_to_meter: f64,
}

impl Default for IlluminationSpec {
    fn default() -> Self {
        IlluminationSpec {
            lights: BASELINE_LEDS
                .iter()
                .map(|&(name, direction, color, kd, ks)| LightSpec {
                    name: name.to_string(),
                    direction,
                    color,
                    kd,
                    ks,
                })
                .collect(),
            ambient: AmbientSpec::Constant(DEFAULT_AMBIENT),
            ka: 0.8,
            alpha: 5.0,
            pixel_to_meter: DEFAULT_PIXEL_TO_METER,
        }
    }
}

impl IlluminationSpec {
    /// Build the renderer config; a relative ambient image path resolves against `base`.
    pub fn resolve(&self, base: &Path) -> Result<IlluminationConfig> {
        let lights = self
            .lights
            .iter()
            .map(|l| LightSource::new(l.direction, l.color, l.kd, l.ks))
            .collect::<Result<Vec<_>>>()?;
        let ambient = match &self.ambient {
            AmbientSpec::Constant(c) => Ambient::Constant(*c),
            AmbientSpec::Image(p) => Ambient::Image(read_rgb(base.join(p))?),
        };
        let cfg = IlluminationConfig {
            lights,
            ambient,
            ka: self.ka,
            alpha: self.alpha,
            pixel_to_meter: self.pixel_to_meter,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    #[serde(default = "default_alignment")]
    pub alignment: AlignMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
}

fn default_alignment() -> AlignMode {
    AlignMode::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub version: u32,
    pub deform: DeformParams,
    pub illumination: IlluminationSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub augment: Option<AugmentFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            deform: DeformParams::default(),
            illumination: IlluminationSpec::default(),
            scene: None,
            augment: None,
            compare: None,
        }
    }
}

impl PipelineConfig {
    pub fn baseline() -> Self {
        Self::from_json(BASELINE_JSON, UnknownKeys::Reject)
            .expect("embedded baseline config is valid")
            .0
    }

    /// Parse and validate; returns the config and any ignored key paths.
    pub fn from_json(text: &str, unknown: UnknownKeys) -> Result<(Self, Vec<String>)> {
        let (cfg, ignored): (Self, _) = parse_json(text, "config", unknown)?;
        cfg.validate()?;
        Ok((cfg, ignored))
    }

    pub fn load(path: &Path, unknown: UnknownKeys) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, unknown)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        self.deform.validate()?;
        if let Some(scene) = &self.scene {
            scene.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_baseline_is_the_default() {
        assert_eq!(PipelineConfig::baseline(), PipelineConfig::default());
        let illum = PipelineConfig::baseline().illumination.resolve(Path::new(".")).unwrap();
        assert_eq!(illum, IlluminationConfig::default());
    }

    #[test]
    fn dump_reloads_to_an_equal_config() {
        let cfg = PipelineConfig::baseline();
        let (again, ignored) = PipelineConfig::from_json(&cfg.to_json(), UnknownKeys::Reject).unwrap();
        assert_eq!(again, cfg);
        assert!(ignored.is_empty());

        let mut full = cfg.clone();
        full.scene = Some(SceneSpec::new(Default::default(), vec![], 0.001));
        full.augment = Some(AugmentFile::default());
        full.compare = Some(CompareSpec { alignment: AlignMode::PerObject, annotations: Some("notes.json".into()) });
        assert_eq!(PipelineConfig::from_json(&full.to_json(), UnknownKeys::Reject).unwrap().0, full);
    }

    #[test]
    fn unknown_keys_by_mode() {
        let text = r#"{"deform": {"d_max": 0.03, "kernel_size": 21, "sigma_narrow": 7, "sigma_wide": 21,
            "steps": 6, "variant": "single_gaussian", "extra": 1}, "colour": "red"}"#;
        let err = PipelineConfig::from_json(text, UnknownKeys::Reject).unwrap_err();
        assert!(err.to_string().contains("deform.extra"), "{err}");
        let (cfg, ignored) = PipelineConfig::from_json(text, UnknownKeys::Warn).unwrap();
        assert_eq!(ignored, vec!["deform.extra".to_string(), "colour".to_string()]);
        assert_eq!(cfg.deform.variant, crate::elastomer::Variant::SingleGaussian);
    }

    #[test]
    fn partial_files_fill_defaults_and_bad_values_fail() {
        let (cfg, _) = PipelineConfig::from_json(r#"{"version": 1}"#, UnknownKeys::Reject).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert!(PipelineConfig::from_json(r#"{"version": 2}"#, UnknownKeys::Reject).is_err());
        let bad = r#"{"deform": {"d_max": -1, "kernel_size": 21, "sigma_narrow": 7, "sigma_wide": 21, "steps": 6, "variant": "dog"}}"#;
        assert!(PipelineConfig::from_json(bad, UnknownKeys::Reject).is_err());
        assert!(PipelineConfig::from_json("{", UnknownKeys::Reject).is_err());
    }

    #[test]
    fn ambient_image_is_loaded_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        let img = crate::imagecore::TactileImage::filled(4, 3, [10, 20, 30]).unwrap();
        crate::imagecore::write_rgb(&img, dir.path().join("bg.png")).unwrap();
        let mut spec = IlluminationSpec {
            ambient: AmbientSpec::Image("bg.png".into()),
            ..IlluminationSpec::default()
        };
        match spec.resolve(dir.path()).unwrap().ambient {
            Ambient::Image(loaded) => assert_eq!(loaded, img),
            other => panic!("{other:?}"),
        }
        spec.ambient = AmbientSpec::Image("missing.png".into());
        assert!(spec.resolve(dir.path()).unwrap_err().is_input_error());
    }
}
