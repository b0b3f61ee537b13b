//! Depth-space texture perturbation for sim-to-real augmentation.
//!
//! A draw picks a texture, a random distortion of the texture plane and an
//! amplitude, then adds `amplitude * texture` to the depth map. Every draw is
//! a pure function of `(seed, draw_index)`.

mod texture;

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use texture::{TextureMap, BUILTIN_TEXTURES};

use crate::elastomer::DeformParams;
use crate::error::{Error, Result};
use crate::illumination::{render_tactile, IlluminationConfig};
use crate::imagecore::{DepthMap, TactileImage};

/// Default perturbation amplitude, meters.
pub const DEFAULT_AMPLITUDE: f64 = 0.15e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticWarp {
    /// Peak displacement, pixels.
    pub amplitude_px: f64,
    /// Wavelength of the sinusoidal displacement field, pixels.
    pub wavelength_px: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Distortion {
    pub max_translation_px: f64,
    pub max_rotation_deg: f64,
    pub scale_range: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elastic: Option<ElasticWarp>,
}

impl Default for Distortion {
    fn default() -> Self {
        Distortion {
            max_translation_px: 64.0,
            max_rotation_deg: 180.0,
            scale_range: [0.8, 1.25],
            elastic: None,
        }
    }
}

impl Distortion {
    /// No movement of the texture plane at all.
    pub fn none() -> Self {
        Distortion {
            max_translation_px: 0.0,
            max_rotation_deg: 0.0,
            scale_range: [1.0, 1.0],
            elastic: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let nonneg = |name, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be non-negative, got {v}")))
            }
        };
        nonneg("max_translation_px", self.max_translation_px)?;
        nonneg("max_rotation_deg", self.max_rotation_deg)?;
        let [lo, hi] = self.scale_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::param("scale_range", format!("need 0 < min <= max, got [{lo}, {hi}]")));
        }
        if let Some(e) = self.elastic {
            nonneg("elastic.amplitude_px", e.amplitude_px)?;
            if !(e.wavelength_px.is_finite() && e.wavelength_px > 0.0) {
                return Err(Error::param("elastic.wavelength_px", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSpec {
    pub textures: Vec<TextureMap>,
    /// Inclusive amplitude range, meters.
    pub amplitude: [f64; 2],
    pub distortion: Distortion,
    pub seed: u64,
}

impl AugmentSpec {
    /// All builtin textures at the default amplitude.
    pub fn builtin(seed: u64) -> Self {
        AugmentSpec {
            textures: TextureMap::builtin_all(),
            amplitude: [DEFAULT_AMPLITUDE, DEFAULT_AMPLITUDE],
            distortion: Distortion::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.textures.is_empty() {
            return Err(Error::param("textures", "texture list is empty"));
        }
        let [lo, hi] = self.amplitude;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(Error::param("amplitude", format!("need 0 <= min <= max, got [{lo}, {hi}]")));
        }
        self.distortion.validate()
    }

    /// The random choices behind one draw.
    pub fn draw(&self, draw_index: u64) -> Draw {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw_index);
        let d = &self.distortion;
        let texture = rng.random_range(0..self.textures.len());
        let amplitude = rng.random_range(self.amplitude[0]..=self.amplitude[1]);
        let t = d.max_translation_px;
        let translation = [rng.random_range(-t..=t), rng.random_range(-t..=t)];
        let r = d.max_rotation_deg;
        let rotation_deg = rng.random_range(-r..=r);
        let scale = rng.random_range(d.scale_range[0]..=d.scale_range[1]);
        let phases = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
        Draw {
            texture,
            amplitude,
            translation,
            rotation_deg,
            scale,
            phases,
        }
    }
}

/// One sampled perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub texture: usize,
    pub amplitude: f64,
    pub translation: [f64; 2],
    pub rotation_deg: f64,
    pub scale: f64,
    pub phases: [f64; 2],
}

/// Texture sources in an augmentation file: `builtin` for all bundled
/// textures, `builtin:<name>` for one, anything else is an image path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentFile {
    #[serde(default = "default_sources")]
    pub textures: Vec<String>,
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
    #[serde(default)]
    pub distortion: Distortion,
    #[serde(default)]
    pub seed: u64,
}

fn default_sources() -> Vec<String> {
    vec!["builtin".to_string()]
}

fn default_amplitude() -> [f64; 2] {
    [DEFAULT_AMPLITUDE, DEFAULT_AMPLITUDE]
}

impl Default for AugmentFile {
    fn default() -> Self {
        AugmentFile {
            textures: default_sources(),
            amplitude: default_amplitude(),
            distortion: Distortion::default(),
            seed: 0,
        }
    }
}

impl AugmentFile {
    /// Load textures; relative paths resolve against `base`.
    pub fn resolve(&self, base: &Path) -> Result<AugmentSpec> {
        let mut textures = Vec::new();
        for src in &self.textures {
            if src == "builtin" {
                textures.extend(TextureMap::builtin_all());
            } else if let Some(name) = src.strip_prefix("builtin:") {
                textures.push(TextureMap::builtin(name)?);
            } else {
                textures.push(TextureMap::from_png(base.join(src))?);
            }
        }
        let spec = AugmentSpec {
            textures,
            amplitude: self.amplitude,
            distortion: self.distortion,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Apply draw `draw_index` of `spec` to a depth map.
pub fn perturb_depth(depth: &DepthMap, spec: &AugmentSpec, draw_index: u64) -> Result<DepthMap> {
    spec.validate()?;
    let draw = spec.draw(draw_index);
    let tex = &spec.textures[draw.texture];
    let (sin, cos) = draw.rotation_deg.to_radians().sin_cos();
    let elastic = spec.distortion.elastic;
    let w = depth.width();
    let data = depth
        .data()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let (mut x, mut y) = ((i % w) as f64, (i / w) as f64);
            if let Some(e) = elastic {
                let k = TAU / e.wavelength_px;
                let dx = e.amplitude_px * (k * y + draw.phases[0]).sin();
                let dy = e.amplitude_px * (k * x + draw.phases[1]).sin();
                x += dx;
                y += dy;
            }
            let u = (cos * x - sin * y) / draw.scale + draw.translation[0];
            let v = (sin * x + cos * y) / draw.scale + draw.translation[1];
            (d + draw.amplitude * tex.sample(u, v)).max(0.0)
        })
        .collect();
    DepthMap::new(w, depth.height(), data)
}

/// `count` perturbed renders per input depth map, input-major. Draw `k` of
/// input `i` uses draw index `i * count + k`.
pub fn augment_batch(
    depths: &[DepthMap],
    spec: &AugmentSpec,
    count: usize,
    deform: &DeformParams,
    illumination: &IlluminationConfig,
) -> Result<Vec<TactileImage>> {
    spec.validate()?;
    (0..depths.len() * count)
        .into_par_iter()
        .map(|n| {
            let d = perturb_depth(&depths[n / count], spec, n as u64)?;
            render_tactile(&d, deform, illumination)
        })
        .collect()
}
