//! Phong shading of the elastomer under the sensor's internal LEDs.
//!
//! Normals and light directions live in the sensor frame: +Z points toward
//! the camera, +X toward the left edge of the rendered image and +Y toward
//! its top edge (the image frame rotated by 180°). With this frame the
//! baseline LED directions light the top, right, bottom and left flanks of a
//! contact in white, blue, red and green respectively.

use rayon::prelude::*;

use crate::elastomer::{elastomer_heightmap, DeformParams};
use crate::error::{Error, Result};
use crate::imagecore::{DepthMap, HeightMap, TactileImage};

pub type Vec3 = [f64; 3];

/// Direction toward the camera.
pub const VIEW: Vec3 = [0.0, 0.0, 1.0];

#[inline]
fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(v: Vec3) -> Option<Vec3> {
    let n = dot(v, v).sqrt();
    (n.is_finite() && n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

/// One LED. The same color is used for its diffuse and specular terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LightSource {
    direction: Vec3,
    color: Vec3,
    kd: f64,
    ks: f64,
}

impl LightSource {
    /// `direction` is normalized here; it need not be unit length.
    pub fn new(direction: Vec3, color: Vec3, kd: f64, ks: f64) -> Result<Self> {
        let direction = normalize(direction)
            .ok_or_else(|| Error::param("direction", "light direction must be non-zero"))?;
        if color.iter().any(|c| !(0.0..=255.0).contains(c)) {
            return Err(Error::param("color", format!("{color:?} outside [0, 255]")));
        }
        for (name, k) in [("kd", kd), ("ks", ks)] {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::param(name, format!("{k} outside [0, 1]")));
            }
        }
        Ok(Self {
            direction,
            color,
            kd,
            ks,
        })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }
    pub fn color(&self) -> Vec3 {
        self.color
    }
    pub fn kd(&self) -> f64 {
        self.kd
    }
    pub fn ks(&self) -> f64 {
        self.ks
    }
}

/// Baseline LEDs as `(name, direction, color, kd, ks)`, unnormalized directions.
pub const BASELINE_LEDS: [(&str, Vec3, Vec3, f64, f64); 4] = [
    ("white", [0.0, 1.0, 0.25], [255.0, 255.0, 255.0], 0.6, 0.5),
    ("blue", [-1.0, 0.0, 0.25], [115.0, 130.0, 255.0], 0.5, 0.3),
    ("red", [0.0, -1.0, 0.25], [225.0, 82.0, 108.0], 0.6, 0.4),
    ("green", [1.0, 0.0, 0.25], [153.0, 255.0, 120.0], 0.1, 0.1),
];

/// The four baseline LEDs: white (top), blue (right), red (bottom), green (left).
pub fn baseline_lights() -> Vec<LightSource> {
    BASELINE_LEDS
        .iter()
        .map(|&(_, d, c, kd, ks)| LightSource::new(d, c, kd, ks).expect("baseline light is valid"))
        .collect()
}

/// Ambient intensity `i_a`: one color, or sampled per pixel from a background image.
#[derive(Debug, Clone, PartialEq)]
pub enum Ambient {
    Constant(Vec3),
    Image(TactileImage),
}

impl Ambient {
    #[inline]
    fn at(&self, x: usize, y: usize) -> Vec3 {
        match self {
            Ambient::Constant(c) => *c,
            Ambient::Image(img) => {
                let p = img.get(x, y);
                [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationConfig {
    pub lights: Vec<LightSource>,
    pub ambient: Ambient,
    /// Ambient reflectance, in `[0, 1]`.
    pub ka: f64,
    /// Specular exponent.
    pub alpha: f64,
    /// Meters per pixel on the membrane plane.
    pub pixel_to_meter: f64,
}

/// Mid-gray used as the constant ambient when no background capture is given.
pub const DEFAULT_AMBIENT: Vec3 = [128.0, 128.0, 128.0];
/// Default pixel size; matches the default orthographic scene camera.
pub const DEFAULT_PIXEL_TO_METER: f64 = 3.0e-5;

impl Default for IlluminationConfig {
    fn default() -> Self {
        Self {
            lights: baseline_lights(),
            ambient: Ambient::Constant(DEFAULT_AMBIENT),
            ka: 0.8,
            alpha: 5.0,
            pixel_to_meter: DEFAULT_PIXEL_TO_METER,
        }
    }
}

impl IlluminationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ka) {
            return Err(Error::param("ka", format!("{} outside [0, 1]", self.ka)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.pixel_to_meter.is_finite() && self.pixel_to_meter > 0.0) {
            return Err(Error::param(
                "pixel_to_meter",
                format!("must be positive, got {}", self.pixel_to_meter),
            ));
        }
        if let Ambient::Constant(c) = self.ambient {
            if c.iter().any(|v| !(0.0..=255.0).contains(v)) {
                return Err(Error::param("ambient", format!("{c:?} outside [0, 255]")));
            }
        }
        Ok(())
    }
}

/// Unit surface normals, oriented toward the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    data: Vec<Vec3>,
}

impl NormalMap {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn data(&self) -> &[Vec3] {
        &self.data
    }
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Vec3 {
        self.data[y * self.width + x]
    }
    /// Constant field, normalized.
    pub fn uniform(width: usize, height: usize, n: Vec3) -> Result<Self> {
        let n = normalize(n).ok_or_else(|| Error::param("normal", "must be non-zero"))?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster("normal map needs non-zero size".into()));
        }
        Ok(Self {
            width,
            height,
            data: vec![n; width * height],
        })
    }
}

/// Normals from central differences `[-1, 0, 1] / 2r` with edge replication.
///
/// In sensor coordinates the un-oriented normal is `(∂H/∂X, ∂H/∂Y, -1)`; it is
/// flipped to face the camera and normalized. Since X and Y run against the
/// column and row directions this equals `(∂H/∂col, ∂H/∂row, 1)` normalized.
pub fn surface_normals(h: &HeightMap, pixel_to_meter: f64) -> Result<NormalMap> {
    if !(pixel_to_meter.is_finite() && pixel_to_meter > 0.0) {
        return Err(Error::param(
            "pixel_to_meter",
            format!("must be positive, got {pixel_to_meter}"),
        ));
    }
    let (w, ht) = (h.width(), h.height());
    let inv = 1.0 / (2.0 * pixel_to_meter);
    let src = h.data();
    let mut data = vec![[0.0; 3]; w * ht];
    data.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let up = &src[y.saturating_sub(1) * w..][..w];
        let down = &src[(y + 1).min(ht - 1) * w..][..w];
        let row = &src[y * w..][..w];
        for (x, n) in out.iter_mut().enumerate() {
            let left = row[x.saturating_sub(1)];
            let right = row[(x + 1).min(w - 1)];
            let d_col = (right - left) * inv;
            let d_row = (down[x] - up[x]) * inv;
            let len = (d_col * d_col + d_row * d_row + 1.0).sqrt();
            *n = [d_col / len, d_row / len, 1.0 / len];
        }
    });
    Ok(NormalMap {
        width: w,
        height: ht,
        data,
    })
}

struct LightTerms {
    direction: Vec3,
    diffuse: Vec3,
    specular: Vec3,
}

/// Per-pixel, per-channel Phong sum, clamped to `[0, 255]` and rounded.
///
/// `I = ka·ia + Σ kd·max(L·N, 0)·i + ks·max(R·V, 0)^α·i` with `R = 2(L·N)N − L`.
pub fn phong_render(normals: &NormalMap, config: &IlluminationConfig) -> Result<TactileImage> {
    config.validate()?;
    let (w, h) = (normals.width, normals.height);
    if let Ambient::Image(bg) = &config.ambient {
        if bg.width() != w || bg.height() != h {
            return Err(Error::DimensionMismatch(format!(
                "background {}x{} vs render {w}x{h}",
                bg.width(),
                bg.height()
            )));
        }
    }
    let terms: Vec<LightTerms> = config
        .lights
        .iter()
        .map(|l| LightTerms {
            direction: l.direction,
            diffuse: l.color.map(|c| l.kd * c),
            specular: l.color.map(|c| l.ks * c),
        })
        .collect();
    let alpha = config.alpha;
    let integer_alpha = (alpha.fract() == 0.0 && alpha <= 64.0).then_some(alpha as i32);
    let ka = config.ka;

    let mut data = vec![0u8; w * h * 3];
    data.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
        for (x, px) in row.chunks_exact_mut(3).enumerate() {
            let n = normals.data[y * w + x];
            let ia = config.ambient.at(x, y);
            let mut acc = [ka * ia[0], ka * ia[1], ka * ia[2]];
            for t in &terms {
                let ln = dot(t.direction, n);
                let diffuse = ln.max(0.0);
                let rv = (2.0 * ln * n[2] - t.direction[2]).max(0.0);
                let spec = match integer_alpha {
                    Some(a) => rv.powi(a),
                    None => rv.powf(alpha),
                };
                for ((a, d), s) in acc.iter_mut().zip(t.diffuse).zip(t.specular) {
                    *a += diffuse * d + spec * s;
                }
            }
            for (p, a) in px.iter_mut().zip(acc) {
                *p = a.clamp(0.0, 255.0).round() as u8;
            }
        }
    });
    TactileImage::new(w, h, data)
}

/// Depth map to tactile image: threshold, smooth, normals, shading.
pub fn render_tactile(
    depth: &DepthMap,
    deform: &DeformParams,
    illumination: &IlluminationConfig,
) -> Result<TactileImage> {
    illumination.validate()?;
    let h = elastomer_heightmap(depth, deform)?;
    let n = surface_normals(&h, illumination.pixel_to_meter)?;
    phong_render(&n, illumination)
}

/// The no-contact render of a `width x height` membrane.
pub fn background_image(
    width: usize,
    height: usize,
    illumination: &IlluminationConfig,
) -> Result<TactileImage> {
    phong_render(&NormalMap::uniform(width, height, VIEW)?, illumination)
}

/// Meters per pixel from a known object size and its measured span in pixels.
pub fn calibrate_pixel_to_meter(span_px: f64, cube_side: f64) -> Result<f64> {
    if !(span_px.is_finite() && span_px > 0.0) {
        return Err(Error::param("span_px", format!("must be positive, got {span_px}")));
    }
    if !(cube_side.is_finite() && cube_side > 0.0) {
        return Err(Error::param("cube_side", format!("must be positive, got {cube_side}")));
    }
    Ok(cube_side / span_px)
}

/// Distance in pixels between the first and last in-contact pixels of a row.
///
/// With `row = None` the row with the widest contact is used. Returns `None`
/// when no row has contact.
pub fn contact_span(elevation: &HeightMap, row: Option<usize>) -> Option<usize> {
    let span_of = |y: usize| {
        let first = (0..elevation.width()).find(|&x| elevation.get(x, y) > 0.0)?;
        let last = (0..elevation.width()).rev().find(|&x| elevation.get(x, y) > 0.0)?;
        Some(last - first)
    };
    match row {
        Some(y) if y < elevation.height() => span_of(y),
        Some(_) => None,
        None => (0..elevation.height()).filter_map(span_of).max(),
    }
}
