use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imagecore::read_rgb;

const TILE: usize = 256;

/// Names of the bundled procedural textures, in index order.
pub const BUILTIN_TEXTURES: [&str; 12] = [
    "stripes_fine",
    "stripes_coarse",
    "stripes_diagonal",
    "crosshatch",
    "layer_lines",
    "dots",
    "checker",
    "waves",
    "grain",
    "blotch_fine",
    "blotch_medium",
    "blotch_coarse",
];

/// Tileable grayscale heightfield with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TextureMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl TextureMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "texture {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidRaster(format!("texture value {v} outside [0, 1]")));
        }
        Ok(TextureMap { width, height, data })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Grayscale texture from an image file, channel mean scaled to [0, 1].
    pub fn from_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = read_rgb(path)?;
        let data = img
            .data()
            .chunks_exact(3)
            .map(|p| (f64::from(p[0]) + f64::from(p[1]) + f64::from(p[2])) / (3.0 * 255.0))
            .collect();
        Self::new(img.width(), img.height(), data)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let index = BUILTIN_TEXTURES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown builtin texture `{name}`")))?;
        Ok(builtin_by_index(index))
    }

    pub fn builtin_all() -> Vec<Self> {
        (0..BUILTIN_TEXTURES.len()).map(builtin_by_index).collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Bilinear sample with wrap-around at texel coordinates `(u, v)`.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
        let (x0, y0) = (u.floor(), v.floor());
        let (fx, fy) = (u - x0, v - y0);
        let (w, h) = (self.width as i64, self.height as i64);
        let xi = (x0 as i64).rem_euclid(w) as usize;
        let yi = (y0 as i64).rem_euclid(h) as usize;
        let xj = (xi + 1) % self.width;
        let yj = (yi + 1) % self.height;
        let at = |x: usize, y: usize| self.data[y * self.width + x];
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let top = lerp(at(xi, yi), at(xj, yi), fx);
        let bottom = lerp(at(xi, yj), at(xj, yj), fx);
        lerp(top, bottom, fy)
    }
}

fn from_fn(f: impl Fn(f64, f64) -> f64) -> TextureMap {
    let mut data = Vec::with_capacity(TILE * TILE);
    for y in 0..TILE {
        for x in 0..TILE {
            data.push(f(x as f64, y as f64));
        }
    }
    normalized(data)
}

fn normalized(mut data: Vec<f64>) -> TextureMap {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in &mut data {
        *v = if span > 0.0 { ((*v - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
    }
    TextureMap {
        width: TILE,
        height: TILE,
        data,
    }
}

/// Periodic value noise with `cells` lattice cells per tile side.
fn value_noise(cells: usize, seed: u64) -> TextureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lattice: Vec<f64> = (0..cells * cells).map(|_| rng.random::<f64>()).collect();
    let cell = TILE as f64 / cells as f64;
    from_fn(|x, y| {
        let (u, v) = (x / cell, y / cell);
        let (i, j) = (u.floor() as usize, v.floor() as usize);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (fx, fy) = (smooth(u.fract()), smooth(v.fract()));
        let at = |a: usize, b: usize| lattice[(b % cells) * cells + a % cells];
        let top = at(i, j) + fx * (at(i + 1, j) - at(i, j));
        let bottom = at(i, j + 1) + fx * (at(i + 1, j + 1) - at(i, j + 1));
        top + fy * (bottom - top)
    })
}

fn builtin_by_index(index: usize) -> TextureMap {
    let wave = |t: f64, period: f64| 0.5 + 0.5 * (TAU * t / period).cos();
    match index {
        0 => from_fn(|x, _| wave(x, 8.0)),
        1 => from_fn(|x, _| wave(x, 32.0)),
        2 => from_fn(|x, y| wave(x + y, 16.0)),
        3 => from_fn(|x, y| wave(x, 16.0).max(wave(y, 16.0))),
        4 => from_fn(|x, _| (x % 6.0) / 6.0),
        5 => from_fn(|x, y| {
            let (dx, dy) = (x % 16.0 - 7.5, y % 16.0 - 7.5);
            (1.0 - (dx * dx + dy * dy).sqrt() / 5.0).max(0.0)
        }),
        6 => from_fn(|x, y| f64::from(((x / 16.0) as u32 + (y / 16.0) as u32) % 2)),
        7 => from_fn(|x, y| wave(x, 64.0) * wave(y, 32.0)),
        8 => value_noise(128, 0x6a5d),
        9 => value_noise(32, 0x9f11),
        10 => value_noise(16, 0x27c3),
        11 => value_noise(4, 0x51e8),
        _ => unreachable!("builtin texture index"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_cover_the_unit_range() {
        let all = TextureMap::builtin_all();
        assert_eq!(all.len(), 12);
        for (t, name) in all.iter().zip(BUILTIN_TEXTURES) {
            let lo = t.data().iter().copied().fold(1.0, f64::min);
            let hi = t.data().iter().copied().fold(0.0, f64::max);
            assert_eq!((lo, hi), (0.0, 1.0), "{name}");
        }
        for i in 0..all.len() {
            for j in 0..i {
                assert_ne!(all[i], all[j]);
            }
        }
        assert_eq!(TextureMap::builtin("grain").unwrap(), all[8]);
        assert!(TextureMap::builtin("nope").is_err());
    }

    #[test]
    fn sampling_wraps_and_interpolates() {
        let t = TextureMap::new(2, 2, vec![0.0, 1.0, 0.5, 0.25]).unwrap();
        assert_eq!(t.sample(0.0, 0.0), 0.0);
        assert_eq!(t.sample(2.0, -2.0), 0.0);
        assert_eq!(t.sample(0.5, 0.0), 0.5);
        assert_eq!(t.sample(1.5, 0.0), 0.5);
        assert_eq!(t.sample(-1.0, 1.0), 0.25);
        assert!((t.sample(0.5, 0.5) - 0.4375).abs() < 1e-15);
        let c = TextureMap::constant(3, 5, 1.0).unwrap();
        assert_eq!(c.sample(1.37, -8.9), 1.0);
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(TextureMap::new(1, 1, vec![1.5]).is_err());
        assert!(TextureMap::new(2, 1, vec![0.5]).is_err());
    }
}
