use crate::error::{Error, Result};

/// Minimum side length of a depth map; the normal estimator uses 3-tap derivatives.
const MIN_DEPTH_SIDE: usize = 3;

macro_rules! scalar_grid {
    ($name:ident) => {
        impl $name {
            #[inline]
            pub fn width(&self) -> usize {
                self.width
            }

            #[inline]
            pub fn height(&self) -> usize {
                self.height
            }

            /// Row-major samples.
            #[inline]
            pub fn data(&self) -> &[f64] {
                &self.data
            }

            pub fn into_data(self) -> Vec<f64> {
                self.data
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> f64 {
                self.data[y * self.width + x]
            }

            /// Sample with coordinates clamped to the grid.
            #[inline]
            pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
                let x = x.clamp(0, self.width as isize - 1) as usize;
                let y = y.clamp(0, self.height as isize - 1) as usize;
                self.data[y * self.width + x]
            }

            pub fn min_value(&self) -> f64 {
                self.data.iter().copied().fold(f64::INFINITY, f64::min)
            }

            pub fn max_value(&self) -> f64 {
                self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }

            pub fn same_shape<T: GridShape>(&self, other: &T) -> bool {
                self.width == other.grid_width() && self.height == other.grid_height()
            }
        }

        impl GridShape for $name {
            fn grid_width(&self) -> usize {
                self.width
            }
            fn grid_height(&self) -> usize {
                self.height
            }
        }
    };
}

/// Anything with raster dimensions.
pub trait GridShape {
    fn grid_width(&self) -> usize;
    fn grid_height(&self) -> usize;
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "dimensions must be non-zero, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidRaster(format!(
            "{width}x{height} raster needs {} samples, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

/// Per-pixel distance from the virtual camera along its optical axis, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width, height, data.len())?;
        if width < MIN_DEPTH_SIDE || height < MIN_DEPTH_SIDE {
            return Err(Error::InvalidRaster(format!(
                "depth maps must be at least {MIN_DEPTH_SIDE}x{MIN_DEPTH_SIDE}, got {width}x{height}"
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidRaster(format!(
                "depth sample {i} is {} (must be finite and >= 0)",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }
}

scalar_grid!(DepthMap);

/// Elastomer elevation above its rest plane in meters (positive = toward the camera).
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl HeightMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!(
                "height sample {i} is not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width.saturating_mul(height)])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Internal constructor for buffers produced by finite arithmetic on valid maps.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(width * height, data.len());
        Self {
            width,
            height,
            data,
        }
    }
}

scalar_grid!(HeightMap);

/// 8-bit RGB image, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TactileImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl TactileImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, data.len() / 3)?;
        if data.len() % 3 != 0 {
            return Err(Error::InvalidRaster(format!(
                "RGB buffer length {} is not a multiple of 3",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let n = width.saturating_mul(height);
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Interleaved RGB bytes.
    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Copy of the rectangle `[x0, x0 + w) x [y0, y0 + h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidRaster(format!(
                "crop {w}x{h}+{x0}+{y0} does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y0 + h {
            let start = 3 * (y * self.width + x0);
            data.extend_from_slice(&self.data[start..start + 3 * w]);
        }
        Self::new(w, h, data)
    }
}

impl GridShape for TactileImage {
    fn grid_width(&self) -> usize {
        self.width
    }
    fn grid_height(&self) -> usize {
        self.height
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_map_rejects_bad_samples() {
        assert!(DepthMap::new(3, 3, vec![0.0; 9]).is_ok());
        assert!(DepthMap::new(3, 3, vec![0.0; 8]).is_err());
        assert!(DepthMap::new(2, 3, vec![0.0; 6]).is_err());
        let mut data = vec![0.01; 9];
        data[4] = f64::NAN;
        assert!(DepthMap::new(3, 3, data.clone()).is_err());
        data[4] = -1.0;
        assert!(DepthMap::new(3, 3, data).is_err());
    }

    #[test]
    fn height_map_allows_negative_but_not_nan() {
        assert!(HeightMap::new(1, 2, vec![-1.0, 2.0]).is_ok());
        assert!(HeightMap::new(1, 2, vec![f64::INFINITY, 2.0]).is_err());
        assert!(HeightMap::new(0, 0, vec![]).is_err());
    }

    #[test]
    fn crop_copies_the_window() {
        let img = TactileImage::new(3, 2, (0..18).collect()).unwrap();
        let c = img.crop(1, 1, 2, 1).unwrap();
        assert_eq!(c.data(), &[12, 13, 14, 15, 16, 17]);
        assert!(img.crop(2, 0, 2, 1).is_err());
    }
}
