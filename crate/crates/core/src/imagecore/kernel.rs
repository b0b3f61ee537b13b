use crate::error::{Error, Result};

/// Square convolution kernel with an odd side length.
///
/// Gaussian kernels also carry their 1-D factor so [`convolve`](super::convolve)
/// can run them as two separable passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    weights: Vec<f64>,
    separable: Option<Vec<f64>>,
}

impl Kernel2D {
    /// Arbitrary kernel from `size * size` row-major weights.
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        check_size(size)?;
        if weights.len() != size * size {
            return Err(Error::param(
                "weights",
                format!("expected {} weights, got {}", size * size, weights.len()),
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("weights", "weights must be finite"));
        }
        Ok(Self {
            size,
            weights,
            separable: None,
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Row-major weights, `weights()[(dy + r) * size + (dx + r)]`.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius() as isize;
        self.weights[((dy + r) as usize) * self.size + (dx + r) as usize]
    }

    /// 1-D factor `g` with `weights[i][j] == g[i] * g[j]`, when the kernel is separable.
    pub fn separable_factor(&self) -> Option<&[f64]> {
        self.separable.as_deref()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 || size % 2 == 0 {
        return Err(Error::param(
            "kernel_size",
            format!("must be a positive odd number, got {size}"),
        ));
    }
    Ok(())
}

/// Normalized 1-D Gaussian taps on the centered integer lattice.
pub fn gaussian_weights_1d(size: usize, sigma: f64) -> Result<Vec<f64>> {
    check_size(size)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param(
            "sigma",
            format!("must be positive and finite, got {sigma}"),
        ));
    }
    let r = (size / 2) as f64;
    let mut taps: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - r;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    Ok(taps)
}

/// Discrete bivariate Gaussian, renormalized to unit sum on the lattice.
///
/// The 2-D lattice sum of `exp(-(x²+y²)/2σ²)` factors into the product of two
/// 1-D sums, so the outer product of normalized 1-D taps is exactly the
/// normalized 2-D kernel.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Kernel2D> {
    let taps = gaussian_weights_1d(size, sigma)?;
    let mut weights = Vec::with_capacity(size * size);
    for gy in &taps {
        for gx in &taps {
            weights.push(gy * gx);
        }
    }
    Ok(Kernel2D {
        size,
        weights,
        separable: Some(taps),
    })
}
