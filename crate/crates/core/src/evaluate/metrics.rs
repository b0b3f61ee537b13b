use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::imagecore::{gaussian_weights_1d, TactileImage};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Similarity of two images. `psnr` is `+inf` for identical inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub ssim: f64,
    pub psnr: f64,
    /// Mean absolute error in percent of the channel range.
    pub mae: f64,
}

#[derive(Serialize, Deserialize)]
struct MetricRepr {
    ssim: Option<f64>,
    psnr: Option<f64>,
    psnr_infinite: bool,
    mae: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Serialize for MetricReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MetricRepr {
            ssim: finite(self.ssim),
            psnr: finite(self.psnr),
            psnr_infinite: self.psnr == f64::INFINITY,
            mae: finite(self.mae),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricReport {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MetricRepr::deserialize(d)?;
        let psnr = match (r.psnr, r.psnr_infinite) {
            (_, true) => f64::INFINITY,
            (Some(v), false) => v,
            (None, false) => f64::NAN,
        };
        Ok(MetricReport {
            ssim: r.ssim.unwrap_or(f64::NAN),
            psnr,
            mae: r.mae.unwrap_or(f64::NAN),
        })
    }
}

fn check_pair(a: &TactileImage, b: &TactileImage) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub fn mae_percent(a: &TactileImage, b: &TactileImage) -> Result<f64> {
    check_pair(a, b)?;
    let sum: u64 = a.data().iter().zip(b.data()).map(|(x, y)| u64::from(x.abs_diff(*y))).sum();
    Ok(100.0 * sum as f64 / (255.0 * a.data().len() as f64))
}

pub fn psnr(a: &TactileImage, b: &TactileImage) -> Result<f64> {
    check_pair(a, b)?;
    let sq: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| u64::from(x.abs_diff(*y)).pow(2))
        .sum();
    if sq == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sq as f64 / a.data().len() as f64;
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Separable valid-mode filtering of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&src[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (i, t) in taps.iter().enumerate() {
            let src = &rows[(y + i) * ow..(y + i + 1) * ow];
            for (o, v) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *o += t * v;
            }
        }
    }
    out
}

/// Mean SSIM over all valid 11x11 Gaussian windows, averaged over channels.
pub fn ssim(a: &TactileImage, b: &TactileImage) -> Result<f64> {
    check_pair(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::DimensionMismatch(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let taps = gaussian_weights_1d(SSIM_WINDOW, SSIM_SIGMA)?;
    let mut total = 0.0;
    for c in 0..3 {
        let pa: Vec<f64> = a.data().iter().skip(c).step_by(3).map(|&v| f64::from(v)).collect();
        let pb: Vec<f64> = b.data().iter().skip(c).step_by(3).map(|&v| f64::from(v)).collect();
        let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
        let mu_a = filter_valid(&pa, w, h, &taps);
        let mu_b = filter_valid(&pb, w, h, &taps);
        let aa = filter_valid(&prod(&pa, &pa), w, h, &taps);
        let bb = filter_valid(&prod(&pb, &pb), w, h, &taps);
        let ab = filter_valid(&prod(&pa, &pb), w, h, &taps);
        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / 3.0)
}

pub fn compare(a: &TactileImage, b: &TactileImage) -> Result<MetricReport> {
    Ok(MetricReport {
        ssim: ssim(a, b)?,
        psnr: psnr(a, b)?,
        mae: mae_percent(a, b)?,
    })
}
