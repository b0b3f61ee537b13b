//! Real vs generated comparison: two-point alignment, cropping and metrics.

mod align;
mod metrics;
mod report;

pub use align::{common_region, constrained_affine, warp_and_crop, AlignmentTransform, CropRect, Point};
pub use metrics::{compare, mae_percent, psnr, ssim, MetricReport, SSIM_SIGMA, SSIM_WINDOW};
pub use report::{
    dataset_report, object_of, png_manifest, AlignMode, Annotations, DatasetReport, PairReport, PointPairs,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::TactileImage;

/// A connected region that differs from the background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub centroid: Point,
    pub area: usize,
}

/// Centroids of 4-connected regions whose largest channel difference from
/// `background` exceeds `threshold`, largest first. Regions smaller than
/// `min_area` pixels are dropped.
pub fn contact_centroids(
    image: &TactileImage,
    background: &TactileImage,
    threshold: u8,
    min_area: usize,
) -> Result<Vec<Blob>> {
    if (image.width(), image.height()) != (background.width(), background.height()) {
        return Err(Error::DimensionMismatch("image and background sizes differ".into()));
    }
    let (w, h) = (image.width(), image.height());
    let mask: Vec<bool> = image
        .data()
        .chunks_exact(3)
        .zip(background.data().chunks_exact(3))
        .map(|(p, q)| (0..3).any(|c| p[c].abs_diff(q[c]) > threshold))
        .collect();
    let mut seen = vec![false; w * h];
    let mut blobs = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut sx, mut sy, mut area) = (0.0, 0.0, 0usize);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            sx += x as f64;
            sy += y as f64;
            area += 1;
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if area >= min_area.max(1) {
            blobs.push(Blob {
                centroid: [sx / area as f64, sy / area as f64],
                area,
            });
        }
    }
    blobs.sort_by_key(|b| std::cmp::Reverse(b.area));
    Ok(blobs)
}
