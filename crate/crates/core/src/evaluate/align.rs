use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::TactileImage;

pub type Point = [f64; 2];

/// Map `p -> scale * p + translation` from the real frame to the generated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTransform {
    pub scale: f64,
    pub translation: [f64; 2],
}

impl Default for AlignmentTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AlignmentTransform {
    pub fn identity() -> Self {
        AlignmentTransform {
            scale: 1.0,
            translation: [0.0, 0.0],
        }
    }

    pub fn new(scale: f64, translation: [f64; 2]) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Alignment(format!("scale must be positive, got {scale}")));
        }
        if !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::Alignment("translation must be finite".into()));
        }
        Ok(AlignmentTransform { scale, translation })
    }

    /// Row-major 2x3 affine matrix.
    pub fn matrix(&self) -> [[f64; 3]; 2] {
        [
            [self.scale, 0.0, self.translation[0]],
            [0.0, self.scale, self.translation[1]],
        ]
    }

    pub fn apply(&self, p: Point) -> Point {
        [
            self.scale * p[0] + self.translation[0],
            self.scale * p[1] + self.translation[1],
        ]
    }

    pub fn invert(&self, q: Point) -> Point {
        [
            (q[0] - self.translation[0]) / self.scale,
            (q[1] - self.translation[1]) / self.scale,
        ]
    }
}

fn perp(v: Point) -> Point {
    [-v[1], v[0]]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Exact affine map through three point pairs, as a 2x3 matrix.
fn affine_through(src: [Point; 3], dst: [Point; 3]) -> Result<[[f64; 3]; 2]> {
    let rows = src.map(|p| [p[0], p[1], 1.0]);
    let det = det3(rows);
    if det.abs() < 1e-12 {
        return Err(Error::Alignment("reference points are collinear".into()));
    }
    let mut out = [[0.0; 3]; 2];
    for (axis, row) in out.iter_mut().enumerate() {
        for (col, cell) in row.iter_mut().enumerate() {
            let mut m = rows;
            for (r, d) in dst.iter().enumerate() {
                m[r][col] = d[axis];
            }
            *cell = det3(m) / det;
        }
    }
    Ok(out)
}

/// Translation plus uniform scale from two point correspondences.
///
/// A third point `p1 + perp(p2 - p1)` completes a right isosceles triangle in
/// each frame, and the affine map through the three pairs is solved exactly.
pub fn constrained_affine(p1_src: Point, p2_src: Point, p1_dst: Point, p2_dst: Point) -> Result<AlignmentTransform> {
    let all = [p1_src, p2_src, p1_dst, p2_dst];
    if !all.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::Alignment("points must be finite".into()));
    }
    let (cs, cd) = (sub(p2_src, p1_src), sub(p2_dst, p1_dst));
    if cs[0].hypot(cs[1]) < 1e-12 || cd[0].hypot(cd[1]) < 1e-12 {
        return Err(Error::Alignment("reference points coincide".into()));
    }
    let p3 = |p1: Point, c: Point| {
        let q = perp(c);
        [p1[0] + q[0], p1[1] + q[1]]
    };
    let m = affine_through(
        [p1_src, p2_src, p3(p1_src, cs)],
        [p1_dst, p2_dst, p3(p1_dst, cd)],
    )?;
    let scale = 0.5 * (m[0][0] + m[1][1]);
    let tol = 1e-9 * scale.abs().max(1.0);
    if m[0][1].abs() > tol || m[1][0].abs() > tol || (m[0][0] - m[1][1]).abs() > tol {
        return Err(Error::Alignment(format!(
            "reference chords are not parallel, the fit would rotate: {m:?}"
        )));
    }
    AlignmentTransform::new(scale, [m[0][2], m[1][2]])
}

/// Pixel rectangle `x, y, width, height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Region of the generated frame covered by the warped real image.
pub fn common_region(real_size: (usize, usize), gen_size: (usize, usize), t: &AlignmentTransform) -> Result<CropRect> {
    const SLACK: f64 = 1e-9;
    let axis = |real: usize, gen: usize, shift: f64| {
        let lo = shift.max(0.0);
        let hi = (t.scale * (real as f64 - 1.0) + shift).min(gen as f64 - 1.0);
        let start = (lo - SLACK).ceil();
        let end = (hi + SLACK).floor();
        (end >= start).then(|| (start as usize, (end - start) as usize + 1))
    };
    match (
        axis(real_size.0, gen_size.0, t.translation[0]),
        axis(real_size.1, gen_size.1, t.translation[1]),
    ) {
        (Some((x, width)), Some((y, height))) => Ok(CropRect { x, y, width, height }),
        _ => Err(Error::Alignment("aligned images do not overlap".into())),
    }
}

fn bilinear(img: &TactileImage, x: f64, y: f64) -> [u8; 3] {
    let (w, h) = (img.width(), img.height());
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let (a, b, c, d) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
    let mut out = [0u8; 3];
    for ch in 0..3 {
        let top = f64::from(a[ch]) + fx * (f64::from(b[ch]) - f64::from(a[ch]));
        let bottom = f64::from(c[ch]) + fx * (f64::from(d[ch]) - f64::from(c[ch]));
        out[ch] = (top + fy * (bottom - top)).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Warp `real` into the generated frame and crop both to their common area.
pub fn warp_and_crop(
    real: &TactileImage,
    gen: &TactileImage,
    t: &AlignmentTransform,
) -> Result<(TactileImage, TactileImage, CropRect)> {
    let rect = common_region((real.width(), real.height()), (gen.width(), gen.height()), t)?;
    let mut data = Vec::with_capacity(rect.width * rect.height * 3);
    for y in rect.y..rect.y + rect.height {
        for x in rect.x..rect.x + rect.width {
            let [sx, sy] = t.invert([x as f64, y as f64]);
            data.extend_from_slice(&bilinear(real, sx, sy));
        }
    }
    let warped = TactileImage::new(rect.width, rect.height, data)?;
    let cropped = gen.crop(rect.x, rect.y, rect.width, rect.height)?;
    Ok((warped, cropped, rect))
}
