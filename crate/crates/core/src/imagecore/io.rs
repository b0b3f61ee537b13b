//! Depth maps as 32-bit PFM or scaled 16-bit PNG; tactile images as 8-bit RGB PNG.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::raster::{DepthMap, TactileImage};
use crate::error::{Error, Result};

/// tEXt keyword carrying the meters-per-unit scale of a 16-bit depth PNG.
pub const METERS_PER_UNIT_KEY: &str = "tactsim:meters_per_unit";

/// On-disk depth encodings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DepthFormat {
    /// Single-channel portable float map (`Pf`), little endian, bottom row first.
    Pfm,
    /// 16-bit grayscale PNG. When reading, `None` uses the scale stored in the file header.
    Png16 { meters_per_unit: Option<f64> },
}

impl DepthFormat {
    /// Picks the format from the file extension (`.pfm` or `.png`).
    pub fn from_path(path: &Path, meters_per_unit: Option<f64>) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("pfm") => Ok(DepthFormat::Pfm),
            Some("png") => Ok(DepthFormat::Png16 { meters_per_unit }),
            _ => Err(Error::malformed(
                path,
                "unknown depth extension (expected .pfm or .png)",
            )),
        }
    }
}

pub fn read_depth(path: impl AsRef<Path>, format: DepthFormat) -> Result<DepthMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        DepthFormat::Pfm => decode_pfm(&bytes).map_err(|reason| Error::malformed(path, reason)),
        DepthFormat::Png16 { meters_per_unit } => decode_depth_png(path, &bytes, meters_per_unit),
    }
}

pub fn write_depth(map: &DepthMap, path: impl AsRef<Path>, format: DepthFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        DepthFormat::Pfm => encode_pfm(map),
        DepthFormat::Png16 { meters_per_unit } => {
            let scale = meters_per_unit.ok_or_else(|| {
                Error::param("meters_per_unit", "required when writing a 16-bit depth PNG")
            })?;
            encode_depth_png(map, scale)?
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn encode_pfm(map: &DepthMap) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for &v in &map.data()[y * w..(y + 1) * w] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

fn decode_pfm(bytes: &[u8]) -> std::result::Result<DepthMap, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<&str, String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ASCII header")?;
        Ok(tok)
    };
    let magic = token()?;
    if magic != "Pf" {
        return Err(format!("expected single-channel `Pf` magic, found `{magic}`"));
    }
    let width: usize = token()?.parse().map_err(|_| "bad width")?;
    let height: usize = token()?.parse().map_err(|_| "bad height")?;
    let scale: f64 = token()?.parse().map_err(|_| "bad scale")?;
    if width == 0 || height == 0 {
        return Err(format!("zero dimension {width}x{height}"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err("scale must be non-zero".into());
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = pos + 1;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or("dimensions overflow")?;
    let body = bytes
        .get(start..)
        .filter(|b| b.len() >= need)
        .ok_or_else(|| format!("truncated raster: need {need} bytes"))?;
    let little = scale < 0.0;
    let mut data = vec![0.0; width * height];
    for (i, chunk) in body[..need].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (x, y_from_bottom) = (i % width, i / width);
        data[(height - 1 - y_from_bottom) * width + x] = f64::from(v);
    }
    DepthMap::new(width, height, data).map_err(|e| e.to_string())
}

fn encode_depth_png(map: &DepthMap, meters_per_unit: f64) -> Result<Vec<u8>> {
    if !(meters_per_unit.is_finite() && meters_per_unit > 0.0) {
        return Err(Error::param(
            "meters_per_unit",
            format!("must be positive, got {meters_per_unit}"),
        ));
    }
    let mut raw = Vec::with_capacity(map.data().len() * 2);
    for &v in map.data() {
        let units = (v / meters_per_unit).round();
        if units > f64::from(u16::MAX) {
            return Err(Error::param(
                "meters_per_unit",
                format!("depth {v} m overflows 16 bits at {meters_per_unit} m/unit"),
            ));
        }
        raw.extend_from_slice(&(units as u16).to_be_bytes());
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, map.width() as u32, map.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        enc.add_text_chunk(METERS_PER_UNIT_KEY.to_string(), format!("{meters_per_unit:e}"))
            .map_err(png_write_err)?;
        let mut writer = enc.write_header().map_err(png_write_err)?;
        writer.write_image_data(&raw).map_err(png_write_err)?;
        writer.finish().map_err(png_write_err)?;
    }
    Ok(out)
}

fn png_write_err(e: png::EncodingError) -> Error {
    Error::io("<png encoder>", std::io::Error::other(e))
}

fn decode_depth_png(path: &Path, bytes: &[u8], scale: Option<f64>) -> Result<DepthMap> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::malformed(
            path,
            format!(
                "expected 16-bit grayscale, found {:?} at {:?}",
                info.color_type, info.bit_depth
            ),
        ));
    }
    let header_scale = info
        .uncompressed_latin1_text
        .iter()
        .find(|t| t.keyword == METERS_PER_UNIT_KEY)
        .map(|t| t.text.trim().parse::<f64>());
    let scale = match (scale, header_scale) {
        (Some(s), _) => s,
        (None, Some(Ok(s))) => s,
        (None, Some(Err(_))) => {
            return Err(Error::malformed(path, "unparseable meters-per-unit header"))
        }
        (None, None) => {
            return Err(Error::malformed(
                path,
                "no meters-per-unit scale in header and none supplied",
            ))
        }
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::malformed(path, format!("invalid scale {scale}")));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    reader
        .next_frame(&mut buf)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let data = buf[..w * h * 2]
        .chunks_exact(2)
        .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) * scale)
        .collect();
    DepthMap::new(w, h, data).map_err(|e| Error::malformed(path, e.to_string()))
}

pub fn read_rgb(path: impl AsRef<Path>) -> Result<TactileImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rgb_png(&bytes).map_err(|reason| Error::malformed(path, reason))
}

pub fn write_rgb(image: &TactileImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_rgb_png(image)?).map_err(|e| Error::io(path, e))
}

/// PNG bytes for an RGB image. Encoding is deterministic.
pub fn encode_rgb_png(image: &TactileImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_write_err)?;
        writer.write_image_data(image.data()).map_err(png_write_err)?;
        writer.finish().map_err(png_write_err)?;
    }
    Ok(out)
}

/// Decodes any non-palette-indexed PNG to 8-bit RGB; gray is replicated, alpha dropped.
pub fn decode_rgb_png(bytes: &[u8]) -> std::result::Result<TactileImage, String> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
    let frame = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let channels = match frame.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err("indexed PNG not expanded".into()),
    };
    let mut rgb = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        let row = &buf[y * frame.line_size..y * frame.line_size + w * channels];
        for px in row.chunks_exact(channels) {
            match channels {
                1 | 2 => rgb.extend_from_slice(&[px[0], px[0], px[0]]),
                _ => rgb.extend_from_slice(&px[..3]),
            }
        }
    }
    TactileImage::new(w, h, rgb).map_err(|e| e.to_string())
}
