use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::align::{constrained_affine, warp_and_crop, AlignmentTransform, Point};
use super::metrics::{compare, MetricReport};
use crate::config::{load_json, UnknownKeys};
use crate::error::{Error, Result};
use crate::imagecore::read_rgb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    None,
    Global,
    PerObject,
}

impl FromStr for AlignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "unaligned" => Ok(AlignMode::None),
            "global" => Ok(AlignMode::Global),
            "object" | "per-object" | "per_object" => Ok(AlignMode::PerObject),
            other => Err(Error::Config(format!(
                "unknown alignment `{other}`, expected none, global or object"
            ))),
        }
    }
}

/// Two hand-picked points seen in both frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointPairs {
    pub real: [Point; 2],
    pub generated: [Point; 2],
}

impl PointPairs {
    pub fn transform(&self) -> Result<AlignmentTransform> {
        constrained_affine(self.real[0], self.real[1], self.generated[0], self.generated[1])
    }
}

/// Alignment annotations: one global pair set and optional per-object sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global: Option<PointPairs>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub objects: BTreeMap<String, PointPairs>,
}

impl Annotations {
    pub fn load(path: &Path) -> Result<Self> {
        load_json(path, UnknownKeys::Reject).map(|(notes, _)| notes)
    }

    /// Transform for one object; objects without their own points use the global set.
    pub fn transform_for(&self, mode: AlignMode, object: &str) -> Result<AlignmentTransform> {
        let global = || {
            self.global
                .as_ref()
                .ok_or_else(|| Error::Alignment("annotations have no global point pairs".into()))
        };
        match mode {
            AlignMode::None => Ok(AlignmentTransform::identity()),
            AlignMode::Global => global()?.transform(),
            AlignMode::PerObject => match self.objects.get(object) {
                Some(p) => p.transform(),
                None => global()
                    .map_err(|_| Error::Alignment(format!("no point pairs for object `{object}`")))?
                    .transform(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub path: String,
    pub object: String,
    #[serde(flatten)]
    pub metrics: MetricReport,
    pub crop: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub alignment: AlignMode,
    pub pairs: Vec<PairReport>,
    pub mean: MetricReport,
    /// Population standard deviation.
    pub sd: MetricReport,
    pub mean_crop: [f64; 2],
}

impl DatasetReport {
    pub fn from_pairs(alignment: AlignMode, pairs: Vec<PairReport>) -> Self {
        let col = |f: fn(&MetricReport) -> f64| pairs.iter().map(|p| f(&p.metrics)).collect::<Vec<_>>();
        let (ssim, psnr, mae) = (col(|m| m.ssim), col(|m| m.psnr), col(|m| m.mae));
        let n = pairs.len().max(1) as f64;
        let crop = [0, 1].map(|i| pairs.iter().map(|p| p.crop[i] as f64).sum::<f64>() / n);
        DatasetReport {
            alignment,
            mean: MetricReport {
                ssim: mean_sd(&ssim).0,
                psnr: mean_sd(&psnr).0,
                mae: mean_sd(&mae).0,
            },
            sd: MetricReport {
                ssim: mean_sd(&ssim).1,
                psnr: mean_sd(&psnr).1,
                mae: mean_sd(&mae).1,
            },
            mean_crop: crop,
            pairs,
        }
    }

    /// Plain-text summary table.
    pub fn table(&self) -> String {
        let fmt = |v: f64, prec: usize| {
            if v.is_infinite() {
                "inf".to_string()
            } else if v.is_nan() {
                "n/a".to_string()
            } else {
                format!("{v:.prec$}")
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "alignment: {:?}, pairs: {}", self.alignment, self.pairs.len());
        let _ = writeln!(out, "{:<8} {:>10} {:>10}", "metric", "mean", "sd");
        let _ = writeln!(out, "{:<8} {:>10} {:>10}", "SSIM", fmt(self.mean.ssim, 4), fmt(self.sd.ssim, 4));
        let _ = writeln!(out, "{:<8} {:>10} {:>10}", "PSNR", fmt(self.mean.psnr, 2), fmt(self.sd.psnr, 2));
        let _ = writeln!(out, "{:<8} {:>10} {:>10}", "MAE %", fmt(self.mean.mae, 2), fmt(self.sd.mae, 2));
        let _ = writeln!(out, "crop: {:.2} x {:.2}", self.mean_crop[0], self.mean_crop[1]);
        out
    }
}

/// Mean and population sd; infinite samples give an infinite mean, and an sd
/// that is 0 when every sample is the same infinity and NaN otherwise.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean.is_infinite() {
        let all_same = values.iter().all(|v| *v == mean);
        return (mean, if all_same { 0.0 } else { f64::NAN });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Relative paths of all `.png` files under `root`, sorted.
pub fn png_manifest(root: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                let rel = path.strip_prefix(root).expect("walk stays under root");
                let parts: Vec<_> = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect();
                out.push(parts.join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

/// Object key of a relative path: its first directory, or empty for top-level files.
pub fn object_of(rel: &str) -> &str {
    rel.split_once('/').map_or("", |(head, _)| head)
}

/// Compare every generated image with the real image at the same relative path.
pub fn dataset_report(
    real_dir: &Path,
    gen_dir: &Path,
    mode: AlignMode,
    annotations: Option<&Annotations>,
) -> Result<DatasetReport> {
    let real = png_manifest(real_dir)?;
    let gen = png_manifest(gen_dir)?;
    if real != gen {
        let only = |a: &[String], b: &[String]| a.iter().filter(|p| !b.contains(p)).cloned().collect::<Vec<_>>();
        return Err(Error::ManifestMismatch {
            only_real: only(&real, &gen),
            only_generated: only(&gen, &real),
        });
    }
    let empty = Annotations::default();
    let notes = match (mode, annotations) {
        (AlignMode::None, _) => &empty,
        (_, Some(a)) => a,
        (_, None) => return Err(Error::Config("alignment requested without annotations".into())),
    };
    let pairs = real
        .par_iter()
        .map(|rel| {
            let object = object_of(rel).to_string();
            let t = notes.transform_for(mode, &object)?;
            let a = read_rgb(join(real_dir, rel))?;
            let b = read_rgb(join(gen_dir, rel))?;
            let (wa, wb, rect) = warp_and_crop(&a, &b, &t)?;
            Ok(PairReport {
                path: rel.clone(),
                object,
                metrics: compare(&wa, &wb)?,
                crop: [rect.width, rect.height],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetReport::from_pairs(mode, pairs))
}

fn join(root: &Path, rel: &str) -> PathBuf {
    rel.split('/').fold(root.to_path_buf(), |p, part| p.join(part))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_statistics() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[f64::INFINITY; 3]), (f64::INFINITY, 0.0));
        let (m, s) = mean_sd(&[f64::INFINITY, 3.0]);
        assert!(m.is_infinite() && s.is_nan());
    }

    #[test]
    fn modes_and_objects() {
        assert_eq!("object".parse::<AlignMode>().unwrap(), AlignMode::PerObject);
        assert!("rotate".parse::<AlignMode>().is_err());
        assert_eq!(object_of("dot_in/pos_0_0_8.png"), "dot_in");
        assert_eq!(object_of("pos_0_0_8.png"), "");
    }

    #[test]
    fn per_object_falls_back_to_global() {
        let shift = |dx: f64| PointPairs {
            real: [[0.0, 0.0], [10.0, 0.0]],
            generated: [[dx, 0.0], [10.0 + dx, 0.0]],
        };
        let notes = Annotations {
            global: Some(shift(1.0)),
            objects: [("cone".to_string(), shift(4.0))].into(),
        };
        let t = |o| notes.transform_for(AlignMode::PerObject, o).unwrap().translation[0];
        assert!((t("cone") - 4.0).abs() < 1e-9);
        assert!((t("sphere") - 1.0).abs() < 1e-9);
        let bare = Annotations::default();
        assert!(bare.transform_for(AlignMode::PerObject, "x").is_err());
        assert_eq!(bare.transform_for(AlignMode::None, "x").unwrap(), AlignmentTransform::identity());
    }
}
