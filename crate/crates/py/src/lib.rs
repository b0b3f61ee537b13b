//! Python bindings. Rasters cross the boundary as flat row-major lists or bytes.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use tactsim_core::augment::{perturb_depth, AugmentFile, AugmentSpec};
use tactsim_core::config::{parse_json, PipelineConfig, UnknownKeys};
use tactsim_core::elastomer::{elastomer_heightmap, DeformParams, Variant};
use tactsim_core::evaluate::{self, AlignmentTransform};
use tactsim_core::illumination::{render_tactile, IlluminationConfig};
use tactsim_core::imagecore::{self as core_img, DepthFormat};
use tactsim_core::scenegen::{self, SceneSpec};
use tactsim_core::Error;

fn py_err(e: Error) -> PyErr {
    if matches!(e, Error::Io { .. }) {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Depth map in meters, distance from the camera.
#[pyclass(frozen, module = "tactsim")]
struct DepthMap(core_img::DepthMap);

#[pymethods]
impl DepthMap {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        core_img::DepthMap::new(width, height, data).map(DepthMap).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (width, height, value))]
    fn filled(width: usize, height: usize, value: f64) -> PyResult<Self> {
        core_img::DepthMap::filled(width, height, value).map(DepthMap).map_err(py_err)
    }

    /// Read a `.pfm` or 16-bit `.png` depth file.
    #[staticmethod]
    #[pyo3(signature = (path, meters_per_unit=None))]
    fn load(path: PathBuf, meters_per_unit: Option<f64>) -> PyResult<Self> {
        let format = DepthFormat::from_path(&path, meters_per_unit).map_err(py_err)?;
        core_img::read_depth(&path, format).map(DepthMap).map_err(py_err)
    }

    #[pyo3(signature = (path, meters_per_unit=1e-6))]
    fn save(&self, path: PathBuf, meters_per_unit: f64) -> PyResult<()> {
        let format = DepthFormat::from_path(&path, Some(meters_per_unit)).map_err(py_err)?;
        core_img::write_depth(&self.0, &path, format).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(PyValueError::new_err(format!("({x}, {y}) outside the map")));
        }
        Ok(self.0.get(x, y))
    }

    fn to_list(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("DepthMap({}x{})", self.0.width(), self.0.height())
    }
}

/// 8-bit RGB image.
#[pyclass(frozen, module = "tactsim")]
struct TactileImage(core_img::TactileImage);

#[pymethods]
impl TactileImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        core_img::TactileImage::new(width, height, data).map(TactileImage).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        core_img::read_rgb(&path).map(TactileImage).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        core_img::write_rgb(&self.0, &path).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<(u8, u8, u8)> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(PyValueError::new_err(format!("({x}, {y}) outside the image")));
        }
        let [r, g, b] = self.0.get(x, y);
        Ok((r, g, b))
    }

    /// Interleaved RGB bytes, row-major.
    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.data())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("TactileImage({}x{})", self.0.width(), self.0.height())
    }
}

/// Deformation and lighting settings from a config file or the baseline.
#[pyclass(frozen, module = "tactsim")]
struct Pipeline {
    deform: DeformParams,
    illumination: IlluminationConfig,
}

impl Pipeline {
    fn from_config(cfg: &PipelineConfig, base: &Path) -> PyResult<Self> {
        Ok(Pipeline {
            deform: cfg.deform,
            illumination: cfg.illumination.resolve(base).map_err(py_err)?,
        })
    }
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (config_json=None, variant=None))]
    fn new(config_json: Option<&str>, variant: Option<&str>) -> PyResult<Self> {
        let cfg = match config_json {
            Some(text) => PipelineConfig::from_json(text, UnknownKeys::Reject).map_err(py_err)?.0,
            None => PipelineConfig::baseline(),
        };
        let mut p = Self::from_config(&cfg, Path::new("."))?;
        if let Some(v) = variant {
            p.deform.variant = v.parse::<Variant>().map_err(py_err)?;
        }
        Ok(p)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let (cfg, _) = PipelineConfig::load(&path, UnknownKeys::Reject).map_err(py_err)?;
        Self::from_config(&cfg, path.parent().unwrap_or(Path::new(".")))
    }

    #[getter]
    fn variant(&self) -> String {
        format!("{:?}", self.deform.variant)
    }

    fn render(&self, py: Python<'_>, depth: &DepthMap) -> PyResult<TactileImage> {
        py.detach(|| render_tactile(&depth.0, &self.deform, &self.illumination))
            .map(TactileImage)
            .map_err(py_err)
    }

    /// Elevation after thresholding and smoothing, flat row-major.
    fn heightmap(&self, depth: &DepthMap) -> PyResult<Vec<f64>> {
        elastomer_heightmap(&depth.0, &self.deform).map(|h| h.into_data()).map_err(py_err)
    }
}

/// Render with the baseline pipeline, optionally switching the heightmap variant.
#[pyfunction]
#[pyo3(signature = (depth, variant=None))]
fn render(py: Python<'_>, depth: &DepthMap, variant: Option<&str>) -> PyResult<TactileImage> {
    Pipeline::new(None, variant)?.render(py, depth)
}

/// Ray-cast a scene given as JSON.
#[pyfunction]
fn render_depth(py: Python<'_>, scene_json: &str) -> PyResult<DepthMap> {
    let scene = SceneSpec::from_json(scene_json).map_err(py_err)?;
    py.detach(|| scenegen::render_depth(&scene)).map(DepthMap).map_err(py_err)
}

/// Texture-perturbed copy of `depth`; `spec_json` defaults to every builtin texture.
#[pyfunction]
#[pyo3(signature = (depth, seed, draw_index, spec_json=None))]
fn perturb(depth: &DepthMap, seed: u64, draw_index: u64, spec_json: Option<&str>) -> PyResult<DepthMap> {
    let spec = match spec_json {
        Some(text) => {
            let (mut file, _): (AugmentFile, _) = parse_json(text, "augment spec", UnknownKeys::Reject).map_err(py_err)?;
            file.seed = seed;
            file.resolve(Path::new(".")).map_err(py_err)?
        }
        None => AugmentSpec::builtin(seed),
    };
    perturb_depth(&depth.0, &spec, draw_index).map(DepthMap).map_err(py_err)
}

/// `(ssim, psnr, mae_percent)`; PSNR is `inf` for identical images.
#[pyfunction]
fn compare(a: &TactileImage, b: &TactileImage) -> PyResult<(f64, f64, f64)> {
    let m = evaluate::compare(&a.0, &b.0).map_err(py_err)?;
    Ok((m.ssim, m.psnr, m.mae))
}

/// Scale and translation mapping two source points onto two destination points.
#[pyfunction]
fn constrained_affine(
    p1_src: [f64; 2],
    p2_src: [f64; 2],
    p1_dst: [f64; 2],
    p2_dst: [f64; 2],
) -> PyResult<(f64, (f64, f64))> {
    let t = evaluate::constrained_affine(p1_src, p2_src, p1_dst, p2_dst).map_err(py_err)?;
    Ok((t.scale, (t.translation[0], t.translation[1])))
}

/// Warp `real` by `(scale, (tx, ty))` and crop both images to the common region.
#[pyfunction]
fn align(real: &TactileImage, generated: &TactileImage, scale: f64, translation: (f64, f64)) -> PyResult<(TactileImage, TactileImage)> {
    let t = AlignmentTransform::new(scale, [translation.0, translation.1]).map_err(py_err)?;
    let (a, b, _) = evaluate::warp_and_crop(&real.0, &generated.0, &t).map_err(py_err)?;
    Ok((TactileImage(a), TactileImage(b)))
}

/// The embedded baseline config as JSON.
#[pyfunction]
fn baseline_config() -> String {
    PipelineConfig::baseline().to_json()
}

#[pymodule]
fn tactsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DepthMap>()?;
    m.add_class::<TactileImage>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(render_depth, m)?)?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_affine, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_config, m)?)?;
    Ok(())
}
