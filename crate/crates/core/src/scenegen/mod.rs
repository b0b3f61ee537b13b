//! Synthetic depth maps of primitive objects pressed into the sensor.
//!
//! World frame: x along image columns, y along image rows, z along the
//! camera axis pointing away from the camera. The origin is the centre of the
//! undeformed membrane plane, which sits `membrane_distance` in front of the
//! camera. An object posed at z = 0 just touches the membrane; `press_depth`
//! pushes the whole scene that much further toward the camera.

mod shapes;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use shapes::Shape;
use shapes::Solid;

use crate::config::{parse_json, UnknownKeys};
use crate::error::{Error, Result};
use crate::imagecore::DepthMap;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Projection {
    /// Parallel rays, `pixel_size` meters per pixel.
    Orthographic { pixel_size: f64 },
    /// Rays through a pinhole with horizontal field of view in degrees.
    Pinhole { fov_x_deg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    #[serde(default = "default_projection")]
    pub projection: Projection,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    /// Camera to membrane rest plane, meters. Plays the role of `d_max`.
    #[serde(default = "default_membrane_distance")]
    pub membrane_distance: f64,
    /// Largest allowed press depth, meters.
    #[serde(default = "default_membrane_thickness")]
    pub membrane_thickness: f64,
}

fn default_projection() -> Projection {
    Projection::Orthographic {
        pixel_size: crate::illumination::DEFAULT_PIXEL_TO_METER,
    }
}
fn default_width() -> usize {
    640
}
fn default_height() -> usize {
    480
}
fn default_membrane_distance() -> f64 {
    0.03
}
fn default_membrane_thickness() -> f64 {
    0.004
}

impl Default for Camera {
    fn default() -> Self {
        Camera {
            projection: default_projection(),
            width: default_width(),
            height: default_height(),
            membrane_distance: default_membrane_distance(),
            membrane_thickness: default_membrane_thickness(),
        }
    }
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::param(
                "camera",
                format!("image must be at least 3x3, got {}x{}", self.width, self.height),
            ));
        }
        match self.projection {
            Projection::Orthographic { pixel_size } if !(pixel_size.is_finite() && pixel_size > 0.0) => {
                return Err(Error::param("pixel_size", format!("must be positive, got {pixel_size}")));
            }
            Projection::Pinhole { fov_x_deg } if !(fov_x_deg > 0.0 && fov_x_deg < 180.0) => {
                return Err(Error::param("fov_x_deg", format!("must lie in (0, 180), got {fov_x_deg}")));
            }
            _ => {}
        }
        if !(self.membrane_distance.is_finite() && self.membrane_distance > 0.0) {
            return Err(Error::param("membrane_distance", "must be positive"));
        }
        if !(self.membrane_thickness.is_finite() && self.membrane_thickness >= 0.0) {
            return Err(Error::param("membrane_thickness", "must be non-negative"));
        }
        Ok(())
    }

    /// Size of one pixel on the membrane rest plane, meters.
    pub fn pixel_size_at_membrane(&self) -> f64 {
        match self.projection {
            Projection::Orthographic { pixel_size } => pixel_size,
            Projection::Pinhole { .. } => self.membrane_distance / self.focal_px(),
        }
    }

    fn focal_px(&self) -> f64 {
        match self.projection {
            Projection::Pinhole { fov_x_deg } => {
                self.width as f64 / 2.0 / (fov_x_deg.to_radians() / 2.0).tan()
            }
            Projection::Orthographic { .. } => f64::INFINITY,
        }
    }

    /// Origin and direction of the ray through a pixel centre. The direction
    /// has unit z component so the hit parameter is the z-depth.
    fn ray(&self, col: usize, row: usize) -> (Vec3, Vec3) {
        let u = col as f64 + 0.5 - self.width as f64 / 2.0;
        let v = row as f64 + 0.5 - self.height as f64 / 2.0;
        let z0 = -self.membrane_distance;
        match self.projection {
            Projection::Orthographic { pixel_size } => {
                ([u * pixel_size, v * pixel_size, z0], [0.0, 0.0, 1.0])
            }
            Projection::Pinhole { .. } => {
                let f = self.focal_px();
                ([0.0, 0.0, z0], [u / f, v / f, 1.0])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    /// Position of the shape's top centre, meters.
    #[serde(default)]
    pub position: Vec3,
    /// Rotation about x, then y, then z, degrees.
    #[serde(default)]
    pub rotation_deg: Vec3,
}

impl Primitive {
    pub fn new(shape: Shape) -> Self {
        Primitive {
            shape,
            position: [0.0; 3],
            rotation_deg: [0.0; 3],
        }
    }

    pub fn at(mut self, position: Vec3) -> Self {
        self.position = position;
        self
    }

    pub fn rotated(mut self, rotation_deg: Vec3) -> Self {
        self.rotation_deg = rotation_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.iter().chain(&self.rotation_deg).all(|v| v.is_finite()) {
            return Err(Error::param("pose", "position and rotation must be finite"));
        }
        self.shape.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub camera: Camera,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
    #[serde(default)]
    pub press_depth: f64,
    /// Depth written where no primitive is hit. Defaults to twice the membrane distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_depth: Option<f64>,
}

impl SceneSpec {
    pub fn new(camera: Camera, primitives: Vec<Primitive>, press_depth: f64) -> Self {
        SceneSpec {
            camera,
            primitives,
            press_depth,
            far_depth: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        if !(self.press_depth >= 0.0 && self.press_depth <= self.camera.membrane_thickness) {
            return Err(Error::param(
                "press_depth",
                format!(
                    "must lie in [0, {}], got {}",
                    self.camera.membrane_thickness, self.press_depth
                ),
            ));
        }
        if let Some(far) = self.far_depth {
            if !(far.is_finite() && far > self.camera.membrane_distance) {
                return Err(Error::param(
                    "far_depth",
                    format!("must exceed the membrane distance, got {far}"),
                ));
            }
        }
        self.primitives.iter().try_for_each(Primitive::validate)
    }

    pub fn far(&self) -> f64 {
        self.far_depth
            .unwrap_or(2.0 * self.camera.membrane_distance)
    }

    /// The scene moved sideways by the pose offset and pressed by the pose depth.
    pub fn posed(&self, pose: &GridPose) -> SceneSpec {
        let mut out = self.clone();
        for p in &mut out.primitives {
            p.position[0] += pose.x;
            p.position[1] += pose.y;
        }
        out.press_depth += pose.press;
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (spec, _): (SceneSpec, _) = parse_json(text, "scene", UnknownKeys::Reject)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

/// A leaf solid with its world pose folded into a rigid transform.
struct Placed {
    solid: Solid,
    /// Rows are the local axes in world coordinates (world to local rotation).
    to_local: [[f64; 3]; 3],
    origin: Vec3,
}

impl Placed {
    fn intersect(&self, o: Vec3, d: Vec3) -> Option<f64> {
        let rel = [o[0] - self.origin[0], o[1] - self.origin[1], o[2] - self.origin[2]];
        let lo = mat_vec(&self.to_local, rel);
        let ld = mat_vec(&self.to_local, d);
        self.solid.intersect(lo, ld, 0.0)
    }
}

fn mat_vec(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

/// Local-to-world rotation `Rz * Ry * Rx`.
fn rotation(deg: Vec3) -> [[f64; 3]; 3] {
    if deg == [0.0; 3] {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let [ax, ay, az] = deg.map(f64::to_radians);
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let (sz, cz) = az.sin_cos();
    let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
    mat_mul(&rz, &mat_mul(&ry, &rx))
}

fn flatten(p: &Primitive, parent_rot: &[[f64; 3]; 3], parent_pos: Vec3, out: &mut Vec<Placed>) {
    let rot = mat_mul(parent_rot, &rotation(p.rotation_deg));
    let off = mat_vec(parent_rot, p.position);
    let pos = [parent_pos[0] + off[0], parent_pos[1] + off[1], parent_pos[2] + off[2]];
    match &p.shape {
        Shape::Composite { parts } => {
            for part in parts {
                flatten(part, &rot, pos, out);
            }
        }
        shape => out.push(Placed {
            solid: Solid::from_shape(shape).expect("leaf shape"),
            to_local: transpose(&rot),
            origin: pos,
        }),
    }
}

/// Nearest-hit z-depth per pixel; pixels that see nothing get the far value.
pub fn render_depth(scene: &SceneSpec) -> Result<DepthMap> {
    scene.validate()?;
    let cam = &scene.camera;
    let identity = rotation([0.0; 3]);
    let mut leaves = Vec::new();
    for p in &scene.primitives {
        flatten(p, &identity, [0.0, 0.0, -scene.press_depth], &mut leaves);
    }
    let far = scene.far();
    let (w, h) = (cam.width, cam.height);
    let mut data = vec![far; w * h];
    if !leaves.is_empty() {
        data.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
            for (col, out) in line.iter_mut().enumerate() {
                let (o, d) = cam.ray(col, row);
                let hit = leaves
                    .iter()
                    .filter_map(|l| l.intersect(o, d))
                    .fold(f64::INFINITY, f64::min);
                // Geometry the camera sits inside of reads as depth 0.
                *out = hit.clamp(0.0, far);
            }
        });
    }
    DepthMap::new(w, h, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Horizontal step, meters.
    pub dx: f64,
    /// Press increment per vertical step, meters.
    pub dz: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: 3,
            ny: 3,
            nz: 11,
            dx: 1e-3,
            dz: 1e-4,
        }
    }
}

/// One probe position: horizontal offset from centre and extra press depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPose {
    pub ix: i64,
    pub iy: i64,
    pub iz: usize,
    pub x: f64,
    pub y: f64,
    pub press: f64,
}

impl GridPose {
    /// File stem such as `pos_-1_0_3`.
    pub fn name(&self) -> String {
        format!("pos_{}_{}_{}", self.ix, self.iy, self.iz)
    }
}

/// Every pose of a horizontally centred grid, z innermost. The first z level
/// is first contact (no extra press).
pub fn grid_poses(grid: &GridSpec) -> Result<Vec<GridPose>> {
    if grid.nx == 0 || grid.ny == 0 || grid.nz == 0 {
        return Err(Error::param("grid", "step counts must be positive"));
    }
    if !(grid.dx.is_finite() && grid.dx > 0.0 && grid.dz.is_finite() && grid.dz > 0.0) {
        return Err(Error::param("grid", "step sizes must be positive"));
    }
    let offset = |i: usize, n: usize| i as f64 - (n - 1) as f64 / 2.0;
    let index = |i: usize, n: usize| i as i64 - ((n - 1) / 2) as i64;
    let mut poses = Vec::with_capacity(grid.nx * grid.ny * grid.nz);
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            for k in 0..grid.nz {
                poses.push(GridPose {
                    ix: index(i, grid.nx),
                    iy: index(j, grid.ny),
                    iz: k,
                    x: offset(i, grid.nx) * grid.dx,
                    y: offset(j, grid.ny) * grid.dx,
                    press: k as f64 * grid.dz,
                });
            }
        }
    }
    Ok(poses)
}
