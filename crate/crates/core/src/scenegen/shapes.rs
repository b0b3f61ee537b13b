//! Ray intersection for the primitive set.
//!
//! Every shape is defined in a local frame whose origin is the centre of its
//! camera-facing top: the body extends toward +z (away from the camera) and
//! the first point a downward press would touch sits at z = 0.

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

const EPS: f64 = 1e-15;
/// Surface tolerance for the marched shapes, meters.
const MARCH_TOLERANCE: f64 = 1e-10;
const MARCH_MAX_STEPS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Ball touching z = 0 at its pole.
    Sphere { radius: f64 },
    /// Axis-aligned box `size[0] x size[1]` wide and `size[2]` deep.
    #[serde(rename = "box")]
    Cuboid { size: Vec3 },
    /// Upright cylinder with a flat top face.
    Cylinder { radius: f64, height: f64 },
    /// Cone with its apex at the origin, widening to `radius` at depth `height`.
    Cone { radius: f64, height: f64 },
    /// Ring lying flat, tube of radius `minor_radius` around a circle of `major_radius`.
    Torus {
        major_radius: f64,
        minor_radius: f64,
    },
    /// Regular polygon prism with `sides` faces and a flat top.
    Prism {
        sides: u32,
        circumradius: f64,
        height: f64,
    },
    /// Slab whose top is a cosine corrugation along x with crests at z = 0.
    WaveField {
        size: [f64; 2],
        amplitude: f64,
        wavelength: f64,
        thickness: f64,
    },
    /// Union of posed parts, placed relative to the composite's own pose.
    Composite { parts: Vec<super::Primitive> },
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Sphere { radius } => positive("radius", *radius),
            Shape::Cuboid { size } => size.iter().try_for_each(|s| positive("size", *s)),
            Shape::Cylinder { radius, height } | Shape::Cone { radius, height } => {
                positive("radius", *radius)?;
                positive("height", *height)
            }
            Shape::Torus {
                major_radius,
                minor_radius,
            } => {
                positive("minor_radius", *minor_radius)?;
                positive("major_radius", *major_radius)
            }
            Shape::Prism {
                sides,
                circumradius,
                height,
            } => {
                if *sides < 3 {
                    return Err(Error::param("sides", format!("need at least 3, got {sides}")));
                }
                positive("circumradius", *circumradius)?;
                positive("height", *height)
            }
            Shape::WaveField {
                size,
                amplitude,
                wavelength,
                thickness,
            } => {
                size.iter().try_for_each(|s| positive("size", *s))?;
                positive("amplitude", *amplitude)?;
                positive("wavelength", *wavelength)?;
                positive("thickness", *thickness)
            }
            Shape::Composite { parts } => parts.iter().try_for_each(|p| p.validate()),
        }
    }
}

/// A leaf shape ready for intersection, in its local frame.
#[derive(Debug, Clone)]
pub(crate) enum Solid {
    Sphere { radius: f64 },
    Convex { planes: Vec<(Vec3, f64)> },
    Cylinder { radius: f64, height: f64 },
    Cone { radius: f64, height: f64 },
    Torus { major: f64, minor: f64 },
    Wave { half: [f64; 2], amplitude: f64, wavelength: f64, depth: f64 },
}

impl Solid {
    /// Leaf solid for a non-composite shape.
    pub(crate) fn from_shape(shape: &Shape) -> Option<Self> {
        Some(match *shape {
            Shape::Sphere { radius } => Solid::Sphere { radius },
            Shape::Cuboid { size } => {
                let (hx, hy) = (size[0] / 2.0, size[1] / 2.0);
                Solid::Convex {
                    planes: vec![
                        ([1.0, 0.0, 0.0], hx),
                        ([-1.0, 0.0, 0.0], hx),
                        ([0.0, 1.0, 0.0], hy),
                        ([0.0, -1.0, 0.0], hy),
                        ([0.0, 0.0, -1.0], 0.0),
                        ([0.0, 0.0, 1.0], size[2]),
                    ],
                }
            }
            Shape::Prism {
                sides,
                circumradius,
                height,
            } => {
                let n = f64::from(sides);
                let apothem = circumradius * (std::f64::consts::PI / n).cos();
                let mut planes: Vec<(Vec3, f64)> = (0..sides)
                    .map(|k| {
                        let a = std::f64::consts::TAU * (f64::from(k) + 0.5) / n;
                        ([a.cos(), a.sin(), 0.0], apothem)
                    })
                    .collect();
                planes.push(([0.0, 0.0, -1.0], 0.0));
                planes.push(([0.0, 0.0, 1.0], height));
                Solid::Convex { planes }
            }
            Shape::Cylinder { radius, height } => Solid::Cylinder { radius, height },
            Shape::Cone { radius, height } => Solid::Cone { radius, height },
            Shape::Torus {
                major_radius,
                minor_radius,
            } => Solid::Torus {
                major: major_radius,
                minor: minor_radius,
            },
            Shape::WaveField {
                size,
                amplitude,
                wavelength,
                thickness,
            } => Solid::Wave {
                half: [size[0] / 2.0, size[1] / 2.0],
                amplitude,
                wavelength,
                depth: amplitude + thickness,
            },
            Shape::Composite { .. } => return None,
        })
    }

    /// Smallest `t >= t_min` with `o + t d` on the surface.
    pub(crate) fn intersect(&self, o: Vec3, d: Vec3, t_min: f64) -> Option<f64> {
        match self {
            Solid::Sphere { radius } => {
                let oc = [o[0], o[1], o[2] - radius];
                let a = dot(d, d);
                let b = dot(oc, d);
                let c = dot(oc, oc) - radius * radius;
                quadratic_roots(a, 2.0 * b, c)
                    .into_iter()
                    .flatten()
                    .find(|&t| t >= t_min)
            }
            Solid::Convex { planes } => convex_hit(planes, o, d, t_min),
            Solid::Cylinder { radius, height } => {
                let mut best = None;
                let a = d[0] * d[0] + d[1] * d[1];
                let b = 2.0 * (o[0] * d[0] + o[1] * d[1]);
                let c = o[0] * o[0] + o[1] * o[1] - radius * radius;
                for t in quadratic_roots(a, b, c).into_iter().flatten() {
                    let z = o[2] + t * d[2];
                    if t >= t_min && (0.0..=*height).contains(&z) {
                        best = min_opt(best, t);
                    }
                }
                for cap in [0.0, *height] {
                    if let Some(t) = disk_hit(o, d, cap, *radius, t_min) {
                        best = min_opt(best, t);
                    }
                }
                best
            }
            Solid::Cone { radius, height } => {
                let k2 = (radius / height).powi(2);
                let a = d[0] * d[0] + d[1] * d[1] - k2 * d[2] * d[2];
                let b = 2.0 * (o[0] * d[0] + o[1] * d[1] - k2 * o[2] * d[2]);
                let c = o[0] * o[0] + o[1] * o[1] - k2 * o[2] * o[2];
                let mut best = None;
                for t in quadratic_roots(a, b, c).into_iter().flatten() {
                    let z = o[2] + t * d[2];
                    if t >= t_min && (0.0..=*height).contains(&z) {
                        best = min_opt(best, t);
                    }
                }
                if let Some(t) = disk_hit(o, d, *height, *radius, t_min) {
                    best = min_opt(best, t);
                }
                best
            }
            Solid::Torus { major, minor } => {
                let ext = major + minor;
                let (t0, t1) = aabb_span([-ext, -ext, 0.0], [ext, ext, 2.0 * minor], o, d)?;
                let sdf = |p: Vec3| {
                    let q = (p[0] * p[0] + p[1] * p[1]).sqrt() - major;
                    let z = p[2] - minor;
                    (q * q + z * z).sqrt() - minor
                };
                let speed = dot(d, d).sqrt();
                march(t0.max(t_min), t1, |t| sdf(at(o, d, t)) / speed)
            }
            Solid::Wave {
                half,
                amplitude,
                wavelength,
                depth,
            } => {
                let (t0, t1) =
                    aabb_span([-half[0], -half[1], 0.0], [half[0], half[1], *depth], o, d)?;
                let slope = amplitude * std::f64::consts::PI / wavelength;
                let rate = d[2].abs() + slope * d[0].abs();
                // Signed gap to the corrugated top, negative while above it.
                let gap = |t: f64| {
                    let p = at(o, d, t);
                    let top = 0.5
                        * amplitude
                        * (1.0 - (std::f64::consts::TAU * p[0] / wavelength).cos());
                    p[2] - top
                };
                march(t0.max(t_min), t1, |t| -gap(t) / rate)
            }
        }
    }
}

/// Sphere tracing with a conservative step function (<= distance to the surface in `t`).
fn march(mut t: f64, t_end: f64, step: impl Fn(f64) -> f64) -> Option<f64> {
    for _ in 0..MARCH_MAX_STEPS {
        if t > t_end + MARCH_TOLERANCE {
            return None;
        }
        let s = step(t);
        if s <= MARCH_TOLERANCE {
            return Some(t);
        }
        t += s;
    }
    None
}

#[inline]
fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn at(o: Vec3, d: Vec3, t: f64) -> Vec3 {
    [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]]
}

fn min_opt(best: Option<f64>, t: f64) -> Option<f64> {
    Some(best.map_or(t, |b: f64| b.min(t)))
}

/// Real roots in ascending order, numerically stable form.
fn quadratic_roots(a: f64, b: f64, c: f64) -> [Option<f64>; 2] {
    if a.abs() < EPS {
        if b.abs() < EPS {
            return [None, None];
        }
        return [Some(-c / b), None];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return [None, None];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    [Some(r1.min(r2)), Some(r1.max(r2))]
}

fn disk_hit(o: Vec3, d: Vec3, z: f64, radius: f64, t_min: f64) -> Option<f64> {
    if d[2].abs() < EPS {
        return None;
    }
    let t = (z - o[2]) / d[2];
    let p = at(o, d, t);
    (t >= t_min && p[0] * p[0] + p[1] * p[1] <= radius * radius).then_some(t)
}

/// Entry into the intersection of half-spaces `n . p <= offset`.
fn convex_hit(planes: &[(Vec3, f64)], o: Vec3, d: Vec3, t_min: f64) -> Option<f64> {
    let (mut enter, mut exit) = (f64::NEG_INFINITY, f64::INFINITY);
    for &(n, offset) in planes {
        let denom = dot(n, d);
        let dist = offset - dot(n, o);
        if denom.abs() < EPS {
            if dist < 0.0 {
                return None;
            }
            continue;
        }
        let t = dist / denom;
        if denom < 0.0 {
            enter = enter.max(t);
        } else {
            exit = exit.min(t);
        }
    }
    (enter <= exit && exit >= t_min).then(|| enter.max(t_min))
}

fn aabb_span(lo: Vec3, hi: Vec3, o: Vec3, d: Vec3) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..3 {
        if d[i].abs() < EPS {
            if o[i] < lo[i] || o[i] > hi[i] {
                return None;
            }
            continue;
        }
        let (a, b) = ((lo[i] - o[i]) / d[i], (hi[i] - o[i]) / d[i]);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 <= t1).then_some((t0, t1))
}
