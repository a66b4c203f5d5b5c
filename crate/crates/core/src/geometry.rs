//! Disk geometry: uniform node drops and the conditional distance laws used by
//! the interference analysis.
//!
//! Two densities matter. [`pdf_link_distance`] is the law of the distance from
//! a point at radius `q` to a uniform point of the disk; it has a polynomial
//! branch on `[0, R-q]` and an arccos branch on `(R-q, R+q]`.
//! [`pdf_interferer_distance`] is the law of the distance between two points at
//! radii `v` and `t` with independent uniform angles. The latter has
//! inverse-square-root spikes at both ends of its support; integrate it in the
//! angle variable `φ` with `w² = v² + t² - 2vt·cos φ`, where it is simply
//! `dφ/π`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Disk `b(o, R)` that hosts the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskConfig {
    radius: f64,
}

impl DiskConfig {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(
                "radius",
                format!("{radius} is not a positive finite number"),
            ));
        }
        Ok(DiskConfig { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn scaled(&self, factor: f64) -> Point2D {
        Point2D::new(self.x * factor, self.y * factor)
    }
}

/// Uniform point on the disk (`r = R·√u`, uniform angle).
pub fn sample_uniform_disk<R: Rng + ?Sized>(cfg: &DiskConfig, rng: &mut R) -> Point2D {
    let r = cfg.radius * rng.random::<f64>().sqrt();
    let angle = 2.0 * PI * rng.random::<f64>();
    let (s, c) = angle.sin_cos();
    Point2D::new(r * c, r * s)
}

/// Polynomial branch `2z/R²`, valid on `[0, R-q]`.
#[inline]
pub(crate) fn link_branch_inner(z: f64, radius: f64) -> f64 {
    2.0 * z / (radius * radius)
}

/// Arccos branch, valid on `(R-q, R+q]`. Requires `q > 0` and `z > 0`.
#[inline]
pub(crate) fn link_branch_outer(z: f64, q: f64, radius: f64) -> f64 {
    let c = ((z * z + q * q - radius * radius) / (2.0 * q * z)).clamp(-1.0, 1.0);
    2.0 * z / (PI * radius * radius) * c.acos()
}

/// Density of the distance `z` from a point at radius `q` to a uniform point
/// of the disk.
pub fn pdf_link_distance(z: f64, q: f64, cfg: &DiskConfig) -> Result<f64> {
    let r = cfg.radius;
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::invalid("z", format!("{z} must be nonnegative")));
    }
    if !(q >= 0.0 && q <= r) {
        return Err(Error::invalid("q", format!("{q} must lie in [0, {r}]")));
    }
    Ok(if z <= r - q {
        link_branch_inner(z, r)
    } else if z <= r + q {
        link_branch_outer(z, q, r)
    } else {
        0.0
    })
}

/// Density of the distance `w` between points at radii `v` and `t` whose
/// angles are independent and uniform. Zero outside `(|v-t|, v+t)`.
pub fn pdf_interferer_distance(w: f64, v: f64, t: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid("v", format!("{v} must be positive")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("{t} must be positive")));
    }
    if !(w >= 0.0) {
        return Err(Error::invalid("w", format!("{w} must be nonnegative")));
    }
    if w <= (v - t).abs() || w >= v + t {
        return Ok(0.0);
    }
    let c = ((v * v + t * t - w * w) / (2.0 * v * t)).clamp(-1.0, 1.0);
    Ok((w / (v * t)) / (PI * (1.0 - c * c).sqrt()))
}

/// `w` as a function of the angle between the two points.
#[inline]
pub fn interferer_distance_at_angle(v: f64, t: f64, phi: f64) -> f64 {
    (v * v + t * t - 2.0 * v * t * phi.cos()).max(0.0).sqrt()
}

/// Draws `w` with density [`pdf_interferer_distance`].
pub fn sample_interferer_distance<R: Rng + ?Sized>(v: f64, t: f64, rng: &mut R) -> Result<f64> {
    if !(v > 0.0 && t > 0.0) {
        return Err(Error::invalid(
            "v, t",
            format!("radii ({v}, {t}) must be positive"),
        ));
    }
    let phi = PI * rng.random::<f64>();
    Ok(interferer_distance_at_angle(v, t, phi))
}
