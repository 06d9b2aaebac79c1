//! Real-vector and sphere primitives.
//!
//! Points are plain coordinate vectors wrapped in two newtypes: [`EuclidPoint`]
//! for ambient vectors in `R^k` and [`SpherePoint`] for points on a round
//! sphere centred at the origin. The two stereographic charts from the north
//! pole and the two tangent fields used by the sphere planners live here too.

pub(crate) mod path;

pub use path::{knot, PathError, PathExpr, Sweep};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation of a sphere point's norm from its radius.
pub const NORM_TOL: f64 = 1e-9;
/// Vectors shorter than this cannot be normalized.
pub const ZERO_TOL: f64 = 1e-12;
/// Minimum gap `1 - x_{m+1}` for the stereographic chart.
pub const POLE_MARGIN: f64 = 1e-9;
/// Maximum mismatch between the end of one concatenated path and the start of the next.
pub const JUNCTION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has no coordinates")]
    Empty,
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("vector norm {0:e} is below the zero tolerance")]
    ZeroVector(f64),
    #[error("norm {norm} deviates from radius {radius} by more than the tolerance")]
    OffSphere { norm: f64, radius: f64 },
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("point is within the pole margin of the north pole")]
    AtPole,
    #[error("tangent field v needs an even ambient dimension, got {0}")]
    OddAmbientDim(usize),
    #[error("tangent field nu needs an odd ambient dimension, got {0}")]
    EvenAmbientDim(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A point of `R^k`, `k >= 1`, with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EuclidPoint(Vec<f64>);

impl EuclidPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::Empty);
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        Ok(Self(coords))
    }

    /// The `i`-th standard basis vector of `R^dim` (zero-based).
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl TryFrom<Vec<f64>> for EuclidPoint {
    type Error = GeometryError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<EuclidPoint> for Vec<f64> {
    fn from(p: EuclidPoint) -> Self {
        p.0
    }
}

impl From<SpherePoint> for EuclidPoint {
    fn from(p: SpherePoint) -> Self {
        Self(p.coords)
    }
}

/// A point on the sphere of the given radius in `R^{m+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coords: Vec<f64>,
    radius: f64,
}

impl SpherePoint {
    /// Checks `| ‖coords‖ − radius | ≤ NORM_TOL`.
    pub fn new(coords: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::BadRadius(radius));
        }
        let p = EuclidPoint::new(coords)?;
        let n = p.norm();
        if (n - radius).abs() > NORM_TOL {
            return Err(GeometryError::OffSphere { norm: n, radius });
        }
        Ok(Self {
            coords: p.0,
            radius,
        })
    }

    pub fn unit(coords: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(coords, 1.0)
    }

    /// North pole `(0, …, 0, 1)` of the unit sphere in `R^{dim}`.
    pub fn north_pole(ambient_dim: usize) -> Self {
        let mut v = vec![0.0; ambient_dim];
        v[ambient_dim - 1] = 1.0;
        Self {
            coords: v,
            radius: 1.0,
        }
    }

    pub fn south_pole(ambient_dim: usize) -> Self {
        let mut v = vec![0.0; ambient_dim];
        v[ambient_dim - 1] = -1.0;
        Self {
            coords: v,
            radius: 1.0,
        }
    }

    pub fn basis(ambient_dim: usize, i: usize) -> Self {
        Self {
            coords: EuclidPoint::basis(ambient_dim, i).0,
            radius: 1.0,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Ambient dimension `m + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    /// Sphere dimension `m`.
    pub fn sphere_dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// The antipodal point.
    pub fn antipode(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
            radius: self.radius,
        }
    }

    /// Rescales onto the sphere of another radius.
    pub fn rescaled(&self, radius: f64) -> Self {
        let s = radius / self.radius;
        Self {
            coords: self.coords.iter().map(|c| c * s).collect(),
            radius,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `(1 − t)·a + t·b`
pub(crate) fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
}

fn check_dim(expected: usize, got: usize) -> Result<(), GeometryError> {
    if expected != got {
        return Err(GeometryError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Radial projection `v / ‖v‖` onto the unit sphere.
pub fn normalize(v: &EuclidPoint) -> Result<SpherePoint, GeometryError> {
    normalize_slice(v.coords())
}

pub(crate) fn normalize_slice(v: &[f64]) -> Result<SpherePoint, GeometryError> {
    let n = norm(v);
    if n <= ZERO_TOL || !n.is_finite() {
        return Err(GeometryError::ZeroVector(n));
    }
    Ok(SpherePoint {
        coords: v.iter().map(|c| c / n).collect(),
        radius: 1.0,
    })
}

/// Stereographic projection from the north pole `p_N`.
///
/// `S^m ∖ {p_N} → R^m`, `x ↦ (x_1, …, x_m) / (1 − x_{m+1})`.
pub fn stereo_proj(x: &SpherePoint) -> Result<EuclidPoint, GeometryError> {
    let c = x.coords();
    if c.len() < 2 {
        return Err(GeometryError::DimensionMismatch {
            expected: 2,
            got: c.len(),
        });
    }
    let last = c[c.len() - 1] / x.radius();
    let gap = 1.0 - last;
    if gap < POLE_MARGIN {
        return Err(GeometryError::AtPole);
    }
    let s = 1.0 / (x.radius() * gap);
    Ok(EuclidPoint(c[..c.len() - 1].iter().map(|v| v * s).collect()))
}

/// Inverse stereographic chart `R^m → S^m ∖ {p_N}`.
pub fn stereo_inv(y: &EuclidPoint) -> SpherePoint {
    SpherePoint {
        coords: stereo_inv_slice(y.coords()),
        radius: 1.0,
    }
}

pub(crate) fn stereo_inv_slice(y: &[f64]) -> Vec<f64> {
    let r2 = dot(y, y);
    let denom = r2 + 1.0;
    let mut out: Vec<f64> = y.iter().map(|v| 2.0 * v / denom).collect();
    out.push((r2 - 1.0) / denom);
    out
}

/// Unit tangent field on odd spheres: `(x_1, y_1, …) ↦ (−y_1, x_1, …)`.
pub fn tangent_odd(x: &SpherePoint) -> Result<EuclidPoint, GeometryError> {
    tangent_odd_slice(x.coords()).map(EuclidPoint)
}

pub(crate) fn tangent_odd_slice(x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    if !x.len().is_multiple_of(2) {
        return Err(GeometryError::OddAmbientDim(x.len()));
    }
    let mut v = Vec::with_capacity(x.len());
    for pair in x.chunks_exact(2) {
        v.push(-pair[1]);
        v.push(pair[0]);
    }
    Ok(v)
}

/// Tangent field on even spheres vanishing exactly at `±e_1`:
/// `(x_1, x_2, x_3, …) ↦ (0, −x_3, x_2, …, −x_{m+1}, x_m)`.
pub fn tangent_even(x: &SpherePoint) -> Result<EuclidPoint, GeometryError> {
    tangent_even_slice(x.coords()).map(EuclidPoint)
}

pub(crate) fn tangent_even_slice(x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    if x.len() % 2 != 1 {
        return Err(GeometryError::EvenAmbientDim(x.len()));
    }
    let mut v = Vec::with_capacity(x.len());
    v.push(0.0);
    for pair in x[1..].chunks_exact(2) {
        v.push(-pair[1]);
        v.push(pair[0]);
    }
    Ok(v)
}

/// Checks that two points share an ambient dimension.
pub(crate) fn same_dim(a: &[f64], b: &[f64]) -> Result<(), GeometryError> {
    check_dim(a.len(), b.len())
}
