//! Serializable path expressions evaluable at any `t ∈ [0, 1]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    dist, dot, lerp, norm, normalize_slice, same_dim, stereo_inv_slice, stereo_proj,
    GeometryError, SpherePoint, JUNCTION_TOL, ZERO_TOL,
};
use crate::fibration::NumericLift;

/// Slack allowed on the parameter domain before `eval` rejects `t`.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("parameter t = {0} lies outside [0, 1]")]
    Domain(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("segment passes within {0:e} of the origin")]
    ThroughOrigin(f64),
    #[error("concatenation junction mismatch {0:e}")]
    Junction(f64),
    #[error("winding angle requested for a path that is not a planar circle path")]
    NotPlanar,
    #[error("newton refinement of a numeric lift failed at t = {0}")]
    Refinement(f64),
    #[error("malformed path: {0}")]
    Malformed(String),
}

/// How the angle of a circle-action lift advances with `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Sweep {
    /// Angle `delta · t`.
    Uniform { delta: f64 },
    /// Angle equal to the continuous winding of a unit-circle path, so the
    /// lift covers that path with its own parametrization.
    Follow { base: Box<PathExpr> },
}

impl Sweep {
    pub fn angle(&self, t: f64) -> Result<f64, PathError> {
        match self {
            Sweep::Uniform { delta } => Ok(delta * t),
            Sweep::Follow { base } => base.winding(t),
        }
    }
}

/// A path in some `R^k`, built from closed-form pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathExpr {
    Constant {
        point: Vec<f64>,
    },
    /// `t ↦ ((1−t)·from + t·to) / ‖(1−t)·from + t·to‖`.
    NormalizedSegment {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    /// `t ↦ q((1−t)·p(from) + t·p(to))` with `p` the stereographic chart
    /// from the north pole and `q` its inverse.
    StereoSegment {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    /// `left(2t)` on `[0, ½]`, `right(2t − 1)` on `[½, 1]`.
    Concat {
        left: Box<PathExpr>,
        right: Box<PathExpr>,
    },
    /// `t ↦ ρ_{angle(t)/degree}(start)` where `ρ_θ` multiplies the `j`-th
    /// complex coordinate by `e^{i·w_j·θ}`.
    CircleActionLift {
        weights: Vec<u32>,
        degree: u32,
        start: Vec<f64>,
        sweep: Sweep,
    },
    NumericLift(Box<NumericLift>),
}

impl PathExpr {
    pub fn constant(point: &[f64]) -> Self {
        PathExpr::Constant {
            point: point.to_vec(),
        }
    }

    /// Normalized straight segment. Both endpoints may be non-unit; the
    /// segment must stay away from the origin.
    pub fn normalized_segment(from: &[f64], to: &[f64]) -> Result<Self, PathError> {
        same_dim(from, to)?;
        let gap = segment_min_norm(from, to);
        if gap <= ZERO_TOL {
            return Err(PathError::ThroughOrigin(gap));
        }
        Ok(PathExpr::NormalizedSegment {
            from: from.to_vec(),
            to: to.to_vec(),
        })
    }

    pub fn stereo_segment(from: &SpherePoint, to: &SpherePoint) -> Result<Self, PathError> {
        same_dim(from.coords(), to.coords())?;
        stereo_proj(from)?;
        stereo_proj(to)?;
        Ok(PathExpr::StereoSegment {
            from: from.coords().to_vec(),
            to: to.coords().to_vec(),
        })
    }

    /// Concatenation; rejects a junction gap above [`JUNCTION_TOL`].
    pub fn concat(left: PathExpr, right: PathExpr) -> Result<Self, PathError> {
        let a = left.eval_unchecked(1.0)?;
        let b = right.eval_unchecked(0.0)?;
        same_dim(&a, &b)?;
        let gap = dist(&a, &b);
        if gap > JUNCTION_TOL {
            return Err(PathError::Junction(gap));
        }
        Ok(PathExpr::Concat {
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    /// Evaluates the path at `t`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, PathError> {
        if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&t) {
            return Err(PathError::Domain(t));
        }
        self.eval_unchecked(t.clamp(0.0, 1.0))
    }

    fn eval_unchecked(&self, t: f64) -> Result<Vec<f64>, PathError> {
        match self {
            PathExpr::Constant { point } => Ok(point.clone()),
            PathExpr::NormalizedSegment { from, to } => {
                Ok(normalize_slice(&lerp(from, to, t))?.coords().to_vec())
            }
            PathExpr::StereoSegment { from, to } => {
                let (ya, yb) = stereo_endpoints(from, to)?;
                Ok(stereo_inv_slice(&lerp(&ya, &yb, t)))
            }
            PathExpr::Concat { left, right } => {
                if t <= 0.5 {
                    left.eval_unchecked(2.0 * t)
                } else {
                    right.eval_unchecked(2.0 * t - 1.0)
                }
            }
            PathExpr::CircleActionLift {
                weights,
                degree,
                start,
                sweep,
            } => {
                let theta = sweep.angle(t)? / f64::from(*degree);
                Ok(circle_action(weights, start, theta))
            }
            PathExpr::NumericLift(lift) => lift.eval(t),
        }
    }

    pub fn start(&self) -> Result<Vec<f64>, PathError> {
        self.eval(0.0)
    }

    pub fn end(&self) -> Result<Vec<f64>, PathError> {
        self.eval(1.0)
    }

    /// Ambient dimension of the path's values.
    pub fn dim(&self) -> usize {
        match self {
            PathExpr::Constant { point } => point.len(),
            PathExpr::NormalizedSegment { from, .. } | PathExpr::StereoSegment { from, .. } => {
                from.len()
            }
            PathExpr::Concat { left, .. } => left.dim(),
            PathExpr::CircleActionLift { start, .. } => start.len(),
            PathExpr::NumericLift(lift) => lift.dim(),
        }
    }

    /// Continuous winding angle `arg γ(t) − arg γ(0)` of a path on the unit
    /// circle in `R^2`.
    pub fn winding(&self, t: f64) -> Result<f64, PathError> {
        if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&t) {
            return Err(PathError::Domain(t));
        }
        if self.dim() != 2 {
            return Err(PathError::NotPlanar);
        }
        self.winding_unchecked(t.clamp(0.0, 1.0))
    }

    fn winding_unchecked(&self, t: f64) -> Result<f64, PathError> {
        match self {
            PathExpr::Constant { .. } => Ok(0.0),
            PathExpr::NormalizedSegment { from, to } => {
                // The segment misses the origin, so the swept angle stays in (−π, π).
                let g = lerp(from, to, t);
                let cross = from[0] * g[1] - from[1] * g[0];
                Ok(cross.atan2(dot(from, &g)))
            }
            PathExpr::StereoSegment { from, to } => {
                // On S^1, q(y) sits at angle 2·atan(y) − π/2.
                let (ya, yb) = stereo_endpoints(from, to)?;
                let y = (1.0 - t) * ya[0] + t * yb[0];
                Ok(2.0 * (y.atan() - ya[0].atan()))
            }
            PathExpr::Concat { left, right } => {
                if t <= 0.5 {
                    left.winding_unchecked(2.0 * t)
                } else {
                    Ok(left.winding_unchecked(1.0)? + right.winding_unchecked(2.0 * t - 1.0)?)
                }
            }
            PathExpr::CircleActionLift { .. } | PathExpr::NumericLift(_) => {
                Err(PathError::NotPlanar)
            }
        }
    }

    /// Re-checks the construction invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<(), PathError> {
        match self {
            PathExpr::Constant { point } => {
                if point.is_empty() || point.iter().any(|c| !c.is_finite()) {
                    return Err(PathError::Malformed("constant point".into()));
                }
            }
            PathExpr::NormalizedSegment { from, to } => {
                Self::normalized_segment(from, to)?;
            }
            PathExpr::StereoSegment { from, to } => {
                Self::stereo_segment(
                    &SpherePoint::unit(from.clone())?,
                    &SpherePoint::unit(to.clone())?,
                )?;
            }
            PathExpr::Concat { left, right } => {
                left.validate()?;
                right.validate()?;
                Self::concat((**left).clone(), (**right).clone())?;
            }
            PathExpr::CircleActionLift {
                weights,
                degree,
                start,
                sweep,
            } => {
                if *degree == 0 || weights.contains(&0) {
                    return Err(PathError::Malformed("zero weight or degree".into()));
                }
                if start.len() != 2 * weights.len() {
                    return Err(PathError::Malformed("start dimension".into()));
                }
                if let Sweep::Follow { base } = sweep {
                    base.validate()?;
                    if base.dim() != 2 {
                        return Err(PathError::NotPlanar);
                    }
                }
            }
            PathExpr::NumericLift(lift) => lift.validate()?,
        }
        Ok(())
    }

    /// `samples` evaluations at `t_k = k / (samples − 1)`.
    pub fn sample(&self, samples: usize) -> Result<Vec<(f64, Vec<f64>)>, PathError> {
        let samples = samples.max(2);
        (0..samples)
            .map(|k| {
                let t = knot(k, samples);
                self.eval(t).map(|x| (t, x))
            })
            .collect()
    }

    /// CSV with header `t,x1,...,xk` and one row per sample.
    pub fn to_csv(&self, samples: usize) -> Result<String, PathError> {
        let rows = self.sample(samples)?;
        let mut out = String::from("t");
        for i in 1..=self.dim() {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, x) in rows {
            out.push_str(&format!("{t:?}"));
            for c in x {
                out.push(',');
                out.push_str(&format!("{c:?}"));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Uniform knot `k / (n − 1)`; shared by sampling and lift tables so knot
/// parameters compare exactly.
pub fn knot(k: usize, n: usize) -> f64 {
    if k + 1 == n {
        1.0
    } else {
        k as f64 / (n - 1) as f64
    }
}

fn stereo_endpoints(from: &[f64], to: &[f64]) -> Result<(Vec<f64>, Vec<f64>), PathError> {
    let a = stereo_proj(&SpherePoint::unit(from.to_vec())?)?;
    let b = stereo_proj(&SpherePoint::unit(to.to_vec())?)?;
    Ok((a.into_coords(), b.into_coords()))
}

/// Closed-form minimum over `t ∈ [0, 1]` of `‖(1−t)a + t·b‖`.
pub(crate) fn segment_min_norm(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let dd = dot(&d, &d);
    let t = if dd > 0.0 {
        (-dot(a, &d) / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(&lerp(a, b, t))
}

/// `ρ_θ(x)_j = e^{i·w_j·θ}·x_j` on realified complex coordinates.
pub(crate) fn circle_action(weights: &[u32], x: &[f64], theta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for (w, z) in weights.iter().zip(x.chunks_exact(2)) {
        let phase = (f64::from(*w) * theta).rem_euclid(2.0 * PI);
        let (s, c) = phase.sin_cos();
        out.push(c * z[0] - s * z[1]);
        out.push(s * z[0] + c * z[1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{normalize, tangent_odd, EuclidPoint};

    fn e(dim: usize, i: usize) -> Vec<f64> {
        EuclidPoint::basis(dim, i).into_coords()
    }

    #[test]
    fn constant_is_constant() {
        let p = PathExpr::constant(&[0.3, 0.4]);
        for t in [0.0, 0.25, 1.0] {
            assert_eq!(p.eval(t).unwrap(), vec![0.3, 0.4]);
        }
    }

    #[test]
    fn segment_midpoint_is_normalized_midpoint() {
        let p = PathExpr::normalized_segment(&e(3, 0), &e(3, 1)).unwrap();
        let mid = p.eval(0.5).unwrap();
        let expect = normalize(&EuclidPoint::new(vec![0.5, 0.5, 0.0]).unwrap()).unwrap();
        assert!(dist(&mid, expect.coords()) < 1e-15);
    }

    #[test]
    fn segment_through_origin_rejected() {
        let err = PathExpr::normalized_segment(&[1.0, 0.0], &[-1.0, 0.0]).unwrap_err();
        assert!(matches!(err, PathError::ThroughOrigin(_)));
        // endpoints fine but the chord passes near the origin
        let err = PathExpr::normalized_segment(&[1.0, 1e-14], &[-1.0, 1e-14]).unwrap_err();
        assert!(matches!(err, PathError::ThroughOrigin(_)));
    }

    #[test]
    fn segment_endpoints_are_normalized() {
        let p = PathExpr::normalized_segment(&[1.0, 0.0, 0.0], &[0.0, -0.5, 0.0]).unwrap();
        assert_eq!(p.end().unwrap(), vec![0.0, -1.0, 0.0]);
        assert_eq!(p.start().unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn concat_midpoint_is_left_end() {
        let a = PathExpr::normalized_segment(&e(2, 0), &e(2, 1)).unwrap();
        let b = PathExpr::normalized_segment(&e(2, 1), &[-1.0, 0.0]).unwrap();
        let c = PathExpr::concat(a.clone(), b).unwrap();
        assert_eq!(c.eval(0.5).unwrap(), a.eval(1.0).unwrap());
        assert_eq!(c.eval(0.25).unwrap(), a.eval(0.5).unwrap());
    }

    #[test]
    fn concat_rejects_gap() {
        let a = PathExpr::constant(&[1.0, 0.0]);
        let b = PathExpr::constant(&[1.0, 1e-6]);
        assert!(matches!(
            PathExpr::concat(a, b),
            Err(PathError::Junction(_))
        ));
    }

    #[test]
    fn domain_checked() {
        let p = PathExpr::constant(&[1.0]);
        assert!(p.eval(1.0 + 1e-13).is_ok());
        assert_eq!(p.eval(1.01), Err(PathError::Domain(1.01)));
        assert_eq!(p.eval(-0.5), Err(PathError::Domain(-0.5)));
        assert!(p.eval(f64::NAN).is_err());
    }

    #[test]
    fn stereo_segment_through_south_pole() {
        let a = SpherePoint::basis(3, 0);
        let b = a.antipode();
        let p = PathExpr::stereo_segment(&a, &b).unwrap();
        let mid = p.eval(0.5).unwrap();
        assert!(dist(&mid, &[0.0, 0.0, -1.0]) < 1e-15);
        assert!(PathExpr::stereo_segment(&a, &SpherePoint::north_pole(3)).is_err());
    }

    #[test]
    fn winding_of_quarter_arc_and_loop() {
        let q = PathExpr::normalized_segment(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((q.winding(1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        let v = tangent_odd(&SpherePoint::unit(vec![-1.0, 0.0]).unwrap()).unwrap();
        let h1 = PathExpr::normalized_segment(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let h2 = PathExpr::normalized_segment(&[0.0, 1.0], &[-1.0, 0.0]).unwrap();
        let h3 = PathExpr::normalized_segment(&[-1.0, 0.0], v.coords()).unwrap();
        let h4 = PathExpr::normalized_segment(v.coords(), &[1.0, 0.0]).unwrap();
        let lp = PathExpr::concat(
            PathExpr::concat(h1, h2).unwrap(),
            PathExpr::concat(h3, h4).unwrap(),
        )
        .unwrap();
        assert!((lp.winding(1.0).unwrap() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn winding_matches_atan2_on_stereo_arc() {
        let a = SpherePoint::unit(vec![0.6, -0.8]).unwrap();
        let b = SpherePoint::unit(vec![-0.8, 0.6]).unwrap();
        let p = PathExpr::stereo_segment(&a, &b).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let x = p.eval(t).unwrap();
            let w = p.winding(t).unwrap();
            let rotated = [
                w.cos() * a.coords()[0] - w.sin() * a.coords()[1],
                w.sin() * a.coords()[0] + w.cos() * a.coords()[1],
            ];
            assert!(dist(&rotated, &x) < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn json_round_trip_and_csv() {
        let a = PathExpr::normalized_segment(&e(2, 0), &e(2, 1)).unwrap();
        let c = PathExpr::concat(a.clone(), PathExpr::constant(&e(2, 1))).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"kind\":\"concat\""));
        let back: PathExpr = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back, c);

        let csv = a.to_csv(3).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x1,x2");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("1.0,"));
    }
}
