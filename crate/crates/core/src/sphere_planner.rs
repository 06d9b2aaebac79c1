//! Optimal motion planners on spheres.
//!
//! For odd `m` the planner has two regions: pairs that are not antipodal use
//! the normalized straight segment, pairs that are distinct detour through
//! `−θ₂` and then around a unit tangent field. For even `m` there are three:
//! the stereographic chart away from the north pole, the normalized segment,
//! and the detour through the tangent field `ν` that vanishes only at `±e₁`.
//!
//! Regions are open sets; membership here is tested with a margin `δ`, so a
//! pair counts as inside a region only when it is at least `δ` away from that
//! region's excluded set. Dispatch picks the smallest region index whose
//! membership holds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    add, norm, sub, tangent_even_slice, tangent_odd_slice, GeometryError, PathError, PathExpr,
    SpherePoint, NORM_TOL,
};

pub const DEFAULT_MARGIN: f64 = 0.05;
pub const MAX_MARGIN: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("margin {0} outside (0, {MAX_MARGIN}]")]
    BadMargin(f64),
    #[error("sphere dimension must be at least 1")]
    BadDimension,
    #[error("pair is antipodal within the margin")]
    AntipodalPair,
    #[error("pair is equal within the margin")]
    EqualPair,
    #[error("point lies within the margin of the north pole")]
    AtPole,
    #[error("goal lies within the margin of a zero of the tangent field")]
    PoleOfField,
    #[error("no region covers the query pair")]
    Uncovered,
    #[error("region {0:?} is not available on this sphere")]
    WrongParity(RegionKind),
    #[error("a single region cannot cover a sphere: its motion planner would contract it")]
    SingleRegion,
    #[error("points must lie on the unit sphere S^{expected}")]
    NotOnSphere { expected: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// The open sets of the sphere planners, named by what they exclude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// `θ₁ ≠ −θ₂`; normalized segment.
    NonAntipodal,
    /// `θ₁ ≠ θ₂` on odd spheres; detour through `−θ₂` and the unit field `v`.
    DistinctOdd,
    /// Both points off the north pole; stereographic segment.
    OffNorthPole,
    /// `θ₁ ≠ θ₂` and `θ₂ ∉ {±e₁}` on even spheres; detour through `−θ₂` and `ν`.
    DistinctEven,
}

impl RegionKind {
    fn fits(self, m: usize) -> bool {
        match self {
            RegionKind::NonAntipodal => true,
            RegionKind::DistinctOdd => m % 2 == 1,
            RegionKind::OffNorthPole | RegionKind::DistinctEven => m.is_multiple_of(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    /// One-based position in the planner.
    pub index: usize,
    pub kind: RegionKind,
}

impl Region {
    /// Margin membership of the pair.
    pub fn contains(&self, a: &[f64], b: &[f64], margin: f64) -> bool {
        contains(self.kind, a, b, margin)
    }

    /// The local algorithm of this region.
    pub fn algorithm(
        &self,
        a: &SpherePoint,
        b: &SpherePoint,
        margin: f64,
    ) -> Result<PathExpr, PlanError> {
        match self.kind {
            RegionKind::NonAntipodal => s1(a, b, margin),
            RegionKind::DistinctOdd => s2(a, b, margin),
            RegionKind::OffNorthPole => kappa1(a, b, margin),
            RegionKind::DistinctEven => kappa3(a, b, margin),
        }
    }
}

pub(crate) fn contains(kind: RegionKind, a: &[f64], b: &[f64], margin: f64) -> bool {
    match kind {
        RegionKind::NonAntipodal => norm(&add(a, b)) >= margin,
        RegionKind::DistinctOdd => norm(&sub(a, b)) >= margin,
        RegionKind::OffNorthPole => {
            a[a.len() - 1] <= 1.0 - margin && b[b.len() - 1] <= 1.0 - margin
        }
        RegionKind::DistinctEven => norm(&sub(a, b)) >= margin && clear_of_e1(b, margin),
    }
}

fn clear_of_e1(b: &[f64], margin: f64) -> bool {
    let mut plus = b.to_vec();
    plus[0] -= 1.0;
    let mut minus = b.to_vec();
    minus[0] += 1.0;
    norm(&plus) >= margin && norm(&minus) >= margin
}

/// A motion planner on the unit sphere `S^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePlanner {
    dim: usize,
    margin: f64,
    regions: Vec<Region>,
}

/// Builds the optimal planner on `S^m`: two regions for odd `m`, three for even.
pub fn build_planner(m: usize, margin: f64) -> Result<SpherePlanner, PlanError> {
    let kinds: &[RegionKind] = if m % 2 == 1 {
        &[RegionKind::NonAntipodal, RegionKind::DistinctOdd]
    } else {
        &[
            RegionKind::OffNorthPole,
            RegionKind::NonAntipodal,
            RegionKind::DistinctEven,
        ]
    };
    SpherePlanner::from_kinds(m, margin, kinds)
}

impl SpherePlanner {
    /// A planner from an explicit region list, in dispatch order.
    ///
    /// Rejects a single region: one continuous planner on all of `S^m × S^m`
    /// would make the sphere contractible.
    pub fn from_kinds(m: usize, margin: f64, kinds: &[RegionKind]) -> Result<Self, PlanError> {
        if m == 0 {
            return Err(PlanError::BadDimension);
        }
        if !(margin > 0.0 && margin <= MAX_MARGIN) {
            return Err(PlanError::BadMargin(margin));
        }
        if kinds.len() < 2 {
            return Err(PlanError::SingleRegion);
        }
        if let Some(k) = kinds.iter().find(|k| !k.fits(m)) {
            return Err(PlanError::WrongParity(*k));
        }
        let regions = kinds
            .iter()
            .enumerate()
            .map(|(i, kind)| Region {
                index: i + 1,
                kind: *kind,
            })
            .collect();
        Ok(Self {
            dim: m,
            margin,
            regions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Smallest region index whose membership holds, if any.
    pub fn dispatch(&self, a: &[f64], b: &[f64]) -> Option<&Region> {
        self.regions
            .iter()
            .find(|r| r.contains(a, b, self.margin))
    }

    /// Plans a path from `a` to `b`; returns the region index used.
    pub fn plan(&self, a: &SpherePoint, b: &SpherePoint) -> Result<(usize, PathExpr), PlanError> {
        self.check_point(a)?;
        self.check_point(b)?;
        let region = self
            .dispatch(a.coords(), b.coords())
            .ok_or(PlanError::Uncovered)?;
        let path = region.algorithm(a, b, self.margin)?;
        Ok((region.index, path))
    }

    pub(crate) fn check_point(&self, p: &SpherePoint) -> Result<(), PlanError> {
        if p.ambient_dim() != self.dim + 1 || (p.radius() - 1.0).abs() > NORM_TOL {
            return Err(PlanError::NotOnSphere { expected: self.dim });
        }
        Ok(())
    }
}

fn check_pair(a: &SpherePoint, b: &SpherePoint) -> Result<(), PlanError> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.ambient_dim(),
            got: b.ambient_dim(),
        }
        .into());
    }
    Ok(())
}

/// Normalized straight segment from `a` to `b`; needs `‖a + b‖ ≥ margin`.
pub fn s1(a: &SpherePoint, b: &SpherePoint, margin: f64) -> Result<PathExpr, PlanError> {
    check_pair(a, b)?;
    if norm(&add(a.coords(), b.coords())) < margin {
        return Err(PlanError::AntipodalPair);
    }
    Ok(PathExpr::normalized_segment(a.coords(), b.coords())?)
}

/// Odd spheres: `s1(a, −b)` followed by `−b → v(−b) → b`.
pub fn s2(a: &SpherePoint, b: &SpherePoint, margin: f64) -> Result<PathExpr, PlanError> {
    check_pair(a, b)?;
    if norm(&sub(a.coords(), b.coords())) < margin {
        return Err(PlanError::EqualPair);
    }
    let minus_b = b.antipode();
    let first = PathExpr::normalized_segment(a.coords(), minus_b.coords())?;
    let v = tangent_odd_slice(minus_b.coords())?;
    let detour = PathExpr::concat(
        PathExpr::normalized_segment(minus_b.coords(), &v)?,
        PathExpr::normalized_segment(&v, b.coords())?,
    )?;
    Ok(PathExpr::concat(first, detour)?)
}

/// Even spheres: stereographic segment; both points must satisfy
/// `x_{m+1} ≤ 1 − margin`.
pub fn kappa1(a: &SpherePoint, b: &SpherePoint, margin: f64) -> Result<PathExpr, PlanError> {
    check_pair(a, b)?;
    let off = |p: &SpherePoint| p.coords()[p.ambient_dim() - 1] <= 1.0 - margin;
    if !(off(a) && off(b)) {
        return Err(PlanError::AtPole);
    }
    Ok(PathExpr::stereo_segment(a, b)?)
}

/// Same formula as [`s1`].
pub fn kappa2(a: &SpherePoint, b: &SpherePoint, margin: f64) -> Result<PathExpr, PlanError> {
    s1(a, b, margin)
}

/// Even spheres: `κ₂(a, −b)` followed by `−b → ν(−b) → b`, with `ν(−b)`
/// left unnormalized as a segment endpoint.
pub fn kappa3(a: &SpherePoint, b: &SpherePoint, margin: f64) -> Result<PathExpr, PlanError> {
    check_pair(a, b)?;
    if norm(&sub(a.coords(), b.coords())) < margin {
        return Err(PlanError::EqualPair);
    }
    if !clear_of_e1(b.coords(), margin) {
        return Err(PlanError::PoleOfField);
    }
    let minus_b = b.antipode();
    let first = PathExpr::normalized_segment(a.coords(), minus_b.coords())?;
    let nu = tangent_even_slice(minus_b.coords())?;
    let detour = PathExpr::concat(
        PathExpr::normalized_segment(minus_b.coords(), &nu)?,
        PathExpr::normalized_segment(&nu, b.coords())?,
    )?;
    Ok(PathExpr::concat(first, detour)?)
}
