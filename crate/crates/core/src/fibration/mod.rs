//! Work maps, homotopy-lifting oracles, and pulled-back tasking planners.
//!
//! A tasking planner for `f: E → S^{p−1}_η` is built from a sphere planner on
//! `S^{p−1}`: a query `(e, w)` falls in region `i` when the base pair
//! `(f(e)/‖f(e)‖, w/η)` does, and its path is the lift through `e` of the
//! base path scaled to radius `η`.

mod continuation;

pub use continuation::{ContinuationParams, NumericLift};

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist, norm, scale, PathError, PathExpr, SpherePoint, Sweep};
use crate::milnor::{Germ, MilnorError};
use crate::sphere_planner::{PlanError, Region, SpherePlanner};

/// Residual bound of the closed-form circle-action oracle.
pub const EXACT_LIFT_TOL: f64 = 1e-12;
/// Residual bound of the continuation oracle.
pub const NUMERIC_LIFT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("lift failed at t = {t}: {reason}")]
    LiftFailure { t: f64, reason: String },
    #[error("start does not lie over the base path: |f(e) - gamma(0)| = {gap:e} > {tol:e}")]
    StartOffBase { gap: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("goal is not on the base sphere of radius {eta}: |w| = {norm}")]
    GoalOffBase { norm: f64, eta: f64 },
    #[error("point is off the tube: | |f(x)| - eta | = {gap:e} > {tol:e}")]
    OffTube { gap: f64, tol: f64 },
    #[error("start maps to zero; it has no base point")]
    StartAtZero,
    #[error("oracle does not apply: {0}")]
    Oracle(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Milnor(#[from] MilnorError),
}

/// The concrete map behind a [`WorkMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    Germ(Germ),
    /// `(z, w) ↦ (2·Re(z·w̄), 2·Im(z·w̄), |z|² − |w|²)` on `R⁴`.
    Hopf,
    /// Two revolute joints: `(α, β) ↦ (cos α cos β, cos α sin β, sin α)`.
    RrArm,
}

/// A map `f: R^n → R^p` whose effective codomain is the sphere of radius
/// `base_radius`, optionally restricted to the closed ball of radius
/// `ball_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkMap {
    pub kind: MapKind,
    pub base_radius: f64,
    pub ball_radius: Option<f64>,
}

impl WorkMap {
    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::Germ(g) => g.name.clone(),
            MapKind::Hopf => "hopf".to_string(),
            MapKind::RrArm => "rr-arm".to_string(),
        }
    }

    pub fn domain_dim(&self) -> usize {
        match &self.kind {
            MapKind::Germ(g) => g.real_dim(),
            MapKind::Hopf => 4,
            MapKind::RrArm => 2,
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match &self.kind {
            MapKind::Germ(_) => 2,
            MapKind::Hopf | MapKind::RrArm => 3,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Germ(g) => g.eval(x).to_vec(),
            MapKind::Hopf => {
                let [x1, y1, x2, y2] = [x[0], x[1], x[2], x[3]];
                vec![
                    2.0 * (x1 * x2 + y1 * y2),
                    2.0 * (y1 * x2 - x1 * y2),
                    x1 * x1 + y1 * y1 - x2 * x2 - y2 * y2,
                ]
            }
            MapKind::RrArm => {
                let (sa, ca) = x[0].sin_cos();
                let (sb, cb) = x[1].sin_cos();
                vec![ca * cb, ca * sb, sa]
            }
        }
    }

    /// Analytic `p×n` Jacobian.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            MapKind::Germ(g) => g.jacobian(x),
            MapKind::Hopf => {
                let [x1, y1, x2, y2] = [x[0], x[1], x[2], x[3]];
                DMatrix::from_row_slice(
                    3,
                    4,
                    &[
                        2.0 * x2, 2.0 * y2, 2.0 * x1, 2.0 * y1,
                        -2.0 * y2, 2.0 * x2, 2.0 * y1, -2.0 * x1,
                        2.0 * x1, 2.0 * y1, -2.0 * x2, -2.0 * y2,
                    ],
                )
            }
            MapKind::RrArm => {
                let (sa, ca) = x[0].sin_cos();
                let (sb, cb) = x[1].sin_cos();
                DMatrix::from_row_slice(3, 2, &[-sa * cb, -ca * sb, -sa * sb, ca * cb, ca, 0.0])
            }
        }
    }

    /// Moves `x` exactly onto `‖f‖ = η` along the positive-real action,
    /// provided it is already within `tol` of it.
    pub fn snap_to_tube(&self, x: &[f64], tol: f64) -> Result<Vec<f64>, LiftError> {
        if x.len() != self.domain_dim() {
            return Err(LiftError::Dimension {
                expected: self.domain_dim(),
                got: x.len(),
            });
        }
        let eta = self.base_radius;
        let n = norm(&self.eval(x));
        let gap = (n - eta).abs();
        if gap > tol || !gap.is_finite() {
            return Err(LiftError::OffTube { gap, tol });
        }
        if n == 0.0 {
            return Err(LiftError::StartAtZero);
        }
        let y = match &self.kind {
            MapKind::Germ(g) => g.radial_act(x, (eta / n).powf(1.0 / g.degree as f64)),
            MapKind::Hopf => scale(x, (eta / n).sqrt()),
            MapKind::RrArm => x.to_vec(),
        };
        if let Some(eps) = self.ball_radius {
            if norm(&y) > eps {
                return Err(LiftError::OffTube { gap, tol });
            }
        }
        Ok(y)
    }

    /// A random point of the total space `E`.
    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, MilnorError> {
        match &self.kind {
            MapKind::Germ(g) => g.random_tube_point(rng),
            MapKind::Hopf => {
                // ‖f(x)‖ = ‖x‖², so E is the sphere of radius √η
                let v: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
                Ok(scale(&v, self.base_radius.sqrt() / norm(&v)))
            }
            MapKind::RrArm => Ok(vec![
                rng.random_range(-FRAC_PI_2..FRAC_PI_2),
                rng.random_range(-PI..PI),
            ]),
        }
    }
}

/// The two-joint arm of the torus over the unit sphere. It is not a
/// fibration: the Jacobian drops rank where `cos α = 0`, over the poles.
pub fn rr_arm_workmap() -> WorkMap {
    WorkMap {
        kind: MapKind::RrArm,
        base_radius: 1.0,
        ball_radius: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiftingOracle {
    /// Closed-form lift by the circle action of a weighted-homogeneous germ.
    ExactCircleAction,
    NumericContinuation(ContinuationParams),
}

impl LiftingOracle {
    pub fn numeric() -> Self {
        LiftingOracle::NumericContinuation(ContinuationParams::default())
    }

    /// Exact for germs, numeric otherwise.
    pub fn for_map(map: &WorkMap) -> Self {
        match map.kind {
            MapKind::Germ(_) => LiftingOracle::ExactCircleAction,
            _ => Self::numeric(),
        }
    }

    pub fn lift_tol(&self) -> f64 {
        match self {
            LiftingOracle::ExactCircleAction => EXACT_LIFT_TOL,
            LiftingOracle::NumericContinuation(_) => NUMERIC_LIFT_TOL,
        }
    }

    fn check_map(&self, map: &WorkMap) -> Result<(), LiftError> {
        if let LiftingOracle::ExactCircleAction = self {
            if !matches!(map.kind, MapKind::Germ(_)) {
                return Err(LiftError::Oracle(format!(
                    "the circle-action oracle needs a weighted-homogeneous germ, not {}",
                    map.name()
                )));
            }
        }
        Ok(())
    }
}

/// Lifts `η·γ` through `e`, where `γ` is a path on the unit sphere of the
/// codomain and `η` is the base radius of `map`.
pub fn lift(
    oracle: &LiftingOracle,
    map: &WorkMap,
    e: &[f64],
    base: &PathExpr,
) -> Result<PathExpr, LiftError> {
    oracle.check_map(map)?;
    if e.len() != map.domain_dim() {
        return Err(LiftError::Dimension {
            expected: map.domain_dim(),
            got: e.len(),
        });
    }
    if base.dim() != map.codomain_dim() {
        return Err(LiftError::Dimension {
            expected: map.codomain_dim(),
            got: base.dim(),
        });
    }
    let tol = 10.0 * oracle.lift_tol();
    let gap = dist(&map.eval(e), &scale(&base.start()?, map.base_radius));
    if gap > tol {
        return Err(LiftError::StartOffBase { gap, tol });
    }
    match oracle {
        LiftingOracle::ExactCircleAction => {
            if let PathExpr::Constant { .. } = base {
                return Ok(PathExpr::constant(e));
            }
            let MapKind::Germ(g) = &map.kind else {
                unreachable!("checked by check_map")
            };
            base.winding(1.0)?;
            Ok(PathExpr::CircleActionLift {
                weights: g.weights.clone(),
                degree: g.degree,
                start: e.to_vec(),
                sweep: Sweep::Follow {
                    base: Box::new(base.clone()),
                },
            })
        }
        LiftingOracle::NumericContinuation(p) => Ok(PathExpr::NumericLift(Box::new(
            continuation::track(map, e, base, p)?,
        ))),
    }
}

/// A sphere planner pulled back along a work map.
#[derive(Debug, Clone)]
pub struct TaskingPlanner {
    map: WorkMap,
    base: SpherePlanner,
    oracle: LiftingOracle,
}

pub fn pullback_planner(
    map: WorkMap,
    base: SpherePlanner,
    oracle: LiftingOracle,
) -> Result<TaskingPlanner, LiftError> {
    if base.dim() + 1 != map.codomain_dim() {
        return Err(LiftError::Dimension {
            expected: map.codomain_dim(),
            got: base.dim() + 1,
        });
    }
    oracle.check_map(&map)?;
    Ok(TaskingPlanner { map, base, oracle })
}

impl TaskingPlanner {
    pub fn map(&self) -> &WorkMap {
        &self.map
    }

    pub fn base(&self) -> &SpherePlanner {
        &self.base
    }

    pub fn oracle(&self) -> &LiftingOracle {
        &self.oracle
    }

    pub fn regions(&self) -> &[Region] {
        self.base.regions()
    }

    pub fn region_count(&self) -> usize {
        self.base.region_count()
    }

    /// Unit-sphere images of a query.
    pub fn base_pair(&self, e: &[f64], w: &[f64]) -> Result<(SpherePoint, SpherePoint), LiftError> {
        if e.len() != self.map.domain_dim() {
            return Err(LiftError::Dimension {
                expected: self.map.domain_dim(),
                got: e.len(),
            });
        }
        if w.len() != self.map.codomain_dim() {
            return Err(LiftError::Dimension {
                expected: self.map.codomain_dim(),
                got: w.len(),
            });
        }
        let eta = self.map.base_radius;
        let fe = self.map.eval(e);
        let n = norm(&fe);
        if n == 0.0 {
            return Err(LiftError::StartAtZero);
        }
        let a = SpherePoint::unit(scale(&fe, 1.0 / n)).map_err(PathError::from)?;
        let b = SpherePoint::new(w.to_vec(), eta)
            .and_then(|_| SpherePoint::unit(scale(w, 1.0 / norm(w))))
            .map_err(|_| LiftError::GoalOffBase { norm: norm(w), eta })?;
        Ok((a, b))
    }

    /// Minimal region index containing the query.
    pub fn dispatch(&self, e: &[f64], w: &[f64]) -> Option<usize> {
        let (a, b) = self.base_pair(e, w).ok()?;
        self.base.dispatch(a.coords(), b.coords()).map(|r| r.index)
    }

    pub fn contains(&self, region: usize, e: &[f64], w: &[f64]) -> bool {
        let Ok((a, b)) = self.base_pair(e, w) else {
            return false;
        };
        self.base
            .regions()
            .iter()
            .find(|r| r.index == region)
            .is_some_and(|r| r.contains(a.coords(), b.coords(), self.base.margin()))
    }

    /// Region index and lifted path for the query `(e, w)`.
    pub fn plan(&self, e: &[f64], w: &[f64]) -> Result<(usize, PathExpr), LiftError> {
        let q = self.plan_full(e, w)?;
        Ok((q.region, q.path))
    }

    /// Like [`plan`](Self::plan), also returning the unit-sphere base path.
    pub fn plan_full(&self, e: &[f64], w: &[f64]) -> Result<PlannedQuery, LiftError> {
        let (a, b) = self.base_pair(e, w)?;
        let (region, base) = self.base.plan(&a, &b)?;
        let path = lift(&self.oracle, &self.map, e, &base)?;
        Ok(PlannedQuery { region, base, path })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedQuery {
    pub region: usize,
    /// Base path on the unit sphere.
    pub base: PathExpr,
    /// Lift of `η · base` through the start.
    pub path: PathExpr,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::geometry::knot;
    use crate::milnor::{hopf_germ, tube_fibration};
    use crate::numerics::singular_values;
    use crate::sphere_planner::build_planner;

    fn fd_check(map: &WorkMap, x: &[f64]) {
        let j = map.jacobian(x);
        let h = 1e-6;
        for c in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (map.eval(&xp), map.eval(&xm));
            for r in 0..fp.len() {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                let scale = j.norm().max(1e-12);
                assert!((fd - j[(r, c)]).abs() / scale < 1e-5, "{r},{c}: {fd} vs {}", j[(r, c)]);
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let maps = [
            hopf_germ(),
            rr_arm_workmap(),
            tube_fibration(&Germ::brieskorn(2, 3).unwrap()),
        ];
        for map in &maps {
            for _ in 0..50 {
                let x: Vec<f64> = (0..map.domain_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                fd_check(map, &x);
            }
        }
    }

    #[test]
    fn rr_arm_values() {
        let arm = rr_arm_workmap();
        assert_eq!(arm.eval(&[0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        for beta in [0.0, 1.3, -2.7] {
            let f = arm.eval(&[FRAC_PI_2, beta]);
            assert!(f[0].abs() < 1e-16 && f[1].abs() < 1e-16 && f[2] == 1.0);
        }
        let s = singular_values(&arm.jacobian(&[FRAC_PI_2, 0.0]));
        assert!((s[0] - 1.0).abs() < 1e-15 && s[1] < 1e-15, "rank 1 expected: {s:?}");
    }

    #[test]
    fn hopf_basics() {
        let h = hopf_germ();
        assert_eq!(h.eval(&[1.0, 0.0, 0.0, 0.0]), vec![0.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = h.sample_start(&mut rng).unwrap();
        assert!((norm(&h.eval(&x)) - h.base_radius).abs() < 1e-15);
    }

    #[test]
    fn exact_lift_quarter_turn_of_z_squared() {
        let g = Germ::power(2).unwrap();
        let map = tube_fibration(&g);
        let r = g.eta.sqrt();
        let base = PathExpr::normalized_segment(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let path = lift(&LiftingOracle::ExactCircleAction, &map, &[r, 0.0], &base).unwrap();
        let end = path.end().unwrap();
        assert!(dist(&end, &[r * FRAC_PI_4.cos(), r * FRAC_PI_4.sin()]) < 1e-15);
        for k in 0..256 {
            let t = knot(k, 256);
            let want = scale(&base.eval(t).unwrap(), g.eta);
            assert!(dist(&map.eval(&path.eval(t).unwrap()), &want) < EXACT_LIFT_TOL);
        }
    }

    #[test]
    fn constant_base_gives_constant_lift() {
        let g = Germ::power(3).unwrap();
        let map = tube_fibration(&g);
        let e = [g.eta.cbrt(), 0.0];
        let path = lift(&LiftingOracle::ExactCircleAction, &map, &e, &PathExpr::constant(&[1.0, 0.0]))
            .unwrap();
        assert_eq!(path, PathExpr::constant(&e));
    }

    #[test]
    fn numeric_lift_agrees_with_exact_on_z_squared() {
        let g = Germ::power(2).unwrap();
        let map = tube_fibration(&g);
        let e = [g.eta.sqrt(), 0.0];
        let base = PathExpr::normalized_segment(&[1.0, 0.0], &[-0.2, 1.0]).unwrap();
        let exact = lift(&LiftingOracle::ExactCircleAction, &map, &e, &base).unwrap();
        let num = lift(&LiftingOracle::numeric(), &map, &e, &base).unwrap();
        num.validate().unwrap();
        for k in 0..=100 {
            let t = k as f64 / 100.0 + 0.001 * (k % 3) as f64;
            let t = t.min(1.0);
            assert!(dist(&exact.eval(t).unwrap(), &num.eval(t).unwrap()) < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn hopf_meridian_numeric_residual() {
        let h = hopf_germ();
        let e = [h.base_radius.sqrt(), 0.0, 0.0, 0.0];
        // north pole down a meridian to the south pole, via stereographic charts
        let base = PathExpr::concat(
            PathExpr::normalized_segment(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]).unwrap(),
            PathExpr::normalized_segment(&[1.0, 0.0, 0.0], &[0.0, 0.0, -1.0]).unwrap(),
        )
        .unwrap();
        let path = lift(&LiftingOracle::numeric(), &h, &e, &base).unwrap();
        let end = path.end().unwrap();
        assert!(dist(&h.eval(&end), &[0.0, 0.0, -h.base_radius]) < 1e-6);
        for k in 0..64 {
            let t = (k as f64 + 0.37) / 64.0;
            let want = scale(&base.eval(t).unwrap(), h.base_radius);
            assert!(dist(&h.eval(&path.eval(t).unwrap()), &want) < NUMERIC_LIFT_TOL);
        }
    }

    #[test]
    fn numeric_lift_roundtrips_through_json() {
        let h = hopf_germ();
        let e = [0.0, h.base_radius.sqrt(), 0.0, 0.0];
        let base = PathExpr::normalized_segment(&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        let path = lift(&LiftingOracle::numeric(), &h, &e, &base).unwrap();
        let back: PathExpr = serde_json::from_str(&serde_json::to_string(&path).unwrap()).unwrap();
        assert_eq!(back, path);
        assert_eq!(back.eval(0.3).unwrap(), path.eval(0.3).unwrap());
    }

    #[test]
    fn rr_arm_fails_on_goal_at_pole() {
        let arm = rr_arm_workmap();
        let base = PathExpr::normalized_segment(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        let err = lift(&LiftingOracle::numeric(), &arm, &[0.0, 0.0], &base).unwrap_err();
        assert!(matches!(err, LiftError::LiftFailure { .. }), "{err}");
    }

    #[test]
    fn rr_arm_reaches_regular_goal() {
        let arm = rr_arm_workmap();
        let goal = [0.6, 0.0, 0.8];
        let base = PathExpr::normalized_segment(&[1.0, 0.0, 0.0], &goal).unwrap();
        let path = lift(&LiftingOracle::numeric(), &arm, &[0.0, 0.0], &base).unwrap();
        assert!(dist(&arm.eval(&path.end().unwrap()), &goal) < 1e-9);
    }

    #[test]
    fn start_must_lie_over_base() {
        let g = Germ::power(2).unwrap();
        let map = tube_fibration(&g);
        let base = PathExpr::normalized_segment(&[0.0, 1.0], &[-1.0, 0.0]).unwrap();
        let err = lift(&LiftingOracle::ExactCircleAction, &map, &[g.eta.sqrt(), 0.0], &base);
        assert!(matches!(err, Err(LiftError::StartOffBase { .. })));
    }

    #[test]
    fn exact_oracle_rejects_non_germs() {
        let base = build_planner(2, 0.05).unwrap();
        assert!(pullback_planner(hopf_germ(), base, LiftingOracle::ExactCircleAction).is_err());
    }

    #[test]
    fn pullback_preserves_region_count_and_contract() {
        let g = Germ::brieskorn(2, 3).unwrap();
        let map = tube_fibration(&g);
        let planner =
            pullback_planner(map.clone(), build_planner(1, 0.05).unwrap(), LiftingOracle::ExactCircleAction)
                .unwrap();
        assert_eq!(planner.region_count(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let e = map.sample_start(&mut rng).unwrap();
            let phi: f64 = rng.random_range(-PI..PI);
            let w = [g.eta * phi.cos(), g.eta * phi.sin()];
            let (i, path) = planner.plan(&e, &w).unwrap();
            assert_eq!(Some(i), planner.dispatch(&e, &w));
            assert!(planner.contains(i, &e, &w));
            assert_eq!(path.start().unwrap(), e);
            assert!(dist(&map.eval(&path.end().unwrap()), &w) < 1e-10);
        }
        // query (e, f(e)) lands in region 1
        let e = map.sample_start(&mut rng).unwrap();
        let (i, path) = planner.plan(&e, &map.eval(&e)).unwrap();
        assert_eq!(i, 1);
        assert!(dist(&map.eval(&path.end().unwrap()), &map.eval(&e)) < 1e-12);
    }

    #[test]
    fn pullback_rejects_wrong_base_dimension() {
        let map = tube_fibration(&Germ::power(2).unwrap());
        assert!(pullback_planner(map, build_planner(2, 0.05).unwrap(), LiftingOracle::ExactCircleAction)
            .is_err());
    }

    #[test]
    fn snap_to_tube_polishes_nearby_points() {
        let g = Germ::power(3).unwrap();
        let map = tube_fibration(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = map.sample_start(&mut rng).unwrap();
        let off = scale(&x, 1.0 + 1e-7);
        let y = map.snap_to_tube(&off, 1e-6).unwrap();
        assert!((norm(&map.eval(&y)) - map.base_radius).abs() < 1e-15);
        assert!(matches!(
            map.snap_to_tube(&scale(&x, 2.0), 1e-6),
            Err(LiftError::OffTube { .. })
        ));
        let h = hopf_germ();
        let x = h.sample_start(&mut rng).unwrap();
        let y = h.snap_to_tube(&scale(&x, 1.0 + 1e-8), 1e-6).unwrap();
        assert!((norm(&h.eval(&y)) - h.base_radius).abs() < 1e-15);
    }
}
