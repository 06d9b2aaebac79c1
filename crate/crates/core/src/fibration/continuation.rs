//! Predictor–corrector tracking of `f(x(t)) = η·γ(t)`.
//!
//! Each step predicts with the minimum-norm solution of `Df·Δx = Δγ` and then
//! corrects with minimum-norm Newton steps back onto the level set. A step is
//! rejected (and the step size halved) when the corrector does not contract,
//! when its first correction is large compared to the prediction, or when it
//! fails to reach the tolerance. Accepted points form a dense table that
//! always contains the uniform knots `k / (N − 1)`.

use serde::{Deserialize, Serialize};

use super::{LiftError, WorkMap};
use crate::geometry::{dist, knot, lerp, norm, scale, PathError, PathExpr};
use crate::numerics::{min_norm_solve, rcond};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationParams {
    /// Uniform knots stored in the lift table.
    pub table_knots: usize,
    /// Initial and maximal predictor step in `t`.
    pub max_step: f64,
    pub max_halvings: u32,
    /// Absolute residual `‖f(x) − η·γ(t)‖` accepted by the corrector.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Largest accepted ratio of first correction to predictor length.
    pub corrector_ratio: f64,
    /// Tracking stops if `σ_min/σ_max` of `Df` drops below this anywhere.
    pub path_rcond: f64,
    /// The goal configuration must have `σ_min/σ_max` of `Df` at least this.
    pub goal_rcond: f64,
}

impl Default for ContinuationParams {
    fn default() -> Self {
        Self {
            table_knots: 256,
            max_step: 1.0 / 255.0,
            max_halvings: 30,
            newton_tol: 1e-12,
            max_newton: 12,
            corrector_ratio: 0.5,
            path_rcond: 1e-9,
            goal_rcond: 1e-3,
        }
    }
}

/// A tabulated lift with Newton refinement on evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericLift {
    pub map: WorkMap,
    /// Path on the unit sphere; the lift covers `base_radius · base(t)`.
    pub base: PathExpr,
    pub knots: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl NumericLift {
    pub fn dim(&self) -> usize {
        self.map.domain_dim()
    }

    fn target(&self, t: f64) -> Result<Vec<f64>, PathError> {
        Ok(scale(&self.base.eval(t)?, self.map.base_radius))
    }

    /// Stored point at a knot, otherwise the linear interpolant of the
    /// bracketing knots refined onto `f(x) = η·γ(t)`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, PathError> {
        let i = self.knots.partition_point(|s| *s < t);
        if i < self.knots.len() && self.knots[i] == t {
            return Ok(self.points[i].clone());
        }
        if i == 0 || i >= self.knots.len() {
            return Err(PathError::Domain(t));
        }
        let (t0, t1) = (self.knots[i - 1], self.knots[i]);
        let guess = lerp(&self.points[i - 1], &self.points[i], (t - t0) / (t1 - t0));
        let target = self.target(t)?;
        refine(&self.map, guess, &target, self.newton_tol, self.max_newton)
            .ok_or(PathError::Refinement(t))
    }

    pub fn validate(&self) -> Result<(), PathError> {
        let bad = |m: &str| Err(PathError::Malformed(m.to_string()));
        if self.knots.len() != self.points.len() || self.knots.len() < 2 {
            return bad("knot table length");
        }
        if self.knots[0] != 0.0 || *self.knots.last().unwrap() != 1.0 {
            return bad("knots must span [0, 1]");
        }
        if self.knots.windows(2).any(|w| w[0] >= w[1]) {
            return bad("knots must increase");
        }
        if self.points.iter().any(|p| p.len() != self.dim()) {
            return bad("point dimension");
        }
        self.base.validate()
    }
}

/// Plain Newton refinement; `None` if the tolerance is not reached.
fn refine(map: &WorkMap, mut x: Vec<f64>, target: &[f64], tol: f64, iters: usize) -> Option<Vec<f64>> {
    for _ in 0..=iters {
        let r: Vec<f64> = map.eval(&x).iter().zip(target).map(|(a, b)| a - b).collect();
        if norm(&r) <= tol {
            return Some(x);
        }
        let dx = min_norm_solve(&map.jacobian(&x), &r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
    }
    None
}

enum Step {
    Accepted(Vec<f64>),
    Rejected,
}

fn corrector(
    map: &WorkMap,
    x: &[f64],
    target: &[f64],
    p: &ContinuationParams,
) -> Step {
    let r0: Vec<f64> = target.iter().zip(map.eval(x)).map(|(g, f)| g - f).collect();
    let pred = min_norm_solve(&map.jacobian(x), &r0);
    let pred_len = norm(&pred);
    let mut y: Vec<f64> = x.iter().zip(&pred).map(|(a, b)| a + b).collect();
    let mut last = f64::INFINITY;
    for it in 0..p.max_newton {
        let r: Vec<f64> = map.eval(&y).iter().zip(target).map(|(a, b)| a - b).collect();
        if !r.iter().all(|c| c.is_finite()) {
            return Step::Rejected;
        }
        if norm(&r) <= p.newton_tol {
            return Step::Accepted(y);
        }
        let dx = min_norm_solve(&map.jacobian(&y), &r);
        let dn = norm(&dx);
        if it == 0 && dn > p.corrector_ratio * pred_len + 10.0 * p.newton_tol {
            return Step::Rejected;
        }
        if it > 0 && dn > 0.5 * last {
            return Step::Rejected;
        }
        last = dn;
        for (yi, di) in y.iter_mut().zip(&dx) {
            *yi -= di;
        }
    }
    Step::Rejected
}

/// Tracks the lift of `base` (a unit-sphere path) starting at `start`.
pub(crate) fn track(
    map: &WorkMap,
    start: &[f64],
    base: &PathExpr,
    p: &ContinuationParams,
) -> Result<NumericLift, LiftError> {
    let eta = map.base_radius;
    let target = |t: f64| -> Result<Vec<f64>, LiftError> { Ok(scale(&base.eval(t)?, eta)) };
    let n = p.table_knots.max(2);
    let mut knots = vec![0.0];
    let mut points = vec![start.to_vec()];
    let mut t = 0.0;
    let mut x = start.to_vec();
    let mut h = p.max_step;

    check_conditioning(map, &x, p.path_rcond, 0.0)?;
    for k in 1..n {
        let tk = knot(k, n);
        let mut halvings = 0;
        while t < tk {
            let t_next = if t + h >= tk - 1e-6 * p.max_step { tk } else { t + h };
            match corrector(map, &x, &target(t_next)?, p) {
                Step::Accepted(y) => {
                    if let Some(eps) = map.ball_radius {
                        if norm(&y) > eps + 1e-9 {
                            return Err(LiftError::LiftFailure {
                                t: t_next,
                                reason: format!("lift leaves the Milnor ball (|x| = {})", norm(&y)),
                            });
                        }
                    }
                    check_conditioning(map, &y, p.path_rcond, t_next)?;
                    t = t_next;
                    x = y;
                    knots.push(t);
                    points.push(x.clone());
                    h = (2.0 * h).min(p.max_step);
                    halvings = 0;
                }
                Step::Rejected => {
                    halvings += 1;
                    if halvings > p.max_halvings {
                        return Err(LiftError::LiftFailure {
                            t,
                            reason: format!("corrector failed after {} step halvings", p.max_halvings),
                        });
                    }
                    h *= 0.5;
                }
            }
        }
    }
    check_conditioning(map, &x, p.goal_rcond, 1.0)?;
    debug_assert!(dist(&points[0], start) == 0.0);
    Ok(NumericLift {
        map: map.clone(),
        base: base.clone(),
        knots,
        points,
        newton_tol: p.newton_tol,
        max_newton: p.max_newton,
    })
}

fn check_conditioning(map: &WorkMap, x: &[f64], floor: f64, t: f64) -> Result<(), LiftError> {
    let rc = rcond(&map.jacobian(x));
    if rc < floor {
        return Err(LiftError::LiftFailure {
            t,
            reason: format!("near-singular Jacobian (sigma_min/sigma_max = {rc:e})"),
        });
    }
    Ok(())
}
