//! Randomized contract suites for sphere and tasking planners.
//!
//! Query `i` draws from its own ChaCha8 stream `i` under the master seed, so
//! a report is reproducible bit for bit and any failure can be replayed alone
//! with [`query_rng`].

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::continuity::ContinuityTable;
use crate::fibration::{LiftError, TaskingPlanner};
use crate::geometry::{dist, knot, norm, scale, PathExpr, SpherePoint};
use crate::sphere_planner::SpherePlanner;

/// Endpoint tolerance for sphere planners.
pub const SPHERE_ENDPOINT_TOL: f64 = 1e-9;
/// Samples per path for the on-sphere and in-ball invariants.
pub const DEFAULT_PATH_SAMPLES: usize = 33;
/// Knots for the projection property of lifted paths.
pub const DEFAULT_PROJECTION_KNOTS: usize = 256;

/// Restriction on sampled goals, measured as chordal distance of the unit
/// goal direction to the poles `±p_N = ±e_{last}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalConstraint {
    Any,
    /// At least `distance` from both poles.
    PoleClearance { distance: f64 },
    /// Within `distance` of one of the poles.
    NearPole { distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub queries: usize,
    pub seed: u64,
    pub goal: GoalConstraint,
    pub path_samples: usize,
    pub projection_knots: usize,
}

impl SuiteConfig {
    pub fn new(queries: usize, seed: u64) -> Self {
        Self {
            queries,
            seed,
            goal: GoalConstraint::Any,
            path_samples: DEFAULT_PATH_SAMPLES,
            projection_knots: DEFAULT_PROJECTION_KNOTS,
        }
    }

    pub fn with_goal(mut self, goal: GoalConstraint) -> Self {
        self.goal = goal;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// No region contains the query.
    Coverage,
    /// The planner used a region other than the first containing one.
    Dispatch,
    Start,
    Endpoint,
    Projection,
    /// Path left the sphere or the Milnor ball.
    Invariant,
    Lift,
    Plan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub query: usize,
    pub seed: u64,
    pub kind: FailureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub planner: String,
    pub regions: usize,
    pub queries: usize,
    pub seed: u64,
    pub goal: GoalConstraint,
    /// Queries whose path was produced.
    pub succeeded: usize,
    pub coverage_failures: usize,
    pub lift_failures: usize,
    /// Over produced paths; 0 when none was produced.
    pub max_endpoint_error: f64,
    pub mean_endpoint_error: f64,
    pub max_start_error: f64,
    /// `max ‖f(λ(t)) − η·γ(t)‖` over the projection knots of lifted paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_projection_error: Option<f64>,
    /// Number of queries planned by each region, in region order.
    pub region_counts: Vec<usize>,
    pub failures: Vec<FailureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub continuity: Vec<ContinuityTable>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failures_of(&self, kind: FailureKind) -> usize {
        self.failures.iter().filter(|f| f.kind == kind).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Planners accepted by [`run_contract_suite`].
#[derive(Debug, Clone, Copy)]
pub enum SuitePlanner<'a> {
    Sphere(&'a SpherePlanner),
    Tasking(&'a TaskingPlanner),
}

impl<'a> From<&'a SpherePlanner> for SuitePlanner<'a> {
    fn from(p: &'a SpherePlanner) -> Self {
        SuitePlanner::Sphere(p)
    }
}

impl<'a> From<&'a TaskingPlanner> for SuitePlanner<'a> {
    fn from(p: &'a TaskingPlanner) -> Self {
        SuitePlanner::Tasking(p)
    }
}

impl SuitePlanner<'_> {
    pub fn id(&self) -> String {
        match self {
            SuitePlanner::Sphere(p) => format!("sphere:{}", p.dim()),
            SuitePlanner::Tasking(p) => format!("pullback:{}", p.map().name()),
        }
    }

    fn region_count(&self) -> usize {
        match self {
            SuitePlanner::Sphere(p) => p.region_count(),
            SuitePlanner::Tasking(p) => p.region_count(),
        }
    }
}

/// The random stream of query `index`.
pub fn query_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-6 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

fn pole_distance(u: &[f64]) -> f64 {
    let last = u[u.len() - 1];
    // chordal distance to the nearer of ±e_last
    (2.0 - 2.0 * last.abs()).max(0.0).sqrt()
}

/// A unit vector in `R^dim` obeying the goal constraint.
pub fn sample_goal<R: Rng + ?Sized>(rng: &mut R, dim: usize, goal: GoalConstraint) -> Vec<f64> {
    match goal {
        GoalConstraint::Any => unit_vector(rng, dim),
        GoalConstraint::PoleClearance { distance } => loop {
            let u = unit_vector(rng, dim);
            if pole_distance(&u) >= distance {
                return u;
            }
        },
        GoalConstraint::NearPole { distance } => {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let chord = distance * rng.random::<f64>();
            let phi = 2.0 * (0.5 * chord).asin();
            // unit direction orthogonal to the pole axis
            let mut t = unit_vector(rng, dim);
            t[dim - 1] = 0.0;
            let tn = norm(&t);
            let t: Vec<f64> = if tn > 1e-9 {
                t.iter().map(|c| c / tn).collect()
            } else {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                e
            };
            let mut u = scale(&t, phi.sin());
            u[dim - 1] = sign * phi.cos();
            u
        }
    }
}

struct Outcome {
    region: Option<usize>,
    endpoint: Option<f64>,
    start: Option<f64>,
    projection: Option<f64>,
    failures: Vec<FailureEntry>,
}

impl Outcome {
    fn empty() -> Self {
        Self {
            region: None,
            endpoint: None,
            start: None,
            projection: None,
            failures: Vec::new(),
        }
    }
}

pub fn run_contract_suite<'a>(planner: impl Into<SuitePlanner<'a>>, cfg: &SuiteConfig) -> VerificationReport {
    let planner = planner.into();
    let started = Instant::now();
    let outcomes: Vec<Outcome> = (0..cfg.queries)
        .into_par_iter()
        .map(|i| match planner {
            SuitePlanner::Sphere(p) => sphere_query(p, cfg, i),
            SuitePlanner::Tasking(p) => tasking_query(p, cfg, i),
        })
        .collect();

    let mut report = VerificationReport {
        planner: planner.id(),
        regions: planner.region_count(),
        queries: cfg.queries,
        seed: cfg.seed,
        goal: cfg.goal,
        succeeded: 0,
        coverage_failures: 0,
        lift_failures: 0,
        max_endpoint_error: 0.0,
        mean_endpoint_error: 0.0,
        max_start_error: 0.0,
        max_projection_error: None,
        region_counts: vec![0; planner.region_count()],
        failures: Vec::new(),
        continuity: Vec::new(),
        wall_time: Duration::ZERO,
    };
    let mut sum = 0.0;
    for o in outcomes {
        if let Some(r) = o.region {
            report.region_counts[r - 1] += 1;
        }
        if let Some(e) = o.endpoint {
            report.succeeded += 1;
            sum += e;
            report.max_endpoint_error = report.max_endpoint_error.max(e);
        }
        if let Some(s) = o.start {
            report.max_start_error = report.max_start_error.max(s);
        }
        if let Some(p) = o.projection {
            report.max_projection_error = Some(report.max_projection_error.map_or(p, |m| m.max(p)));
        }
        report.coverage_failures += o.failures.iter().filter(|f| f.kind == FailureKind::Coverage).count();
        report.lift_failures += o.failures.iter().filter(|f| f.kind == FailureKind::Lift).count();
        report.failures.extend(o.failures);
    }
    if report.succeeded > 0 {
        report.mean_endpoint_error = sum / report.succeeded as f64;
    }
    report.wall_time = started.elapsed();
    report
}

fn fail(cfg: &SuiteConfig, i: usize, kind: FailureKind, t: Option<f64>, detail: String) -> FailureEntry {
    FailureEntry {
        query: i,
        seed: cfg.seed,
        kind,
        t,
        detail,
    }
}

/// Sphere paths start at `a` up to renormalization; lifted paths must start
/// exactly at `e`.
fn sphere_query(p: &SpherePlanner, cfg: &SuiteConfig, i: usize) -> Outcome {
    let mut rng = query_rng(cfg.seed, i);
    let dim = p.dim() + 1;
    let a = unit_vector(&mut rng, dim);
    let b = sample_goal(&mut rng, dim, cfg.goal);
    let mut out = Outcome::empty();

    let first = p.regions().iter().find(|r| r.contains(&a, &b, p.margin())).map(|r| r.index);
    let Some(first) = first else {
        out.failures.push(fail(cfg, i, FailureKind::Coverage, None, format!("a = {a:?}, b = {b:?}")));
        return out;
    };
    let (sa, sb) = (SpherePoint::unit(a.clone()), SpherePoint::unit(b.clone()));
    let (Ok(sa), Ok(sb)) = (sa, sb) else {
        out.failures.push(fail(cfg, i, FailureKind::Plan, None, "sampled point off the sphere".into()));
        return out;
    };
    let (region, path) = match p.plan(&sa, &sb) {
        Ok(x) => x,
        Err(e) => {
            out.failures.push(fail(cfg, i, FailureKind::Plan, None, e.to_string()));
            return out;
        }
    };
    out.region = Some(region);
    if region != first {
        out.failures.push(fail(
            cfg,
            i,
            FailureKind::Dispatch,
            None,
            format!("planned with region {region}, first containing region is {first}"),
        ));
    }
    check_endpoints(&mut out, cfg, i, &path, &a, |x| x.to_vec(), &b, SPHERE_ENDPOINT_TOL, SPHERE_ENDPOINT_TOL);
    for k in 0..cfg.path_samples {
        let t = knot(k, cfg.path_samples);
        match path.eval(t) {
            Ok(x) if (norm(&x) - 1.0).abs() <= SPHERE_ENDPOINT_TOL => {}
            Ok(x) => {
                out.failures.push(fail(cfg, i, FailureKind::Invariant, Some(t), format!("|x| = {}", norm(&x))));
                break;
            }
            Err(e) => {
                out.failures.push(fail(cfg, i, FailureKind::Plan, Some(t), e.to_string()));
                break;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn check_endpoints<F: Fn(&[f64]) -> Vec<f64>>(
    out: &mut Outcome,
    cfg: &SuiteConfig,
    i: usize,
    path: &PathExpr,
    start: &[f64],
    f: F,
    goal: &[f64],
    start_tol: f64,
    tol: f64,
) {
    let (s, e) = match (path.eval(0.0), path.eval(1.0)) {
        (Ok(s), Ok(e)) => (s, e),
        (Err(err), _) | (_, Err(err)) => {
            out.failures.push(fail(cfg, i, FailureKind::Plan, None, err.to_string()));
            return;
        }
    };
    let start_err = dist(&s, start);
    let end_err = dist(&f(&e), goal);
    out.start = Some(start_err);
    out.endpoint = Some(end_err);
    if start_err > start_tol {
        out.failures.push(fail(cfg, i, FailureKind::Start, Some(0.0), format!("|path(0) - start| = {start_err:e}")));
    }
    if end_err > tol {
        out.failures.push(fail(cfg, i, FailureKind::Endpoint, Some(1.0), format!("endpoint error {end_err:e}")));
    }
}

fn tasking_query(p: &TaskingPlanner, cfg: &SuiteConfig, i: usize) -> Outcome {
    let mut rng = query_rng(cfg.seed, i);
    let map = p.map();
    let eta = map.base_radius;
    let tol = p.oracle().lift_tol();
    let mut out = Outcome::empty();
    let e = match map.sample_start(&mut rng) {
        Ok(e) => e,
        Err(err) => {
            out.failures.push(fail(cfg, i, FailureKind::Plan, None, err.to_string()));
            return out;
        }
    };
    let w = scale(&sample_goal(&mut rng, map.codomain_dim(), cfg.goal), eta);

    let first = p.regions().iter().map(|r| r.index).find(|&r| p.contains(r, &e, &w));
    let Some(first) = first else {
        out.failures.push(fail(cfg, i, FailureKind::Coverage, None, format!("e = {e:?}, w = {w:?}")));
        return out;
    };
    let q = match p.plan_full(&e, &w) {
        Ok(q) => q,
        Err(LiftError::LiftFailure { t, reason }) => {
            out.region = Some(first);
            out.failures.push(fail(cfg, i, FailureKind::Lift, Some(t), reason));
            return out;
        }
        Err(err) => {
            out.failures.push(fail(cfg, i, FailureKind::Plan, None, err.to_string()));
            return out;
        }
    };
    out.region = Some(q.region);
    if q.region != first {
        out.failures.push(fail(
            cfg,
            i,
            FailureKind::Dispatch,
            None,
            format!("planned with region {}, first containing region is {first}", q.region),
        ));
    }
    check_endpoints(&mut out, cfg, i, &q.path, &e, |x| map.eval(x), &w, 0.0, tol);

    // projection property at the uniform knots and between them
    let n = cfg.projection_knots.max(2);
    let mut worst: f64 = 0.0;
    let times = (0..n).map(|k| knot(k, n)).chain((0..n - 1).map(|k| (k as f64 + 0.5) / (n - 1) as f64));
    for t in times {
        let (x, g) = match (q.path.eval(t), q.base.eval(t)) {
            (Ok(x), Ok(g)) => (x, g),
            (Err(err), _) | (_, Err(err)) => {
                out.failures.push(fail(cfg, i, FailureKind::Plan, Some(t), err.to_string()));
                break;
            }
        };
        let r = dist(&map.eval(&x), &scale(&g, eta));
        worst = worst.max(r);
        if r > tol {
            out.failures.push(fail(cfg, i, FailureKind::Projection, Some(t), format!("residual {r:e}")));
            break;
        }
        if let Some(eps) = map.ball_radius {
            if norm(&x) > eps + 1e-9 {
                out.failures.push(fail(cfg, i, FailureKind::Invariant, Some(t), format!("|x| = {}", norm(&x))));
                break;
            }
        }
    }
    out.projection = Some(worst);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibration::{pullback_planner, LiftingOracle};
    use crate::milnor::{tube_fibration, Germ};
    use crate::sphere_planner::build_planner;

    #[test]
    fn sphere_suite_small_is_clean_and_reproducible() {
        for m in 1..=4 {
            let p = build_planner(m, 0.05).unwrap();
            let cfg = SuiteConfig::new(2000, 7);
            let r = run_contract_suite(&p, &cfg);
            assert!(r.passed(), "m = {m}: {:?}", &r.failures[..r.failures.len().min(3)]);
            assert!(r.max_endpoint_error < 1e-9);
            assert_eq!(r.region_counts.iter().sum::<usize>(), 2000);
            assert_eq!(r.to_json(), run_contract_suite(&p, &cfg).to_json());
        }
    }

    #[test]
    fn goal_sampling_respects_constraints() {
        let mut rng = query_rng(1, 0);
        for _ in 0..2000 {
            let u = sample_goal(&mut rng, 3, GoalConstraint::PoleClearance { distance: 0.1 });
            assert!((norm(&u) - 1.0).abs() < 1e-12 && pole_distance(&u) >= 0.1);
            let u = sample_goal(&mut rng, 3, GoalConstraint::NearPole { distance: 1e-3 });
            assert!((norm(&u) - 1.0).abs() < 1e-12 && pole_distance(&u) <= 1e-3 + 1e-12);
        }
    }

    #[test]
    fn pullback_suite_on_z_cubed() {
        let g = Germ::power(3).unwrap();
        let p = pullback_planner(tube_fibration(&g), build_planner(1, 0.05).unwrap(), LiftingOracle::ExactCircleAction)
            .unwrap();
        let r = run_contract_suite(&p, &SuiteConfig::new(300, 3));
        assert!(r.passed(), "{:?}", r.failures.first());
        assert!(r.max_projection_error.unwrap() < 1e-12);
        assert_eq!(r.planner, "pullback:z^3");
    }

    #[test]
    fn report_json_has_documented_keys() {
        let p = build_planner(1, 0.05).unwrap();
        let r = run_contract_suite(&p, &SuiteConfig::new(10, 1));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["regions", "queries", "max_endpoint_error", "failures"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v.get("wall_time").is_none());
    }
}
