//! Fiber and link sampling, component counts, and component monodromy.
//!
//! Seeds drawn uniformly in the Milnor ball are projected onto the fiber by
//! minimum-norm Newton steps. The converged points are joined in a proximity
//! graph whose radius adapts to the sample (three times the median
//! nearest-neighbour distance) and components are counted with union-find.
//!
//! Random samples of a curve or surface leave gaps several times wider than
//! the median spacing, so two proximity components are also merged when the
//! gap between their closest points can be bridged along the fiber: the
//! chord is bisected, its midpoint projected back onto the fiber, and both
//! halves are bridged recursively until every piece is within the radius.
//! Across a genuine gap between components the projected midpoint falls back
//! to one side and the pieces stop shrinking.
//!
//! Counts are evidence, not proof; they are always reported together with the
//! seed and convergence counts.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{circle_action_lift, tube_fibration, Germ, MilnorError, TriState, TubePoint};
use crate::fibration::WorkMap;
use crate::geometry::{dist, norm};
use crate::numerics::newton_project;

pub const MIN_SEEDS: usize = 100;
pub const MIN_CONVERGED: usize = 20;
/// Residual bound for fiber and link points.
pub const FIBER_TOL: f64 = 1e-9;
/// Multiple of the median nearest-neighbour distance used as edge radius.
const RADIUS_FACTOR: f64 = 3.0;
/// Floor for the edge radius relative to `ε`; duplicated isolated points
/// would otherwise give a zero radius.
const RADIUS_FLOOR: f64 = 1e-6;
const NEWTON_ITERS: usize = 100;
/// Each bridged half must be shorter than this fraction of its chord.
const BRIDGE_SHRINK: f64 = 0.75;
const BRIDGE_DEPTH: u32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSample {
    pub base_point: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Component label of each point, numbered in order of first appearance.
    pub labels: Vec<usize>,
    pub components: usize,
    pub seeds: usize,
    pub converged: usize,
    /// Edge radius of the proximity graph.
    pub radius: f64,
    /// Proximity components merged by bridging along the fiber.
    pub bridged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    pub points: Vec<Vec<f64>>,
    pub seeds: usize,
    pub converged: usize,
    /// `yes` once any point converged, `no` if every seed diverged.
    pub link_nonempty: TriState,
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
    }
}

/// Uniform point in the ball of radius `r` in `R^n`.
fn ball_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let s = r * rng.random::<f64>().powf(1.0 / n as f64) / norm(&g);
    g.into_iter().map(|c| c * s).collect()
}

fn sphere_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let s = r / norm(&g);
    g.into_iter().map(|c| c * s).collect()
}

/// Samples the fiber of a germ's tube over `η·e^{iφ}`.
pub fn sample_fiber(g: &Germ, angle: f64, seeds: usize, seed: u64) -> Result<FiberSample, MilnorError> {
    let target = [g.eta * angle.cos(), g.eta * angle.sin()];
    sample_fiber_of(&tube_fibration(g), &target, seeds, seed)
}

/// Samples `B_ε ∩ f⁻¹(target)` for any work map with a Milnor ball.
pub fn sample_fiber_of(
    map: &WorkMap,
    target: &[f64],
    seeds: usize,
    seed: u64,
) -> Result<FiberSample, MilnorError> {
    if seeds < MIN_SEEDS {
        return Err(MilnorError::TooFewSeeds {
            min: MIN_SEEDS,
            got: seeds,
        });
    }
    let eps = map.ball_radius.ok_or(MilnorError::NoBall)?;
    let n = map.domain_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..seeds).map(|_| ball_point(&mut rng, n, eps)).collect();

    let system = |x: &[f64]| {
        let f = map.eval(x);
        let r: Vec<f64> = f.iter().zip(target).map(|(a, b)| a - b).collect();
        (r, map.jacobian(x))
    };
    let points: Vec<Vec<f64>> = starts
        .par_iter()
        .filter_map(|s| newton_project(s, system, FIBER_TOL, NEWTON_ITERS, 2))
        .map(|p| p.point)
        .filter(|p| norm(p) <= eps + FIBER_TOL)
        .collect();

    if points.len() < MIN_CONVERGED {
        return Err(MilnorError::TooFewPoints {
            converged: points.len(),
            seeds,
        });
    }
    let radius = proximity_radius(&points, eps);
    let project = |x: &[f64]| newton_project(x, system, FIBER_TOL, NEWTON_ITERS, 2).map(|p| p.point);
    let (labels, components, bridged) = label_components(&points, radius, project);
    Ok(FiberSample {
        base_point: target.to_vec(),
        converged: points.len(),
        points,
        labels,
        components,
        seeds,
        radius,
        bridged,
    })
}

fn proximity_radius(points: &[Vec<f64>], eps: f64) -> f64 {
    let mut nn: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    let median = nn[nn.len() / 2];
    (RADIUS_FACTOR * median).max(RADIUS_FLOOR * eps)
}

fn label_components<P>(points: &[Vec<f64>], radius: f64, project: P) -> (Vec<usize>, usize, usize)
where
    P: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    let n = points.len();
    let mut ds = DisjointSet::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if dist(&points[i], &points[j]) <= radius {
                ds.union(i, j);
            }
        }
    }

    // closest pair of points between every two proximity components
    let roots: Vec<usize> = (0..n).map(|i| ds.find(i)).collect();
    let mut closest: std::collections::BTreeMap<(usize, usize), (f64, usize, usize)> =
        std::collections::BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (roots[i].min(roots[j]), roots[i].max(roots[j]));
            if a == b {
                continue;
            }
            let d = dist(&points[i], &points[j]);
            let e = closest.entry((a, b)).or_insert((f64::INFINITY, i, j));
            if d < e.0 {
                *e = (d, i, j);
            }
        }
    }
    let mut candidates: Vec<(f64, usize, usize)> = closest.into_values().collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut bridged = 0;
    for (_, i, j) in candidates {
        if ds.find(i) == ds.find(j) {
            continue;
        }
        if bridge(&points[i], &points[j], radius, &project, BRIDGE_DEPTH) {
            ds.union(i, j);
            bridged += 1;
        }
    }

    let mut root_label = std::collections::HashMap::new();
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            let r = ds.find(i);
            let next = root_label.len();
            *root_label.entry(r).or_insert(next)
        })
        .collect();
    (labels, root_label.len(), bridged)
}

/// Whether `p` and `q` are joined by a chain of fiber points with steps of at
/// most `radius`, found by recursive bisection and projection.
fn bridge<P>(p: &[f64], q: &[f64], radius: f64, project: &P, depth: u32) -> bool
where
    P: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let len = dist(p, q);
    if len <= radius {
        return true;
    }
    if depth == 0 {
        return false;
    }
    let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let Some(m) = project(&mid) else {
        return false;
    };
    let limit = BRIDGE_SHRINK * len;
    dist(p, &m) <= limit
        && dist(&m, q) <= limit
        && bridge(p, &m, radius, project, depth - 1)
        && bridge(&m, q, radius, project, depth - 1)
}

/// Samples the link `f⁻¹(0) ∩ S_ε` of a germ.
pub fn sample_link(g: &Germ, seeds: usize, seed: u64) -> Result<LinkSample, MilnorError> {
    if seeds < MIN_SEEDS {
        return Err(MilnorError::TooFewSeeds {
            min: MIN_SEEDS,
            got: seeds,
        });
    }
    let n = g.real_dim();
    let eps = g.epsilon;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..seeds).map(|_| sphere_point(&mut rng, n, eps)).collect();

    let system = |x: &[f64]| {
        let [u, v] = g.eval(x);
        let jf = g.jacobian(x);
        let mut j = DMatrix::zeros(3, n);
        j.rows_mut(0, 2).copy_from(&jf);
        let r = norm(x);
        for c in 0..n {
            j[(2, c)] = if r > 0.0 { x[c] / r } else { 0.0 };
        }
        (vec![u, v, r - eps], j)
    };
    let points: Vec<Vec<f64>> = starts
        .par_iter()
        .filter_map(|s| newton_project(s, system, FIBER_TOL * 0.1, NEWTON_ITERS, 1))
        .map(|p| p.point)
        .filter(|p| {
            let [u, v] = g.eval(p);
            u.hypot(v) <= FIBER_TOL && (norm(p) - eps).abs() <= FIBER_TOL
        })
        .collect();
    let link_nonempty = if points.is_empty() {
        TriState::No
    } else {
        TriState::Yes
    };
    Ok(LinkSample {
        converged: points.len(),
        points,
        seeds,
        link_nonempty,
    })
}

/// Permutation of fiber components induced by lifting the full base loop.
///
/// `perm[c]` is the component reached from component `c`. The sample must lie
/// over angle 0.
pub fn monodromy_components(g: &Germ, fs: &FiberSample) -> Result<Vec<usize>, MilnorError> {
    let base = [g.eta, 0.0];
    if fs.base_point.len() != 2 || dist(&fs.base_point, &base) > 1e-12 * g.eta.max(1.0) {
        return Err(MilnorError::WrongBasePoint);
    }
    if fs.components == 1 {
        return Ok(vec![0]);
    }
    let map = tube_fibration(g);
    let mut perm = Vec::with_capacity(fs.components);
    for c in 0..fs.components {
        let rep = fs
            .labels
            .iter()
            .position(|l| *l == c)
            .expect("every label has a point");
        let x0 = TubePoint::new(&map, fs.points[rep].clone())?;
        let end = circle_action_lift(g, &x0, TAU)
            .end()
            .map_err(|e| MilnorError::OffTube(e.to_string()))?;
        let mut hits: Vec<usize> = fs
            .points
            .iter()
            .zip(&fs.labels)
            .filter(|(p, _)| dist(p, &end) <= fs.radius)
            .map(|(_, l)| *l)
            .collect();
        hits.sort_unstable();
        hits.dedup();
        if hits.len() != 1 {
            return Err(MilnorError::AmbiguousAssignment {
                component: c,
                matches: hits.len(),
            });
        }
        perm.push(hits[0]);
    }
    let mut seen = vec![false; perm.len()];
    for &p in &perm {
        if std::mem::replace(&mut seen[p], true) {
            return Err(MilnorError::NotPermutation);
        }
    }
    Ok(perm)
}

/// Cycle lengths of a permutation, sorted in decreasing order.
pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        out.push(len);
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milnor::hopf_germ;

    #[test]
    fn power_fibers_have_d_points() {
        for d in 1..=5u32 {
            let g = Germ::power(d).unwrap();
            let fs = sample_fiber(&g, 0.3, 400, 1).unwrap();
            assert_eq!(fs.components, d as usize, "d = {d}");
            // closed-form roots η^{1/d}·e^{i(φ + 2πk)/d}
            let r = g.eta.powf(1.0 / f64::from(d));
            for p in &fs.points {
                let near_root = (0..d).any(|k| {
                    let a = (0.3 + TAU * f64::from(k)) / f64::from(d);
                    dist(p, &[r * a.cos(), r * a.sin()]) < 1e-9
                });
                assert!(near_root);
                let [u, v] = g.eval(p);
                assert!(dist(&[u, v], &fs.base_point) < FIBER_TOL);
            }
        }
    }

    #[test]
    fn seeds_checked() {
        let g = Germ::power(2).unwrap();
        assert!(matches!(
            sample_fiber(&g, 0.0, 10, 1),
            Err(MilnorError::TooFewSeeds { .. })
        ));
    }

    #[test]
    fn brieskorn_fiber_is_connected() {
        let g = Germ::brieskorn(2, 3).unwrap();
        let fs = sample_fiber(&g, 0.0, 1500, 2).unwrap();
        assert_eq!(fs.components, 1);
        assert!(fs.converged >= 500);
        assert_eq!(monodromy_components(&g, &fs).unwrap(), vec![0]);
    }

    #[test]
    fn hopf_fiber_is_one_circle() {
        let h = hopf_germ();
        let fs = sample_fiber_of(&h, &[0.0, 0.0, h.base_radius], 600, 4).unwrap();
        assert_eq!(fs.components, 1);
        for p in &fs.points {
            // w = 0 and |z|² = η
            assert!(p[2].abs() < 1e-8 && p[3].abs() < 1e-8);
            assert!((p[0] * p[0] + p[1] * p[1] - h.base_radius).abs() < 1e-9);
        }
    }

    #[test]
    fn link_samples() {
        let g = Germ::brieskorn(2, 3).unwrap();
        let l = sample_link(&g, 200, 3).unwrap();
        assert_eq!(l.link_nonempty, TriState::Yes);
        assert!(l.converged >= 1);
        for p in &l.points {
            let [u, v] = g.eval(p);
            assert!(u.hypot(v) < 1e-9 && (norm(p) - g.epsilon).abs() < 1e-9);
        }
        let z = Germ::power(1).unwrap();
        let l = sample_link(&z, 200, 3).unwrap();
        assert_eq!(l.converged, 0);
        assert_eq!(l.link_nonempty, TriState::No);
    }

    #[test]
    fn monodromy_rotates_roots() {
        let g = Germ::power(3).unwrap();
        let fs = sample_fiber(&g, 0.0, 300, 5).unwrap();
        let perm = monodromy_components(&g, &fs).unwrap();
        assert_eq!(cycle_lengths(&perm), vec![3]);
        let z = Germ::power(1).unwrap();
        let fs = sample_fiber(&z, 0.0, 300, 5).unwrap();
        assert_eq!(monodromy_components(&z, &fs).unwrap(), vec![0]);
        let off = sample_fiber(&g, 1.0, 300, 5).unwrap();
        assert!(matches!(
            monodromy_components(&g, &off),
            Err(MilnorError::WrongBasePoint)
        ));
    }

    #[test]
    fn cycle_lengths_examples() {
        assert_eq!(cycle_lengths(&[1, 2, 0]), vec![3]);
        assert_eq!(cycle_lengths(&[0, 2, 1]), vec![2, 1]);
        assert_eq!(cycle_lengths(&[0]), vec![1]);
    }

    #[test]
    fn union_find_joins_chains() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0]];
        // the fiber is the two-point set {0..2 chain, 10}: midpoints snap back
        let snap = |x: &[f64]| Some(vec![if x[0] < 6.0 { 2.0 } else { 10.0 }]);
        let (labels, k, bridged) = label_components(&pts, 1.0, snap);
        assert_eq!((k, bridged), (2, 0));
        assert_eq!(labels, vec![0, 0, 0, 1]);
    }

    #[test]
    fn gaps_along_a_line_are_bridged() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![7.5], vec![8.0]];
        let identity = |x: &[f64]| Some(x.to_vec());
        let (labels, k, bridged) = label_components(&pts, 1.0, identity);
        assert_eq!((k, bridged), (1, 1));
        assert_eq!(labels, vec![0; 4]);
    }
}
