//! Sampled continuity of a sphere planner's local algorithms.
//!
//! For each scale `s`, random queries lying well inside a region are paired
//! with copies perturbed by chordal distance about `s`. The table reports the
//! largest `sup_t ‖path(t) − path′(t)‖` seen and its ratio to `s`; for a
//! continuous local algorithm the deviation shrinks with the scale.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::suite::query_rng;
use super::VerifyError;
use crate::geometry::{add, dist, dot, knot, norm, scale, PathExpr, SpherePoint};
use crate::sphere_planner::SpherePlanner;

pub const DEFAULT_SCALES: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const DEFAULT_PAIRS: usize = 200;
const DEVIATION_SAMPLES: usize = 129;
const ATTEMPTS_PER_PAIR: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub scale: f64,
    pub max_deviation: f64,
    /// `max_deviation / scale`, a sampled Lipschitz estimate.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityTable {
    pub region: usize,
    pub pairs: usize,
    pub rows: Vec<ContinuityRow>,
    /// Deviations do not increase as the scale decreases.
    pub monotone: bool,
}

/// `sup_t ‖p(t) − q(t)‖` over uniform samples.
pub fn path_deviation(p: &PathExpr, q: &PathExpr, samples: usize) -> Result<f64, VerifyError> {
    let mut worst: f64 = 0.0;
    for k in 0..samples.max(2) {
        let t = knot(k, samples.max(2));
        worst = worst.max(dist(&p.eval(t)?, &q.eval(t)?));
    }
    Ok(worst)
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    super::suite::sample_goal(rng, dim, super::suite::GoalConstraint::Any)
}

/// Moves `x` by chordal distance about `s` in a random tangent direction.
fn perturb(x: &[f64], dir: &[f64], s: f64) -> Vec<f64> {
    let tangent: Vec<f64> = add(dir, &scale(x, -dot(dir, x)));
    let tn = norm(&tangent);
    let y = add(x, &scale(&tangent, s / tn));
    let n = norm(&y);
    y.iter().map(|c| c / n).collect()
}

pub fn continuity_probe(
    planner: &SpherePlanner,
    region: usize,
    scales: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<ContinuityTable, VerifyError> {
    let reg = planner
        .regions()
        .iter()
        .find(|r| r.index == region)
        .ok_or(VerifyError::NoSuchRegion(region))?;
    let margin = planner.margin();
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0 && *s < 0.25 * margin)) {
        return Err(VerifyError::BadScales);
    }
    let dim = planner.dim() + 1;
    let mut rng = query_rng(seed, region);
    let mut dev = vec![0.0f64; scales.len()];
    let mut found = 0;
    let mut attempts = 0;
    while found < pairs {
        attempts += 1;
        if attempts > pairs * ATTEMPTS_PER_PAIR {
            return Err(VerifyError::RegionEmpty(region));
        }
        let a = random_unit(&mut rng, dim);
        let b = random_unit(&mut rng, dim);
        // δ/2-interior: perturbations up to δ/4 keep the query in the region
        if !reg.contains(&a, &b, 1.5 * margin) {
            continue;
        }
        let (da, db) = (random_unit(&mut rng, dim), random_unit(&mut rng, dim));
        let path = reg.algorithm(&SpherePoint::unit(a.clone())?, &SpherePoint::unit(b.clone())?, margin)?;
        for (k, s) in scales.iter().enumerate() {
            let (a2, b2) = (perturb(&a, &da, *s), perturb(&b, &db, *s));
            let moved = reg.algorithm(&SpherePoint::unit(a2)?, &SpherePoint::unit(b2)?, margin)?;
            dev[k] = dev[k].max(path_deviation(&path, &moved, DEVIATION_SAMPLES)?);
        }
        found += 1;
    }
    let mut order: Vec<usize> = (0..scales.len()).collect();
    order.sort_by(|i, j| scales[*j].total_cmp(&scales[*i]));
    let monotone = order.windows(2).all(|w| dev[w[1]] <= dev[w[0]]);
    Ok(ContinuityTable {
        region,
        pairs,
        rows: scales
            .iter()
            .zip(&dev)
            .map(|(s, d)| ContinuityRow {
                scale: *s,
                max_deviation: *d,
                ratio: d / s,
            })
            .collect(),
        monotone,
    })
}

/// Continuity tables for every region of a planner.
pub fn continuity_all(planner: &SpherePlanner, pairs: usize, seed: u64) -> Result<Vec<ContinuityTable>, VerifyError> {
    planner
        .regions()
        .iter()
        .map(|r| continuity_probe(planner, r.index, &DEFAULT_SCALES, pairs, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_planner::build_planner;

    #[test]
    fn identical_queries_do_not_deviate() {
        let p = build_planner(2, 0.05).unwrap();
        let a = SpherePoint::unit(vec![0.6, 0.0, 0.8]).unwrap();
        let b = SpherePoint::unit(vec![0.0, 1.0, 0.0]).unwrap();
        let (_, x) = p.plan(&a, &b).unwrap();
        let (_, y) = p.plan(&a, &b).unwrap();
        assert_eq!(path_deviation(&x, &y, 65).unwrap(), 0.0);
    }

    #[test]
    fn deviations_shrink_with_scale() {
        for m in [1, 2] {
            let p = build_planner(m, 0.05).unwrap();
            for t in continuity_all(&p, 40, 5).unwrap() {
                assert!(t.monotone, "m = {m}: {t:?}");
                assert!(t.rows.iter().all(|r| r.ratio <= 1e4), "{t:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let p = build_planner(1, 0.05).unwrap();
        assert!(matches!(continuity_probe(&p, 5, &DEFAULT_SCALES, 5, 0), Err(VerifyError::NoSuchRegion(5))));
        assert!(matches!(continuity_probe(&p, 1, &[0.5], 5, 0), Err(VerifyError::BadScales)));
    }
}
