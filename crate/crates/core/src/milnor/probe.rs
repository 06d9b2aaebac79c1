//! Sampled regularity probes for the tube fibration.
//!
//! Two minima are recorded: `σ_min(Df)` over points of the tube, and
//! `σ_min(D(f, r))` with `r(x) = ‖x‖` over points of the tube boundary
//! `S_ε ∩ {|f| = η}`, where transversality of the fibers to the sphere is what
//! the fibration needs. The verdict is heuristic and never certifies the
//! Milnor conditions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Germ, MilnorError};
use crate::geometry::norm;
use crate::numerics::{newton_project, sigma_min};

pub const MIN_PROBES: usize = 1000;
/// Both minima must exceed this for a "probably regular" verdict.
pub const REGULARITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityProbe {
    pub samples: usize,
    pub boundary_samples: usize,
    pub min_sigma_f: f64,
    /// `None` when no boundary point was found (e.g. an empty tube boundary).
    pub min_sigma_fr: Option<f64>,
    pub probably_regular: bool,
    pub note: String,
}

pub fn regularity_probe(g: &Germ, n: usize, seed: u64) -> Result<RegularityProbe, MilnorError> {
    if n < MIN_PROBES {
        return Err(MilnorError::TooFewSeeds {
            min: MIN_PROBES,
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_f = f64::INFINITY;
    for _ in 0..n {
        let x = g.random_tube_point(&mut rng)?;
        min_f = min_f.min(sigma_min(&g.jacobian(&x)));
    }

    let dim = g.real_dim();
    let boundary = |x: &[f64]| {
        let [u, v] = g.eval(x);
        let a = u.hypot(v);
        let jf = g.jacobian(x);
        let r = norm(x);
        let mut j = DMatrix::zeros(2, dim);
        for c in 0..dim {
            if a > 0.0 {
                j[(0, c)] = (u * jf[(0, c)] + v * jf[(1, c)]) / a;
            }
            if r > 0.0 {
                j[(1, c)] = x[c] / r;
            }
        }
        (vec![a - g.eta, r - g.epsilon], j)
    };
    let mut min_fr: Option<f64> = None;
    let mut boundary_samples = 0;
    for _ in 0..n {
        let s: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let s: Vec<f64> = s.iter().map(|c| c * g.epsilon / norm(&s)).collect();
        if let Some(p) = newton_project(&s, boundary, 1e-12, 60, 1) {
            let x = p.point;
            let mut jfr = DMatrix::zeros(3, dim);
            jfr.rows_mut(0, 2).copy_from(&g.jacobian(&x));
            for c in 0..dim {
                jfr[(2, c)] = 2.0 * x[c];
            }
            let s = sigma_min(&jfr);
            min_fr = Some(min_fr.map_or(s, |m| m.min(s)));
            boundary_samples += 1;
        }
    }

    let probably_regular =
        min_f > REGULARITY_FLOOR && min_fr.is_none_or(|m| m > REGULARITY_FLOOR);
    Ok(RegularityProbe {
        samples: n,
        boundary_samples,
        min_sigma_f: min_f,
        min_sigma_fr: min_fr,
        probably_regular,
        note: "sampled heuristic; does not certify the Milnor conditions".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    use crate::milnor::Monomial;

    #[test]
    fn brieskorn_probably_regular() {
        let g = Germ::brieskorn(2, 3)
            .unwrap()
            .with_tube_unchecked(0.5, 1e-3)
            .unwrap();
        let p = regularity_probe(&g, 1000, 1).unwrap();
        assert!(p.probably_regular, "{p:?}");
        assert!(p.boundary_samples > 0);
        assert!(p.min_sigma_f >= 0.0 && p.min_sigma_fr.unwrap() >= 0.0);
    }

    #[test]
    fn product_germ_near_origin_reports_small_sigma() {
        // f = z·w; Df = (w, z) vanishes at the origin
        let g = Germ::new(
            "z*w",
            2,
            vec![Monomial {
                coeff: Complex64::new(1.0, 0.0),
                exponents: vec![1, 1],
            }],
            vec![1, 1],
            2,
            0.5,
            Some(1e-14),
        )
        .unwrap();
        let p = regularity_probe(&g, 1000, 2).unwrap();
        assert!(p.min_sigma_f < REGULARITY_FLOOR, "{p:?}");
        assert!(!p.probably_regular);
    }

    #[test]
    fn needs_enough_probes() {
        let g = Germ::power(2).unwrap();
        assert!(regularity_probe(&g, 10, 0).is_err());
    }
}
