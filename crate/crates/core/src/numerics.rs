//! Minimum-norm linear solves and Newton projection onto level sets.

use nalgebra::DMatrix;

use crate::geometry::norm;

/// Minimum-norm least-squares solution of `J·x = rhs` through the SVD.
///
/// Works for wide (underdetermined) and tall (overdetermined) Jacobians;
/// singular values below `1e-14·σ_max` are treated as zero.
pub(crate) fn min_norm_solve(jac: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-14).max(f64::MIN_POSITIVE);
    let b = nalgebra::DVector::from_column_slice(rhs);
    match svd.solve(&b, eps) {
        Ok(x) => x.iter().copied().collect(),
        Err(_) => vec![0.0; jac.ncols()],
    }
}

/// Singular values in decreasing order.
pub(crate) fn singular_values(jac: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = jac.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value, counting missing rank as zero for wide or tall
/// matrices: a `p×n` map has `min(p, n)` singular values.
pub(crate) fn sigma_min(jac: &DMatrix<f64>) -> f64 {
    singular_values(jac).last().copied().unwrap_or(0.0)
}

/// `σ_min / σ_max`, zero for a vanishing matrix.
pub(crate) fn rcond(jac: &DMatrix<f64>) -> f64 {
    let s = singular_values(jac);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// Outcome of a Newton projection.
#[derive(Debug, Clone)]
pub(crate) struct Projected {
    pub point: Vec<f64>,
}

/// Gauss–Newton projection of `x0` onto `{F = 0}` with minimum-norm updates.
///
/// `system` returns the residual vector and Jacobian at a point. Stops once
/// the residual norm is below `tol` and then runs `polish` further steps so
/// that repeated projections onto an isolated point agree to roundoff.
pub(crate) fn newton_project<F>(
    x0: &[f64],
    system: F,
    tol: f64,
    max_iter: usize,
    polish: usize,
) -> Option<Projected>
where
    F: Fn(&[f64]) -> (Vec<f64>, DMatrix<f64>),
{
    let mut x = x0.to_vec();
    let mut extra = 0;
    for _ in 0..max_iter + polish {
        let (r, j) = system(&x);
        let rn = norm(&r);
        if !rn.is_finite() {
            return None;
        }
        if rn <= tol {
            if extra == polish {
                return Some(Projected { point: x });
            }
            extra += 1;
        }
        let dx = min_norm_solve(&j, &r);
        if dx.iter().all(|d| *d == 0.0) {
            return (rn <= tol).then_some(Projected { point: x });
        }
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
    }
    let (r, _) = system(&x);
    let rn = norm(&r);
    (rn <= tol).then_some(Projected { point: x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_wide_system() {
        // x + y = 2  → minimum-norm solution (1, 1)
        let j = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = min_norm_solve(&j, &[2.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_tall_system() {
        // x = 1, x = 3 → x = 2
        let j = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let x = min_norm_solve(&j, &[1.0, 3.0]);
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_measures() {
        let j = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.5]);
        assert_eq!(singular_values(&j), vec![3.0, 0.5]);
        assert!((rcond(&j) - 0.5 / 3.0).abs() < 1e-15);
        assert_eq!(sigma_min(&DMatrix::zeros(2, 3)), 0.0);
        assert_eq!(rcond(&DMatrix::zeros(2, 3)), 0.0);
    }

    #[test]
    fn projects_onto_circle() {
        let sys = |x: &[f64]| {
            (
                vec![x[0] * x[0] + x[1] * x[1] - 1.0],
                DMatrix::from_row_slice(1, 2, &[2.0 * x[0], 2.0 * x[1]]),
            )
        };
        let p = newton_project(&[0.3, 0.4], sys, 1e-14, 50, 1).unwrap();
        assert!((norm(&p.point) - 1.0).abs() < 1e-14);
        // radial projection: direction preserved
        assert!((p.point[0] / p.point[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_system_fails() {
        let sys = |x: &[f64]| {
            (
                vec![x[0] - 1.0, x[0] + 1.0],
                DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            )
        };
        assert!(newton_project(&[0.0], sys, 1e-9, 30, 0).is_none());
    }
}
