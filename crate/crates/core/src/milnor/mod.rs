//! Weighted-homogeneous complex germs and their Milnor tube fibrations.
//!
//! A germ `f(z) = Σ c·z^m` is weighted homogeneous of type `(w; d)` when every
//! monomial satisfies `Σ_j w_j·m_j = d`. The circle action
//! `ρ_θ(z)_j = e^{i·w_j·θ}·z_j` then satisfies `f(ρ_θ z) = e^{i·d·θ}·f(z)`
//! and preserves `‖z‖`, so it lifts any path on the base circle `S¹_η` to the
//! tube `B_ε ∩ f⁻¹(S¹_η)` in closed form.

mod fiber;
mod probe;

pub use fiber::{
    cycle_lengths, monodromy_components, sample_fiber, sample_fiber_of, sample_link,
    FiberSample, LinkSample,
};
pub use probe::{regularity_probe, RegularityProbe, REGULARITY_FLOOR};

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibration::{MapKind, WorkMap};
use crate::geometry::{norm, PathExpr, Sweep};

/// Default Milnor-ball radius.
pub const DEFAULT_EPSILON: f64 = 0.5;
/// Tolerance on `| ‖f(x)‖ − η |` for points of the tube.
pub const TUBE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MilnorError {
    #[error("invalid germ: {0}")]
    InvalidGerm(String),
    #[error("monomial {index} has weighted degree {weighted} but the germ has degree {degree}")]
    NotWeightedHomogeneous {
        index: usize,
        weighted: u64,
        degree: u32,
    },
    #[error("eta = {eta} exceeds the default bound {bound} (epsilon^(d/min w) / 10)")]
    EtaTooLarge { eta: f64, bound: f64 },
    #[error("need at least {min} seeds, got {got}")]
    TooFewSeeds { min: usize, got: usize },
    #[error("only {converged} of {seeds} seeds converged onto the fiber")]
    TooFewPoints { converged: usize, seeds: usize },
    #[error("monodromy endpoint of component {component} matches {matches} components")]
    AmbiguousAssignment { component: usize, matches: usize },
    #[error("monodromy assignment is not a permutation")]
    NotPermutation,
    #[error("fiber sample must lie over angle 0")]
    WrongBasePoint,
    #[error("work map has no Milnor ball to sample from")]
    NoBall,
    #[error("point is not on the Milnor tube: {0}")]
    OffTube(String),
    #[error("could not draw a tube point after {0} attempts")]
    SamplerExhausted(usize),
    #[error("germ file: {0}")]
    Io(#[from] std::io::Error),
    #[error("germ json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Yes / no / unknown, for facts a user may declare or a sampler may suggest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GermFlags {
    #[serde(default)]
    pub link_nonempty: TriState,
    #[serde(default)]
    pub pi_trivial: TriState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    /// Serialized as `[re, im]`.
    pub coeff: Complex64,
    pub exponents: Vec<u32>,
}

/// On-disk form of a germ; `eta` and `flags` may be omitted.
#[derive(Debug, Clone, Deserialize)]
struct GermFile {
    name: String,
    complex_vars: usize,
    monomials: Vec<Monomial>,
    weights: Vec<u32>,
    degree: u32,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default)]
    eta: Option<f64>,
    #[serde(default)]
    flags: GermFlags,
    #[serde(default)]
    eta_override: bool,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// A weighted-homogeneous polynomial germ `(C^k, 0) → (C, 0)` with its tube
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GermFile")]
pub struct Germ {
    pub name: String,
    pub complex_vars: usize,
    pub monomials: Vec<Monomial>,
    pub weights: Vec<u32>,
    pub degree: u32,
    pub epsilon: f64,
    pub eta: f64,
    pub flags: GermFlags,
    /// Set when `eta` exceeds the default bound on purpose.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub eta_override: bool,
}

impl TryFrom<GermFile> for Germ {
    type Error = MilnorError;

    fn try_from(f: GermFile) -> Result<Self, Self::Error> {
        let g = match (f.eta_override, f.eta) {
            (true, Some(eta)) => Germ::new(
                f.name,
                f.complex_vars,
                f.monomials,
                f.weights,
                f.degree,
                f.epsilon,
                None,
            )?
            .with_tube_unchecked(f.epsilon, eta)?,
            _ => Germ::new(
                f.name,
                f.complex_vars,
                f.monomials,
                f.weights,
                f.degree,
                f.epsilon,
                f.eta,
            )?,
        };
        Ok(g.with_flags(f.flags))
    }
}

impl Germ {
    /// Validates weighted homogeneity on the integer data and the tube
    /// parameters. A missing `eta` defaults to `ε^{d / min w} / 10`, which is
    /// also the largest accepted value here.
    pub fn new(
        name: impl Into<String>,
        complex_vars: usize,
        monomials: Vec<Monomial>,
        weights: Vec<u32>,
        degree: u32,
        epsilon: f64,
        eta: Option<f64>,
    ) -> Result<Self, MilnorError> {
        let mut g = Self {
            name: name.into(),
            complex_vars,
            monomials,
            weights,
            degree,
            epsilon,
            eta: 0.0,
            flags: GermFlags::default(),
            eta_override: false,
        };
        g.check_algebra()?;
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(MilnorError::InvalidGerm(format!("epsilon = {epsilon}")));
        }
        let bound = g.eta_bound();
        let eta = eta.unwrap_or(bound);
        if !(eta.is_finite() && eta > 0.0) {
            return Err(MilnorError::InvalidGerm(format!("eta = {eta}")));
        }
        if eta > bound {
            return Err(MilnorError::EtaTooLarge { eta, bound });
        }
        g.eta = eta;
        Ok(g)
    }

    /// Replaces the tube parameters without the `η` bound; a larger `η` is
    /// kept through serialization via `eta_override`.
    pub fn with_tube_unchecked(mut self, epsilon: f64, eta: f64) -> Result<Self, MilnorError> {
        if !(epsilon.is_finite() && epsilon > 0.0 && eta.is_finite() && eta > 0.0) {
            return Err(MilnorError::InvalidGerm(format!(
                "epsilon = {epsilon}, eta = {eta}"
            )));
        }
        self.epsilon = epsilon;
        self.eta = eta;
        self.eta_override = eta > self.eta_bound();
        Ok(self)
    }

    pub fn with_flags(mut self, flags: GermFlags) -> Self {
        self.flags = flags;
        self
    }

    /// `z^d` in one variable, weight 1.
    pub fn power(d: u32) -> Result<Self, MilnorError> {
        Self::new(
            format!("z^{d}"),
            1,
            vec![Monomial {
                coeff: Complex64::new(1.0, 0.0),
                exponents: vec![d],
            }],
            vec![1],
            d,
            DEFAULT_EPSILON,
            None,
        )
    }

    /// The Brieskorn–Pham germ `z^a + w^b` with weights `(b, a)/g`, degree `ab/g`.
    pub fn brieskorn(a: u32, b: u32) -> Result<Self, MilnorError> {
        let g = gcd(a, b);
        let (wz, ww, d) = (b / g, a / g, a * b / g);
        Self::new(
            format!("z^{a}+w^{b}"),
            2,
            vec![
                Monomial {
                    coeff: Complex64::new(1.0, 0.0),
                    exponents: vec![a, 0],
                },
                Monomial {
                    coeff: Complex64::new(1.0, 0.0),
                    exponents: vec![0, b],
                },
            ],
            vec![wz, ww],
            d,
            DEFAULT_EPSILON,
            None,
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self, MilnorError> {
        let file: GermFile = serde_json::from_str(s)?;
        Germ::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MilnorError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    fn check_algebra(&self) -> Result<(), MilnorError> {
        let bad = |m: &str| Err(MilnorError::InvalidGerm(m.to_string()));
        if self.complex_vars == 0 {
            return bad("complex_vars must be positive");
        }
        if self.weights.len() != self.complex_vars {
            return bad("one weight per complex variable");
        }
        if self.weights.contains(&0) || self.degree == 0 {
            return bad("weights and degree must be positive");
        }
        if self.monomials.is_empty() {
            return bad("no monomials");
        }
        for (i, m) in self.monomials.iter().enumerate() {
            if m.exponents.len() != self.complex_vars {
                return bad("exponent vector length differs from complex_vars");
            }
            if !(m.coeff.re.is_finite() && m.coeff.im.is_finite()) {
                return bad("non-finite coefficient");
            }
            let weighted: u64 = m
                .exponents
                .iter()
                .zip(&self.weights)
                .map(|(e, w)| u64::from(*e) * u64::from(*w))
                .sum();
            if weighted != u64::from(self.degree) {
                return Err(MilnorError::NotWeightedHomogeneous {
                    index: i,
                    weighted,
                    degree: self.degree,
                });
            }
        }
        if self.monomials.iter().all(|m| m.coeff == Complex64::new(0.0, 0.0)) {
            return bad("all coefficients vanish");
        }
        Ok(())
    }

    /// `ε^{d / min w} / 10`.
    pub fn eta_bound(&self) -> f64 {
        let wmin = *self.weights.iter().min().unwrap_or(&1);
        self.epsilon.powf(f64::from(self.degree) / f64::from(wmin)) / 10.0
    }

    /// Real ambient dimension `2·complex_vars`.
    pub fn real_dim(&self) -> usize {
        2 * self.complex_vars
    }

    pub fn eval_complex(&self, z: &[Complex64]) -> Complex64 {
        self.monomials
            .iter()
            .map(|m| {
                m.exponents
                    .iter()
                    .zip(z)
                    .fold(m.coeff, |acc, (e, zj)| acc * zj.powu(*e))
            })
            .sum()
    }

    /// `∂f/∂z_j` for every `j`.
    pub fn gradient_complex(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut grad = vec![Complex64::new(0.0, 0.0); self.complex_vars];
        for m in &self.monomials {
            for (j, g) in grad.iter_mut().enumerate() {
                let ej = m.exponents[j];
                if ej == 0 {
                    continue;
                }
                let mut term = m.coeff * f64::from(ej);
                for (k, (e, zk)) in m.exponents.iter().zip(z).enumerate() {
                    let p = if k == j { e - 1 } else { *e };
                    term *= zk.powu(p);
                }
                *g += term;
            }
        }
        grad
    }

    /// `f` on realified coordinates `(x_1, y_1, x_2, y_2, …)`, returned as `(Re f, Im f)`.
    pub fn eval(&self, x: &[f64]) -> [f64; 2] {
        let v = self.eval_complex(&to_complex(x));
        [v.re, v.im]
    }

    /// Realified Jacobian, a `2 × 2k` matrix.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let grad = self.gradient_complex(&to_complex(x));
        let n = self.real_dim();
        let mut j = DMatrix::zeros(2, n);
        for (k, g) in grad.iter().enumerate() {
            // Cauchy–Riemann: d(u + iv)/d(x + iy) = g
            j[(0, 2 * k)] = g.re;
            j[(0, 2 * k + 1)] = -g.im;
            j[(1, 2 * k)] = g.im;
            j[(1, 2 * k + 1)] = g.re;
        }
        j
    }

    /// The circle action `ρ_θ`.
    pub fn circle_act(&self, x: &[f64], theta: f64) -> Vec<f64> {
        crate::geometry::path::circle_action(&self.weights, x, theta)
    }

    /// The positive-real action `z_j ↦ s^{w_j}·z_j`, which scales `f` by `s^d`.
    pub fn radial_act(&self, x: &[f64], s: f64) -> Vec<f64> {
        let mut out = x.to_vec();
        for (w, z) in self.weights.iter().zip(out.chunks_exact_mut(2)) {
            let f = s.powi(*w as i32);
            z[0] *= f;
            z[1] *= f;
        }
        out
    }

    /// Draws a point of the tube `B_ε ∩ {|f| = η}` by rescaling a Gaussian
    /// sample along the positive-real action.
    pub fn random_tube_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, MilnorError> {
        const ATTEMPTS: usize = 10_000;
        for _ in 0..ATTEMPTS {
            let x: Vec<f64> = (0..self.real_dim())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let [u, v] = self.eval(&x);
            let val = u.hypot(v);
            if val < 1e-300 || !val.is_finite() {
                continue;
            }
            let s = (self.eta / val).powf(1.0 / f64::from(self.degree));
            let y = self.radial_act(&x, s);
            if norm(&y) <= self.epsilon {
                return Ok(y);
            }
        }
        Err(MilnorError::SamplerExhausted(ATTEMPTS))
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

/// A point of the Milnor tube of a work map together with its image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubePoint {
    pub point: Vec<f64>,
    pub value: Vec<f64>,
}

impl TubePoint {
    /// Checks `| ‖f(x)‖ − η | ≤ TUBE_TOL` and `‖x‖ ≤ ε + TUBE_TOL`.
    pub fn new(map: &WorkMap, x: Vec<f64>) -> Result<Self, MilnorError> {
        if x.len() != map.domain_dim() {
            return Err(MilnorError::OffTube(format!(
                "dimension {} != {}",
                x.len(),
                map.domain_dim()
            )));
        }
        let value = map.eval(&x);
        let gap = (norm(&value) - map.base_radius).abs();
        if gap > TUBE_TOL {
            return Err(MilnorError::OffTube(format!("| |f(x)| - eta | = {gap:e}")));
        }
        if let Some(eps) = map.ball_radius {
            if norm(&x) > eps + TUBE_TOL {
                return Err(MilnorError::OffTube(format!(
                    "|x| = {} exceeds epsilon = {eps}",
                    norm(&x)
                )));
            }
        }
        Ok(Self { point: x, value })
    }
}

/// The tube fibration `B_ε ∩ f⁻¹(S¹_η) → S¹_η` of a germ.
pub fn tube_fibration(g: &Germ) -> WorkMap {
    WorkMap {
        kind: MapKind::Germ(g.clone()),
        base_radius: g.eta,
        ball_radius: Some(g.epsilon),
    }
}

/// Lift of the uniform base arc `η·e^{i(φ₀ + Δφ·t)}` through `x₀`:
/// `t ↦ ρ_{Δφ·t/d}(x₀)`.
pub fn circle_action_lift(g: &Germ, x0: &TubePoint, delta_phi: f64) -> PathExpr {
    PathExpr::CircleActionLift {
        weights: g.weights.clone(),
        degree: g.degree,
        start: x0.point.clone(),
        sweep: Sweep::Uniform { delta: delta_phi },
    }
}

/// The Hopf map `(z, w) ↦ (2·Re(z·w̄), 2·Im(z·w̄), |z|² − |w|²)` with `η = 0.01`, `ε = 0.5`.
///
/// Since `‖f(x)‖ = ‖x‖²`, its tube over `S²_η` is the round sphere of radius `√η`.
pub fn hopf_germ() -> WorkMap {
    hopf_map(0.01, DEFAULT_EPSILON)
}

pub fn hopf_map(eta: f64, epsilon: f64) -> WorkMap {
    WorkMap {
        kind: MapKind::Hopf,
        base_radius: eta,
        ball_radius: Some(epsilon),
    }
}
