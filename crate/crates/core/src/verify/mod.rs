//! Contract suites, continuity probes, and TC / sectional-number certificates.

mod certificate;
mod continuity;
mod suite;

pub use certificate::{
    certify_sec, certify_tc, planner_bound_consistent, sphere_tc, Certificate, CertificateInputs,
    FibrationFacts, Flag, FlagSource, Justification, Parity, Quantity,
};
pub use continuity::{
    continuity_all, continuity_probe, path_deviation, ContinuityRow, ContinuityTable, DEFAULT_PAIRS,
    DEFAULT_SCALES,
};
pub use suite::{
    query_rng, run_contract_suite, sample_goal, FailureEntry, FailureKind, GoalConstraint, SuiteConfig,
    SuitePlanner, VerificationReport, DEFAULT_PATH_SAMPLES, DEFAULT_PROJECTION_KNOTS, SPHERE_ENDPOINT_TOL,
};

use thiserror::Error;

use crate::geometry::{GeometryError, PathError};
use crate::sphere_planner::PlanError;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("rule needs {expected}, got p = {got}")]
    WrongCodomain { expected: &'static str, got: usize },
    #[error("a fiber sample has at least one component")]
    NoComponents,
    #[error("{0} is not a tube fibration")]
    NotFibration(String),
    #[error("no region with index {0}")]
    NoSuchRegion(usize),
    #[error("no interior queries found in region {0}")]
    RegionEmpty(usize),
    #[error("scales must be positive and well below the margin")]
    BadScales,
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
