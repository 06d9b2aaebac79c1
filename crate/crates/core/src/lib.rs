//! Motion planners on spheres and their pullbacks along Milnor tube
//! fibrations and other work maps.
//!
//! The modules build on each other: [`geometry`] provides points, charts and
//! serializable paths; [`sphere_planner`] covers `S^m × S^m` with two or three
//! regions; [`fibration`] lifts those plans along a work map; [`milnor`]
//! supplies weighted-homogeneous germs and their tubes; [`verify`] runs
//! contract suites and issues certificates.

pub mod fibration;
pub mod geometry;
pub mod milnor;
mod numerics;
pub mod sphere_planner;
pub mod verify;

pub use fibration::{
    lift, pullback_planner, rr_arm_workmap, ContinuationParams, LiftError, LiftingOracle, MapKind,
    NumericLift, TaskingPlanner, WorkMap,
};
pub use geometry::{EuclidPoint, GeometryError, PathError, PathExpr, SpherePoint, Sweep};
pub use milnor::{hopf_germ, tube_fibration, Germ, MilnorError, TriState, TubePoint};
pub use sphere_planner::{build_planner, PlanError, Region, RegionKind, SpherePlanner};
