//! Numerical laboratory for Lagrangian mean curvature flow of torus-invariant
//! Lagrangians built from moment maps.
//!
//! The modules follow the mathematical layers: [`geometry`] holds the ambient
//! Kähler structure and numerical primitives, [`flat`] and [`ale`] the two
//! families of models, [`flow`] the evolution of real-slice seeds,
//! [`curvature`] an independent finite-difference mean curvature oracle and
//! [`singularity`] the analysis of finite-time singularities. [`cli`] runs
//! configured scenarios and writes their artifacts.

pub mod ale;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod flat;
pub mod flow;
pub mod geometry;
pub mod singularity;
pub mod verify;

pub use error::{LmcfError, Result};
