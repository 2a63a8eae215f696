//! Hybrid mimetic mixed gradient schemes for two-species reaction-diffusion
//! systems on polygonal meshes of the unit square.
//!
//! The pipeline is [`mesh`] → [`hmm`] (discrete spaces and reconstructions) →
//! [`solver`] (implicit Euler with Newton), with [`diagnostics`] measuring the
//! discretisation and [`verify`] running manufactured-solution studies.

pub mod app;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod hmm;
pub mod kinetics;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use hmm::{CellField, DiamondField, DiscreteVector, HmmDiscretisation};
pub use kinetics::{brusselator, BrusselatorParams, KineticsModel};
pub use mesh::{PolytopalMesh, Point};
pub use solver::{NewtonConfig, ProblemSpec, State, StepReport, TimeGrid};
