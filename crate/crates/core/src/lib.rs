//! Numerical simulator and verification harness for a locally constrained
//! inverse Hessian-quotient flow of closed spacelike graph hypersurfaces in
//! de Sitter space, with quermassintegral monitors and the associated
//! Alexandrov–Fenchel inequality check.

pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod initial;
pub mod numeric;
pub mod quermass;
pub mod symfun;

pub use error::{Error, Result};
pub use flow::{FlowConfig, GraphState, Monitors, StepReport, Trajectory};
pub use geometry::{FrameTensor, GeomConfig, GeometryFields, WarpProfile};
pub use grid::{DerivativeBundle, Grid, GridKind, ScalarField};
pub use initial::Mode;
pub use quermass::{AfReport, QuermassVector, SliceFunctions};
pub use symfun::{ConeReport, CurvatureVector, SymmetricValues};
