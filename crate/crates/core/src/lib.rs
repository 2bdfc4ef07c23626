//! Desk-scale constructions of exponential instability for 2D elliptic
//! inverse problems.
//!
//! The crate builds ε-discrete families of perturbed defects ([`packing`]),
//! δ-nets of weighted operator matrices ([`opnet`]), the forward maps that
//! turn a defect into measurements ([`conductivity`], [`scattering`]) and
//! an experiment driver that searches for pairs of defects which are far
//! apart in Hausdorff distance but close in measurement space ([`engine`]).
//!
//! Everything is two-dimensional. Shapes are sampled profiles over a
//! segment or a circle ([`shapes`]); boundary data live in the real Fourier
//! basis of the unit circle ([`spectral`]).

pub mod conductivity;
pub mod engine;
pub mod io;
pub mod linalg;
pub mod opnet;
pub mod packing;
pub mod scattering;
pub mod shapes;
pub mod spectral;

pub use conductivity::{ElectrodeConfig, InclusionProblem};
pub use engine::{InstabilityProblem, InstabilityReport, ProblemKind};
pub use io::ExperimentConfig;
pub use scattering::{FarFieldMatrix, ObstacleProblem};
pub use opnet::{ClassConstants, NetParams, OperatorMatrix};
pub use packing::{PackingFamily, Pattern, PerturbationClass};
pub use shapes::{Shape, ShapeKind};
pub use spectral::{BasisElement, BasisSpec, DomainKind};
