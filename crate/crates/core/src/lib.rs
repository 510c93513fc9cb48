//! Heat kernels, covariant Schrödinger operators and compactness
//! certificates on weighted graphs.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod compactness;
pub mod control;
pub mod demo;
pub mod error;
pub mod graph;
pub mod heat;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod random;
pub mod report;

pub use bundle::{EndomorphismField, Frame, HermitianBundle, Section, Split, UnitaryConnection};
pub use compactness::{CompactnessReport, PotentialDecomposition};
pub use control::{ControlPair, TimeControl, Verdict};
pub use error::{Error, Result};
pub use graph::{Exhaustion, Measure, ValidationReport, WeightedGraph};
pub use heat::{AxiomReport, HeatKernel};
pub use operators::{Domain, OperatorKind, OperatorMatrix};
pub use report::{LedgerRow, Location, Tolerances, SCHEMA_VERSION};
