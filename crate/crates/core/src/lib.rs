//! Finite metric spaces and the Ptolemy inequality.
//!
//! Spaces are read in exact rational or floating-point mode. The crate checks
//! metric axioms, Ptolemy's inequality over all or sampled quadruples,
//! Möbius equivalence and distance convexity, builds midpoint completions
//! with dyadic chains, and probes normed planes for flatness and weak angles.

pub mod angle;
pub mod completion;
pub mod io;
pub mod metric;
pub mod model;
pub mod ptolemy;
pub mod quadruple;
pub mod scalar;
pub mod trace;

pub use metric::{build_space, validate, validate_metric, FiniteMetricSpace, ValidationReport};
pub use ptolemy::{check_ptolemy, PtolemyReport, Strategy};
pub use quadruple::Quadruple;
pub use scalar::{Exact, Mode, Scalar, DEFAULT_TOLERANCE};
