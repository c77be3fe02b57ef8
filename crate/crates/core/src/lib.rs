//! Poisson-geometric verification and angle-polarized quantization of
//! noncommutative integrable systems written in action-angle coordinates.
//!
//! * [`expr`]: symbolic scalar expressions with exact differentiation.
//! * [`poisson`]: bivectors, brackets, Hamiltonian vector fields, corank analysis.
//! * [`so3`]: the spherical-top model on the dual of so(3) and its action-angle chart.
//! * [`quantize`]: Fourier-in-angle operator algebra, spectra, and residual checks.
//! * [`verify`]: the full check battery and its JSON report.

pub mod chart;
pub mod expr;
pub mod poisson;
pub mod quantize;
pub mod so3;
pub mod verify;

pub use chart::{Chart, CoordKind, Coordinate};
pub use expr::{Point, ScalarExpr};
