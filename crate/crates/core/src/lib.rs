//! Numerical toolkit for the singular elliptic operators `Δ − 1`,
//! `Δ − 1/r² − 1` and `Δ − 1/r²` on the plane, posed between doubly
//! weighted Sobolev spaces.
//!
//! Functions are represented by their angular Fourier modes sampled on a
//! log-spaced radial grid. Each mode is inverted with an explicit Green's
//! function (modified Bessel functions for the Helmholtz-type operators,
//! power laws for the Euler operator), the weight pair `(σ, γ)` is
//! classified into Fredholm regimes with explicit kernel and cokernel
//! bases, and resonant weights are probed with Weyl sequences.

pub mod error;
pub mod fredholm;
pub mod green;
pub mod grid;
pub mod io;
pub mod modes;
pub mod quadrature;
pub mod special;
pub mod suite;
pub mod verify;
pub mod weyl;

pub use error::{Error, Result};
pub use fredholm::{classify, BasisElement, FredholmReport, Parity, RadialForm, Side, Status};
pub use green::{solve_field, solve_mode, ModeSolution, SolveResult};
pub use grid::{bracket, weight_b, RadialGrid, SpaceFamily, SpaceKind, WeightPair, WeightedNorm};
pub use modes::{Field2D, ModeFunction, OperatorKind};
pub use special::BesselOrder;
pub use suite::{run_suite, Suite, SuiteReport};

/// Schema tag written at the top of every JSON report.
pub const SCHEMA: &str = "fredholm-disk/1";
