//! Numerical laboratory for degenerate Ginzburg–Landau energies
//! `J(v, Ω) = ∫_Ω |∇v|^p + W(v)` with `W(v) ~ (1 - v²)^m` and `1 < p < m`.
//!
//! The crate computes constrained minimizers on uniform lattices, builds the
//! one-dimensional comparison, heteroclinic and super-solution profiles, and
//! measures the quantities behind density estimates for the level sets of
//! minimizers: phase volumes, potential mass, the weighted mixture sequence,
//! competitor energies and the discrete induction inequality.

pub mod audit;
pub mod error;
pub mod grid;
pub mod interp;
pub mod minimizer;
pub mod pipeline;
pub mod potential;
pub mod profile1d;
pub mod quadrature;
pub mod snapshot;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{Field, Grid, Region};
pub use potential::{EnergyParams, Potential};
pub use profile1d::{Profile1D, ProfileKind};
