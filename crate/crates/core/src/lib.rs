//! Gauge-covariant discretization of the two-dimensional Ginzburg-Landau
//! functional with a variable applied magnetic field, the reduced cell
//! problem behind the limiting bulk energy `g(b)`, and a harness comparing
//! minimizers against bulk-energy predictions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod dst;
pub mod energy;
pub mod error;
pub mod grid;
pub mod limit_g;
pub mod minimize;
pub mod ncg;
pub mod potential;

pub use asymptotics::{
    build_lattice, bulk_prediction, riemann_bounds, tiled_trial_state, Experiment, ExperimentRow,
    Lattice, TrialState,
};
pub use energy::{gl_energy, reduced_energy, EnergyParts, GLParams};
pub use error::{GlError, Result};
pub use grid::{Bc, ComplexField, GaugeField, Grid2D, MagneticProfile, NodeRect, Point};
pub use limit_g::{build_g_table, g_eval, GTable};
pub use minimize::{minimize_full, minimize_reduced, MinimizeOptions, Resolution};
pub use potential::{build_f, local_gauge_phase, LocalPhase};
