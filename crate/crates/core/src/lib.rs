//! Design and verification toolkit for microwave-dressed Rydberg
//! multi-qubit blockade gates.
//!
//! The crate covers the full design loop:
//!
//! - [`dataset`]: Rydberg level structure (energies, dipole moments) input.
//! - [`dressing`]: dressed `|c>` / `|t>` states, drive solving, light shifts.
//! - [`interactions`]: the rotating-frame dipole-dipole operator on the
//!   two-atom dressed manifold and its matrix elements and bounds.
//! - [`vdw`]: dressed van der Waals coefficients by Floquet second-order
//!   perturbation theory, an exact-diagonalization oracle, parameter scans,
//!   and simultaneous-zero finding.
//! - [`errormodel`]: gate error budgets (decay, imperfect blockade, residual
//!   van der Waals) and their optimization over the gate Rabi frequency.
//! - [`ghzplan`]: square-lattice GHZ growth schedules with per-step blockade
//!   statistics and cumulative error estimates.
//! - [`circuits`]: exact unitary and sparse-state verification of the
//!   multi-qubit gate constructions.
//!
//! All numerics are generic over the [`scalar::Scalar`] floating type;
//! the `*64` aliases below pin `f64`, which every documented tolerance
//! assumes.

pub mod circuits;
pub mod dataset;
pub mod dressing;
pub mod errormodel;
pub mod ghzplan;
pub mod interactions;
pub mod scalar;
pub mod vdw;

pub use scalar::{Cx, Scalar};

/// Complex `f64`.
pub type C64 = num_complex::Complex<f64>;

/// `f64` level dataset.
pub type LevelDataset64 = dataset::LevelDataset<f64>;
/// `f64` dressed triple.
pub type DressedTriple64 = dressing::DressedTriple<f64>;
/// `f64` drive configuration.
pub type DriveConfig64 = dressing::DriveConfig<f64>;
/// `f64` two-atom dipole-dipole operator.
pub type PairOperator64 = interactions::PairOperator<f64>;
/// `f64` pair geometry.
pub type Geometry64 = interactions::Geometry<f64>;
/// `f64` channel list for the perturbative sum.
pub type ChannelSet64 = vdw::ChannelSet<f64>;
/// `f64` second-order result.
pub type C6Result64 = vdw::C6Result<f64>;
/// `f64` parameter-plane scan.
pub type C6Scan64 = vdw::scan::C6Scan<f64>;
/// `f64` error budget.
pub type ErrorBudget64 = errormodel::ErrorBudget<f64>;
/// `f64` GHZ growth plan.
pub type GrowthPlan64 = ghzplan::GrowthPlan<f64>;
/// `f64` dense unitary.
pub type DenseUnitary64 = circuits::DenseUnitary<f64>;
/// `f64` sparse state.
pub type SparseState64 = circuits::SparseState<f64>;
