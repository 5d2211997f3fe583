//! Simulation and analysis of time-evolving polarization-entangled photon
//! pairs emitted by a quantum-dot biexciton/exciton cascade.
//!
//! Units are fixed across the crate: time in picoseconds, energy in µeV,
//! and phases follow `Φ = S·τ/ℏ` with [`HBAR_UEV_PS`].
//!
//! Module map:
//! - [`types`]: bases, Bell targets, the two-photon density matrix, source parameters.
//! - [`density`]: `ρ(τ)`, fidelities, correlation degrees, gate-averaged states.
//! - [`gating`]: gate windows, periodic gate sets, retained fractions.
//! - [`montecarlo`]: seeded coincidence simulation, tallies and estimators.
//! - [`spectral`]: truncated-decay spectra and linewidths.
//! - [`timetag`], [`scenario`]: file formats and the scenario runner behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod density;
pub mod error;
pub mod gating;
pub mod montecarlo;
pub mod oscillation;
pub mod quadrature;
pub mod scenario;
pub mod spectral;
pub mod timetag;
pub mod types;

pub use density::{
    correlation_degree, evolving_state_fidelity, fidelity, fidelity_curve,
    fidelity_from_correlations, gated_state, rho_at, CurvePoint, GatedStateSummary,
};
pub use error::{Error, Result};
pub use gating::{periodic_gates, retained_fraction, Gate, GateSet, GateWindow};
pub use montecarlo::{
    estimate, scan, simulate_pairs, tally, BasisPlan, CorrelationCounts, Estimates,
    FidelityEstimate, Outcome, PairEvent, ScanPoint,
};
pub use spectral::{fwhm, truncated_decay_spectrum, EnergyGrid, Spectrum};
pub use types::{
    analyzer_states, bell_vector, BellTarget, CoherenceModel, PolarizationBasis, SourceModel,
    TwoPhotonDensityMatrix, HBAR_UEV_PS,
};
