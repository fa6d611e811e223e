//! Simulation of one-dimensional matter-wave diffraction in time (DIT) and
//! two-electron Hanbury Brown–Twiss (HBT) coincidence spectra for partially
//! coherent pulsed electron sources.
//!
//! The crate is organised around the stages of the calculation:
//!
//! * [`propagation`] — free-space path-integral kernel, temporal-slit
//!   amplitude quadrature, single- and double-slit DIT spectra, and the
//!   analytic consistency predictors (source frequency, first zeros).
//! * [`coincidence`] — two-electron joint detection probability densities,
//!   reduction to delay spectra P(τ), partial-coherence mixtures for
//!   polarized/unpolarized sources, and the numeric HBT contrast.
//! * [`beamstats`] — closed-form analytics: interval count, degeneracy,
//!   contrasts, reduced count rates, the single/two-electron criterion and
//!   Poissonian multielectron averaging.
//! * [`decoherence`] — the entangled pair⊗emitter state, partial traces and
//!   the resulting partially coherent density matrices, in exact rational
//!   arithmetic.
//! * [`scenarios`] — named scenario runners with JSON configuration and
//!   deterministic CSV/SVG emission.

pub mod beamstats;
pub mod coincidence;
pub mod constants;
pub mod decoherence;
pub mod error;
pub mod propagation;
pub mod scenarios;
pub mod svg;
pub mod units;

pub use error::{Error, Result};
pub use propagation::PhysicalParams;
