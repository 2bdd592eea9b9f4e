//! Modelling toolkit for a cavity electro-optic microwave-to-optical transducer.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantities`]: constants, unit conversions and the validated mode/device records.
//! - [`numerics`]: quadrature, root finding, ODE integration and least squares used by the models.
//! - [`eo_model`]: coupling rates, cooperativity and conversion efficiency.
//! - [`superconductor`]: BCS gap, Mattis–Bardeen conductivity and quasiparticle thermometry.
//! - [`resonator`]: coplanar-waveguide, spiral-inductor and slot-waveguide circuit models.
//! - [`dynamics`]: pulsed-illumination quasiparticle rate equations.
//! - [`spectra`]: resonance fitting and heterodyne efficiency calibration.
//!
//! Internally every rate is angular (rad/s) and every quantity SI, except quasiparticle
//! densities which follow the field's convention of μm⁻³. Lineshapes in [`spectra`] work
//! in Hz because they are fitted to measured frequency grids. Serialized records use Hz.

pub mod dynamics;
pub mod eo_model;
mod error;
pub mod numerics;
pub mod quantities;
pub mod resonator;
pub mod scenarios;
pub mod spectra;
pub mod superconductor;

pub use error::{Error, Result};
