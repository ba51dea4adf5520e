//! Numerical core for frequency-bin entangled photon pairs.
//!
//! Two electro-optic phase modulators, one per photon, scatter an
//! energy-entangled pair into frequency sidebands. This crate computes the
//! resulting bin-pair coincidence probabilities, emulates the photon-counting
//! experiment that measures them, and evaluates a Clauser-Horne Bell statistic
//! built from four such measurements.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bell;
pub mod bessel;
pub mod biphoton;
pub mod error;
pub mod experiment;
pub mod modulator;
pub mod optim;

pub use bessel::bessel_j;
pub use biphoton::{
    coincidence_amplitude, coincidence_probability, distribution, effective_modulation,
    truncation_order, visibility, BinDistribution, FrequencyGrid,
};
pub use error::{Diagnostic, Error, Result};
pub use modulator::{
    sideband_coefficient, sideband_spectrum, ModulatorSettings, SidebandCoefficient,
};
