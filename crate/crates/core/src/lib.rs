// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation of a two-element artificial molecule on a waveguide that
//! emits, absorbs and transmits single itinerant photons directionally.
//!
//! The crate integrates the time-dependent master equation of the molecule,
//! evaluates the outgoing photon fluxes through input–output relations, and
//! sweeps the parameters that control directionality and pulse fidelity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod controls;
pub mod dynamics;
pub mod error;
pub mod linop;
pub mod molecule;
pub mod observables;
pub mod output;
pub mod protocols;
pub mod sweeps;

pub use error::{Error, Result};

#[cfg(test)]
mod test_support;
