// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulator for witness-coupled environments.
//!
//! A bipartite qubit pair couples to an environment through an interaction
//! proportional to an entanglement witness `W`. When `W` commutes with the
//! system Hamiltonian its expectation is frozen and coarse environment
//! observables drift at a rate set by the sign of `⟨W⟩`.

pub mod cavity;
pub mod cli;
pub mod error;
pub mod fock;
pub mod gas;
pub mod ode;
pub mod operator;
pub mod protocol;
pub mod radiation;
pub mod states;
pub mod trajectory;
pub mod witness;

pub use error::{Error, Result};
pub use operator::{DensityMatrix, Operator, C64};
pub use trajectory::Trajectory;
