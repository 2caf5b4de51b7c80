//! Steady-state thermodynamics of a double quantum dot heat engine that is
//! continuously monitored by a quantum point contact.
//!
//! The crate is layered bottom-up:
//!
//! - [`numkernel`]: dense complex matrices, matrix exponential, eigensystems
//!   and the Drazin inverse.
//! - [`model`]: fermionic mode operators, the dot Hamiltonian, reservoir and
//!   detector units and their couplings.
//! - [`lindblad`]: the local master equation, its steady state and time
//!   evolution.
//! - [`collision`]: the repeated-interactions picture that reproduces the
//!   master equation from explicit unitary collisions.
//! - [`thermo`]: heat, work and particle currents, efficiency and entropy
//!   production.
//! - [`fcs`]: counting statistics of the hot-reservoir exchange and the
//!   uncertainty-relation ratio.
//! - [`config`] and [`sweep`]: run configuration and measurement-strength
//!   sweeps used by the `dqd` command-line tool; [`sample`] draws seeded
//!   random parameter sets.

pub mod collision;
pub mod config;
pub mod error;
pub mod fcs;
pub mod lindblad;
pub mod model;
pub mod numkernel;
pub mod sample;
pub mod sweep;
pub mod thermo;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/master-equation.md")]
    mod master_equation {}
    #[doc = include_str!("../../../book/src/collisions.md")]
    mod collisions {}
    #[doc = include_str!("../../../book/src/thermodynamics.md")]
    mod thermodynamics {}
    #[doc = include_str!("../../../book/src/counting-statistics.md")]
    mod counting_statistics {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
}
