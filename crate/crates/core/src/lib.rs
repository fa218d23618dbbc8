//! Exact simulation of a qubit monitored by a spin environment whose spins
//! also interact with each other.
//!
//! The crate computes reduced density matrices of environment fragments,
//! their entropies, the fragment-averaged mutual information `Ī(#F)` between
//! the system and a fragment, and the redundancy `R_δ` of the information the
//! environment holds about the system. Closed forms are checked against a
//! brute-force state-vector oracle and against Haar-random baselines.
//!
//! * [`model`]: parameters, couplings, fragments, time grids, seeded streams.
//! * [`analytic`]: decoherence factors and their long-time statistics.
//! * [`rdm`]: reduced density matrices, spectra, entropies, distances.
//! * [`info`]: mutual-information profiles and redundancy.
//! * [`baselines`]: Haar-random states, Page entropy and inequality bounds.
//!
//! All entropies are in nats.

pub mod analytic;
pub mod baselines;
mod error;
pub mod info;
pub mod model;
pub mod rdm;

pub use error::{Error, Result};

// The guide's code listings run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/decoherence.md")]
    mod decoherence {}
    #[doc = include_str!("../../../book/src/density-matrices.md")]
    mod density_matrices {}
    #[doc = include_str!("../../../book/src/mutual-information.md")]
    mod mutual_information {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
