//! Magnon-mediated photon–photon coupling in planar hybrid resonators.
//!
//! The crate models a single ferromagnetic-resonance (magnon) mode coupled to
//! a set of inverted-split-ring photon modes. It provides
//!
//! * the Kittel dispersion and complex magnon/photon frequencies
//!   ([`magnon`], [`photon`]),
//! * coupling-constant algebra and the hybrid eigenproblem, both the pairwise
//!   closed form and the full multimode determinant ([`coupling`]),
//! * |S21|(H, f) transmission maps ([`transmission`]),
//! * the frequency-gap formula and CIT/CIA phase diagrams ([`phasemap`]),
//!   plus per-coupling-centre regime analysis ([`centers`]),
//! * ridge extraction and dispersion fitting ([`fitting`]),
//! * configuration and result files ([`io`]) and the command runners behind
//!   the `hybrid-magnonics` binary ([`cli`]).
//!
//! Fields are μ0H in tesla, user-facing frequencies are in GHz and complex
//! angular frequencies are in rad/s with the decaying convention
//! `ω̃ = ω − iαω`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod centers;
pub mod cli;
pub mod coupling;
mod error;
pub mod fitting;
pub mod io;
pub mod magnon;
pub mod phasemap;
pub mod photon;
pub mod transmission;
pub mod units;

pub use error::{Error, Result};

pub use num_complex::Complex64;
