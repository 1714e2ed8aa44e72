//! Remote preparation of a one-qubit mixed state through a spin-1/2 XY chain.
//!
//! A sender controls the first two nodes of an open chain of N spins with
//! nearest-neighbor XY coupling; the receiver reads the last node. Because the
//! coupling conserves the number of flipped spins, a one-excitation initial
//! state evolves inside the (N+1)-dimensional subspace spanned by |0...0> and
//! the single-flip states |n>, and the whole protocol reduces to the N x N
//! symmetric tridiagonal block acting on those states.
//!
//! The crate splits along that structure: [`chain`] builds coupling profiles
//! and their one-excitation blocks, [`spectral`] diagonalizes the blocks and
//! evaluates transition amplitudes p_kj(t) together with two independent
//! verification oracles, [`statemap`] maps sender controls to the receiver's
//! density matrix and its (lambda, beta1, beta2) parameters, and [`region`]
//! explores what is creatable: optimal registration times, region maps,
//! minimal eigenvalues, and critical chain lengths. [`cli`] wires everything
//! into the `spinline` binary with deterministic CSV/JSON output.

pub mod chain;
pub mod check;
pub mod cli;
pub mod region;
pub mod spectral;
pub mod statemap;

mod error;

pub use error::{Error, Result};

pub(crate) mod fmt {
    /// Floats rendered with 17 significant digits, enough for exact f64
    /// round-trips in every emitted artifact.
    pub fn sig17(x: f64) -> String {
        format!("{x:.16e}")
    }
}
