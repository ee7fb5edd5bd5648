//! Numerical laboratory for the spectral theory of the periodic KdV and KdV2
//! equations.
//!
//! The crate computes the Floquet discriminant of Hill's operator
//! `L(q) = -d²/dx² + q` on the unit circle, the periodic/Dirichlet/critical
//! spectra, the action variables, the contour moments built from the Floquet
//! exponent and the ψ-functions, and from those the KdV and KdV2 frequencies.
//! Independent cross-checks are provided by a fourth-order Birkhoff normal form
//! ([`bnf`]), an exponential-integrator pseudo-spectral solver ([`pde`]), and the
//! sequence-space utilities in [`seqspace`] and [`flow`].
//!
//! All spectral quantities are computed for real trigonometric-polynomial
//! potentials ([`potentials::Potential`]).

pub mod bnf;
pub mod error;
pub mod flow;
pub mod hill;
pub mod invariants;
pub mod io;
pub mod numerics;
pub mod ode;
pub mod pde;
pub mod potentials;
pub mod roots;
pub mod seqspace;

pub use error::{Error, Result};
pub use hill::{discriminant, periodic_spectrum, DiscriminantValue, HillSpectrum};
pub use potentials::Potential;
