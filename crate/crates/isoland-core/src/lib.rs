//! Radial numerical laboratory for the isotropic homogeneous Landau equation
//! with very soft potentials (interaction exponent γ ∈ [−d, −2], d ≥ 3).
//!
//! The crate evolves non-negative radially symmetric densities under
//!
//! ```text
//! ∂t f = div(a[f]∇f − f∇a[f]) = a[f]Δf − (2+γ) f h[f],
//! ```
//!
//! where `a[f] = c_{d,γ} (f ∗ |v|^{2+γ})` and `h[f] = C(d,d+γ) (f ∗ |v|^γ)`
//! is the Riesz potential of `f`. Both coefficients are computed exactly via
//! the 1-D radial reduction of the spherical convolution. On top of the
//! solver sits a verification bench for the weighted Hardy / Poincaré
//! inequalities, the Rayleigh eigenvalue `Λ_iso`, Sawyer–Wheeden cube
//! averages, weighted Sobolev and ε-Poincaré inequalities, and a Moser
//! iteration diagnostic.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion CLI
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod evolve;
pub mod grid;
pub mod inequalities;
pub mod linalg;
pub mod moser;
pub mod params;
pub mod potentials;

pub use error::CoreError;
pub use grid::{Grading, RadialField, RadialGrid};
pub use params::Params;
pub use potentials::PotentialPair;

/// Crate result alias.
pub type Result<T> = core::result::Result<T, CoreError>;
