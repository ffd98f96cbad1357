//! Spectral analysis of the Laplacian on the half-band
//! `{x, y >= 0, |x - y| <= d}` with Robin conditions on the axes and
//! Dirichlet conditions on the diagonal walls.
//!
//! The pipeline is mesh ([`geometry`]) -> assembly ([`fem`]) -> sparse
//! eigensolve ([`eigen`]), with closed-form and one-dimensional references
//! in [`oracles`] and the bound-state experiments in [`analysis`].

pub mod analysis;
pub mod eigen;
pub mod error;
pub mod extrapolation;
pub mod fem;
pub mod geometry;
pub mod oracles;
pub mod sigma;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::{build_mesh, DomainSpec, Mesh, TruncationBc};
pub use sigma::SigmaProfile;
