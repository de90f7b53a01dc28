//! Numerical lab for random real algebraic geometry.
//!
//! The crate samples Gaussian polynomial ensembles (Kostlan and Kac), counts
//! real roots, estimates determinant statistics of Gaussian symmetric
//! matrices, builds Fubini–Study peak sections, certifies local barrier
//! constructions, extracts the topology of random plane curves and packs
//! projective space with separated points. Every experiment is seedable and
//! reproducible bit for bit.

pub mod assembly;
pub mod curves2d;
pub mod ensembles;
pub mod error;
pub mod fubini;
pub mod matrixstats;
pub mod packing;
pub mod quadrature;
pub mod rng;
pub mod roots1d;
pub mod special;
pub mod stats;
pub mod transversality;

pub use error::{Error, Result};
