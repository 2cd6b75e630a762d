//! Complex-valued recurrent network on a square lattice.
//!
//! Each node carries a complex state whose phase evolves under the linear map
//! `x(k+1) = (diag(i omega) + epsilon A) x(k)`. Pixel intensities set the
//! intrinsic frequencies `omega`, Gaussian lattice weights set `A`, and the
//! resulting traveling-wave phase patterns are grouped by phase similarity to
//! segment images.

pub mod data;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod pipeline;
pub mod seed;
pub mod similarity;
pub mod spectral;

pub use error::{Error, Result};
