//! Tangent-field convolution on triangle meshes.
//!
//! The crate implements a scattering-style convolution on tangent vector
//! fields: each neighbor evaluates a band-limited filter at the center
//! point's position expressed in the neighbor's feature-aligned frame, then
//! parallel-transports its contribution to the center. Everything needed to
//! run and train networks built from this operator lives here:
//!
//! - [`mesh`]: triangle-mesh representation, OBJ/OFF I/O, unit-area
//!   normalization, one-ring area weights, farthest point sampling.
//! - [`intrinsic`]: per-vertex tangent frames, geodesic epsilon-balls with a
//!   Dijkstra-unfolding logarithm map, transport angles, and a binary cache.
//! - [`filter`] / [`conv`]: the band-limited filter parameterization and the
//!   discrete field convolution, plus a brute-force reference evaluator.
//! - [`layers`]: complex linearities, radial ReLU, learned-gradient lift,
//!   residual convolution blocks, ECHO descriptors, readouts.
//! - [`autodiff`] / [`ops`] / [`optim`] / [`loss`]: an op-granular
//!   reverse-mode tape, ADAM, cross-entropy with label smoothing, twin loss.
//! - [`gradcheck`]: finite-difference verification of the analytic backward
//!   passes.
//!
//! Per-vertex work is data-parallel; with the default `parallel` feature it
//! runs on rayon, without it the same code paths run sequentially. Reductions
//! are ordered per output element, so results are bitwise identical for any
//! thread count.

pub mod autodiff;
pub mod conv;
mod error;
pub mod field;
pub mod filter;
pub mod gradcheck;
pub mod intrinsic;
pub mod layers;
pub mod loss;
pub mod mesh;
pub mod ops;
pub mod optim;
pub(crate) mod par;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
