//! Walsh-quantized D-baker's maps on the torus.
//!
//! The crate is organised bottom-up:
//!
//! - [`observables`]: real trigonometric polynomials, their exact rectangle
//!   averages and the base-4 fractal average.
//! - [`classical`]: the classical baker map, symbolic rectangles, the
//!   time-evolution map `H(t)` and exact correlation sums `V(a)`, `Ṽ(a,α,β)`.
//! - [`engine`]: the matrix-free propagator `B̂_k`, coherent-state bases,
//!   quantized observables, analytic matrix entries and trace functionals.
//! - [`spectral`]: eigenspace projectors from exact periodicity and
//!   Haar-random eigenvector sampling.
//! - [`stats`]: fluctuation records, moment and KS summaries, off-diagonal
//!   and max-entry statistics.
//! - [`cli`]: run configuration and the batch commands behind the `wbl` binary.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --release --example traces`
//! is a good first stop.

pub mod classical;
pub mod cli;
pub mod engine;
pub mod error;
pub mod observables;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
