//! Estimation of conditional dose-response curves from observational data.
//!
//! The crate is organized around a small reverse-mode autodiff substrate
//! ([`autodiff`]), seeded benchmark generators with ground-truth outcome
//! oracles ([`datagen`]), the neural and linear dose-response models
//! ([`models`]), differentiable dependence penalties ([`balance`]), the
//! training objectives assembled from them ([`objectives`]), a mini-batch
//! trainer with early stopping ([`trainer`]), and the MISE/AMSE evaluation
//! protocol ([`eval`]).
//!
//! All numeric code is generic over the scalar type through [`scalar::Scalar`]
//! (any `num_traits::Float` with the usual supporting bounds). The crate root
//! exports `f64` aliases, which is what the benchmarks and the CLI use.

pub mod autodiff;
pub mod basis;
pub mod datagen;
pub mod rng;
pub mod scalar;

pub use scalar::Scalar;

/// Dense row-major matrix of the default 64-bit scalar.
pub type Tensor = ndarray::Array2<f64>;
/// Recording tape over the default 64-bit scalar.
pub type Tape = autodiff::Tape<f64>;
