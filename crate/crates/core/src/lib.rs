//! Spectral engine for retarded and advanced Green's functions.
//!
//! The numerical core is generic over the real scalar (`f32` or `f64`); the
//! aliases at the bottom of this file fix it to `f64`.
//!
//! ```
//! use std::sync::Arc;
//! use greenfn::firstorder::{auxiliary_kernel, initial_condition_residual, step_factor_kernel,
//!     Convention, Direction, TimeWindow};
//! use greenfn::spectra::{build_well_basis, PhysicalConstants};
//!
//! let basis = Arc::new(build_well_basis(1.0, 32, PhysicalConstants::default())?);
//! let window = TimeWindow::new(vec![-0.1, 0.0, 0.1], false)?;
//! let aux = auxiliary_kernel(&basis, &window, Convention::Consistent)?;
//! let retarded = step_factor_kernel(&aux, Direction::Retarded)?;
//! assert!(initial_condition_residual(&retarded)? < 1e-10);
//! # Ok::<(), greenfn::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distlab;
pub mod error;
pub mod firstorder;
pub mod freqdomain;
pub mod grid;
pub mod io;
pub mod quadrature;
pub mod scalar;
pub mod secondorder;
pub mod spectra;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = grid::Grid1D<f64>;
pub type Sampled = grid::SampledFunction<f64>;
pub type Constants = spectra::PhysicalConstants<f64>;
pub type Basis = spectra::EigenSystem<f64>;
