//! Matrix-free solvers for conic linear programs
//!
//! `min cᵀx  s.t.  Ax = b, x ∈ K` where `K` is a product of nonnegative
//! orthants and second-order cones.
//!
//! The main pieces are restarted PDHG ([`pdhg`]), normalized duality gap
//! certificates ([`dualgap`]), central-path Hessian rescaling ([`rescale`]),
//! a CG-based interior-point method ([`ipm`]) that supplies rescaling points,
//! the adaptive driver combining them ([`ahr`]) and an exact sublevel-set
//! geometry calculator for tiny LPs ([`geolab`]).

pub mod ahr;
pub mod cones;
pub mod dualgap;
mod error;
pub mod geolab;
pub mod ipm;
pub mod linalg;
pub mod model;
pub mod pdhg;
pub mod rescale;

pub use error::{Error, Result};
