//! Spectral analysis of Schrödinger operators `−Δ + V` with singular
//! potentials on model compact manifolds.

pub mod dyadic;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod operator;
pub mod orthopoly;
pub mod parametrix;
pub mod potentials;

pub use error::{Error, Result};
