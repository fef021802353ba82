//! Symbolic and geometric tools for dynamical Markov and Lagrange spectra of horseshoes.

pub mod cf;
pub mod decomposition;
pub mod error;
pub mod extraction;
pub mod fts;
pub mod geometry;
pub mod spectra;
pub mod symbolic;

pub use error::{Error, Result};
pub use fts::FiniteTypeSet;
pub use geometry::{ContractionModel, RatioTable, Side};
pub use spectra::Potential;
pub use symbolic::{Letter, SymbolicPoint, TransitionSystem, Word};
