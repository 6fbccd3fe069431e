//! Weighted graded posets as high-dimensional expanders.
//!
//! Build posets from simplicial complexes, Grassmannians or the
//! posetification of a complex, check the regularity and weight
//! properties that drive the local-to-global theorems, and certify
//! expansion through spectra of links.

pub mod constructors;
pub mod error;
pub mod field;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod par;
pub mod poset;
pub mod properties;
pub mod spectral;
pub mod theorems;

pub use error::{HdxError, Result};
pub use poset::{Cochain, ElementId, GradedPoset, WeightScheme, WeightedPoset};
