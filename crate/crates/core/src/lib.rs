//! Point counting over finite fields and modularity checks for Calabi-Yau threefolds.
//!
//! The crate counts points on catalogued varieties, turns the counts into
//! Frobenius traces on middle cohomology, expands eta-product newforms, and
//! compares trace sequences with the Faltings-Serre-Livne criterion.

pub mod catalog;
pub mod counting;
pub mod error;
pub mod ffield;
pub mod lefschetz;
pub mod livne;
pub mod manifest;
pub mod poly;
pub mod pipeline;
pub mod qexp;

pub use error::{Error, Result};
