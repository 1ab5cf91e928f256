//! Realising order-preserving actions of countable groups with subexponential
//! orbit growth as C¹ diffeomorphisms of the circle, with finite-horizon
//! certificates for every step.
//!
//! The pipeline runs `orbits` → `growth` → `metric` → `moderate` →
//! `realize`; `blowup` specialises it to dense orbits of circle
//! homeomorphisms and `regularity` measures the modulus of continuity of the
//! derivatives.

pub mod blowup;
pub mod error;
pub mod fixed;
pub mod growth;
pub mod metric;
pub mod moderate;
pub mod numeric;
pub mod orbits;
pub mod pipeline;
pub mod realize;
pub mod regularity;

pub use error::{Error, Result};
