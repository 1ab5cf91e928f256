//! Realisation of an ordered action on the circle: one interval `J_x` of
//! length `ν(x)` per point, glued by an equivariant family of diffeomorphisms.

mod action;
mod certify;
pub mod family;
mod layout;

pub use action::{DerivativeValue, Evaluation, RealizedAction, RelationReport};
pub use certify::{epsilon_certify, EpsilonCertificate, GeneratorDeviation};
pub use family::{dphi, phi, phi_inverse, TINY_INTERVAL};
pub use layout::{
    layout, order_realization_check, CirclePoint, IntervalLayout, LayoutEntry, Location, OrderRealizationReport,
};
