//! Numerical dynamics of the quasiregular tangent family
//! `T_λ = λ·A∘Z(2·)` on R³, where `Z` is the Zorich map and `A` the Möbius
//! map carrying the unit sphere onto the plane `z = 0`.
//!
//! * [`maps`]: folding, the Zorich map, `A`, and evaluation of `T_λ`;
//! * [`plane`]: the restriction `F_λ` to the invariant plane, its poles,
//!   pole diamonds, derivatives and inverse branches;
//! * [`analysis`]: fixed points, monotone quantities, the petal set and
//!   orbit classification;
//! * [`itinerary`]: itineraries of escaping points and periodic points;
//! * [`render`]: basin and escape-depth images;
//! * [`verify`] and [`cli`]: sampled checks and the command-line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod itinerary;
pub mod maps;
pub mod plane;
pub mod point;
pub mod render;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use maps::MapParams;
pub use point::{ExtendedPoint, PlanePoint, Vec3};
