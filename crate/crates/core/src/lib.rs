//! Constructive certificates for continuous Kakeya line configurations.
//!
//! A configuration assigns to every direction (a line through the origin, or
//! an oriented unit vector) a translate of that line. This crate locates the
//! translated line that passes through a requested target point, in
//! Euclidean space, in several concrete Lie groups, and on the sphere viewed
//! as a quotient of `SO(3)`. It also solves the finite analogue exactly: the
//! smallest subset of a finite group containing a left coset of every cyclic
//! subgroup.
//!
//! Module map:
//!
//! - [`configs`]: direction spaces and evaluable configuration families.
//! - [`topo_zero`]: zero localization for perpendicular sections and
//!   tangent fields, map degree, winding numbers.
//! - [`euclid`]: cover certificates, membership, elongation and needle area.
//! - [`liegroups`]: exp/log, one-parameter subgroups, group cover
//!   certificates, cylinder and torus lifting.
//! - [`discrete_kakeya`]: finite groups, cyclic subgroups, exact minimum
//!   Kakeya sets.
//! - [`homog`]: sphere maps, quotient curves, liftability and swept sets.

// `!(x > 0.0)` is how NaN is rejected together with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod configs;
pub mod discrete_kakeya;
pub mod error;
pub mod euclid;
pub mod homog;
pub mod liegroups;
pub mod par;
pub mod sphere;
pub mod topo_zero;

pub use error::{KakeyaError, Result};
pub use par::Execution;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
