//! Functional intrinsic volumes of finite convex functions.
//!
//! `V(f) = int zeta(|x|) e_i(D^2 f(x)) dx` for radial densities `zeta` that may
//! be singular at the origin, evaluated by truncated and principal-value
//! quadrature, together with the template family `u_t(x) = max(0, |x| - t)`,
//! the inversion from template values back to densities, and an exact
//! exterior-algebra checker for the invariant forms behind the theory.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod convexfn;
pub mod density;
pub mod error;
pub mod forms;
pub mod harness;
pub mod hessmeasure;
pub mod quadrature;
pub mod template;
pub mod util;

pub use convexfn::{make_radial, ConvexFn, GridFn, GridSpec, RadialProfile};
pub use density::Density;
pub use error::{Error, Result};
pub use hessmeasure::{fiv_pv, fiv_truncated, phi_integral, PVReport, SymMatrix};
