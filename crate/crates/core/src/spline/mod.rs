//! Univariate and tensor-product B-spline machinery.

pub mod dd;
mod knots;
mod product;
mod tensor;

pub use knots::{one_basis, KnotVector, MAX_DEGREE};
pub(crate) use knots::{basis_funs, ders_basis_funs};
pub use product::{interior_breaks, ProductSplineSpace};
pub use tensor::{BSplineSupport, Rect, TensorSplineSpace};
