//! Multipatch NURBS surfaces, benchmark geometries and closest-point queries.

mod builders;
mod closest;
mod nurbs;
mod surface;

pub use builders::{ellipsoid, spheroid, spheroid_area, unit_sphere};
pub use closest::{closest_point, ClosestPoint, ScanGrid, SCAN};
pub use nurbs::{BasisAt, NurbsPatch, PatchHessian, PatchPoint, Vec3};
pub use surface::{MultipatchSurface, SurfaceSample};
