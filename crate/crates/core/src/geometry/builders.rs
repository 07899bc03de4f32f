use super::nurbs::{NurbsPatch, Vec3};
use super::surface::MultipatchSurface;
use crate::error::{Error, Result};
use crate::spline::KnotVector;

const BINOM2: [f64; 3] = [1.0, 2.0, 1.0];
const BINOM4: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];

/// Top face (`z > |x|, |y|`) of the cube-projected unit sphere as a
/// bidegree-(4,4) rational patch.
///
/// The face is first written as a planar rational biquadratic patch in
/// stereographic coordinates (projection from the south pole), whose four
/// edges are exact circular arcs. Lifting the homogeneous coordinates
/// `(a, b, c)` through the inverse projection
/// `(2ac, 2bc, c^2 - a^2 - b^2 | a^2 + b^2 + c^2)` squares the degree.
fn sphere_top_patch() -> Result<NurbsPatch> {
    let s3 = 3f64.sqrt();
    let k = (s3 - 1.0) / 2.0;
    // control point of the 30 degree arc on the circle (a+1)^2 + b^2 = 2
    let m = 2.0 * s3 - 3.0;
    let we = (6f64.sqrt() + 2f64.sqrt()) / 4.0;
    let coord = [-1.0, 0.0, 1.0];
    let w1 = [1.0, we, 1.0];
    // planar homogeneous control net (a w, b w, w), index i + 3 j
    let mut planar = [[0.0f64; 3]; 9];
    for j in 0..3 {
        for i in 0..3 {
            let (cu, cv) = (coord[i], coord[j]);
            let (a, b) = match (i, j) {
                (1, 1) => (0.0, 0.0),
                (1, _) => (0.0, cv * m),
                (_, 1) => (cu * m, 0.0),
                _ => (cu * k, cv * k),
            };
            let w = w1[i] * w1[j];
            planar[i + 3 * j] = [a * w, b * w, w];
        }
    }
    let mut hom = [[0.0f64; 4]; 25];
    for j1 in 0..3 {
        for i1 in 0..3 {
            for j2 in 0..3 {
                for i2 in 0..3 {
                    let p = planar[i1 + 3 * j1];
                    let q = planar[i2 + 3 * j2];
                    let (i, j) = (i1 + i2, j1 + j2);
                    let f = BINOM2[i1] * BINOM2[i2] / BINOM4[i] * BINOM2[j1] * BINOM2[j2] / BINOM4[j];
                    let h = &mut hom[i + 5 * j];
                    h[0] += f * (p[0] * q[2] + q[0] * p[2]);
                    h[1] += f * (p[1] * q[2] + q[1] * p[2]);
                    h[2] += f * (p[2] * q[2] - p[0] * q[0] - p[1] * q[1]);
                    h[3] += f * (p[2] * q[2] + p[0] * q[0] + p[1] * q[1]);
                }
            }
        }
    }
    let knots = KnotVector::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0], 4)?;
    let pts = hom.iter().map(|h| [h[0] / h[3], h[1] / h[3], h[2] / h[3]]).collect();
    let weights = hom.iter().map(|h| h[3]).collect();
    NurbsPatch::new(knots.clone(), knots, pts, weights)
}

/// The six face patches of the unit sphere, normals pointing outward.
pub fn unit_sphere() -> Result<MultipatchSurface> {
    let top = sphere_top_patch()?;
    let flip = |p: Vec3| Vec3::new(p.x, -p.y, -p.z);
    let cyc1 = |p: Vec3| Vec3::new(p.z, p.x, p.y);
    let cyc2 = |p: Vec3| Vec3::new(p.y, p.z, p.x);
    let bottom = top.map_points(flip);
    let patches = vec![
        top.clone(),
        bottom.clone(),
        top.map_points(cyc1),
        bottom.map_points(cyc1),
        top.map_points(cyc2),
        bottom.map_points(cyc2),
    ];
    MultipatchSurface::new(patches)
}

/// Prolate spheroid `(x^2 + y^2)/b^2 + z^2/a^2 = 1` with `a > b`.
pub fn spheroid(a: f64, b: f64) -> Result<MultipatchSurface> {
    if !(a > b && b > 0.0) || !a.is_finite() {
        return Err(Error::Parameter(format!("spheroid needs a > b > 0 (got a={a}, b={b})")));
    }
    ellipsoid(b, b, a)
}

/// Axis-aligned ellipsoid with semi-axes `(ax, ay, az)`.
pub fn ellipsoid(ax: f64, ay: f64, az: f64) -> Result<MultipatchSurface> {
    if !(ax > 0.0 && ay > 0.0 && az > 0.0) {
        return Err(Error::Parameter("semi-axes must be positive".into()));
    }
    unit_sphere()?.map_affine(|p| Vec3::new(ax * p.x, ay * p.y, az * p.z))
}

/// Closed-form area of the prolate spheroid with semi-axes `a > b`.
pub fn spheroid_area(a: f64, b: f64) -> f64 {
    let c = (a * a - b * b).sqrt();
    let pi = std::f64::consts::PI;
    2.0 * pi * b * b + 2.0 * pi * a * a * b / c * (c / a).asin()
}
