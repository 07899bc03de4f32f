use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::dd::{Dd, Scalar};
use crate::spline::{basis_funs, ders_basis_funs, KnotVector};

pub type Vec3 = Vector3<f64>;

/// Width of the fixed-size basis scratch: geometry degrees up to 15.
pub(crate) const GEO_W: usize = 16;

/// Rational tensor-product patch `F: [0,1]^2 -> R^3`.
///
/// Control points and weights are stored with the `u` index running fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NurbsPatch {
    pub knots_u: KnotVector,
    pub knots_v: KnotVector,
    pub control_points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Point and parametric derivatives of a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchPoint {
    pub x: Vec3,
    pub du: Vec3,
    pub dv: Vec3,
}

/// Second derivatives, used by the closest-point Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchHessian {
    pub duu: Vec3,
    pub duv: Vec3,
    pub dvv: Vec3,
}

/// Univariate basis values and derivatives at one abscissa.
#[derive(Debug, Clone, Copy)]
pub struct BasisAt {
    first: usize,
    vals: [[f64; GEO_W]; 3],
}

impl NurbsPatch {
    pub fn new(
        knots_u: KnotVector,
        knots_v: KnotVector,
        control_points: Vec<[f64; 3]>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = knots_u.num_basis() * knots_v.num_basis();
        if control_points.len() != n || weights.len() != n {
            return Err(Error::Geometry(format!(
                "patch needs {n} control points and weights, got {} and {}",
                control_points.len(),
                weights.len()
            )));
        }
        if knots_u.degree() >= GEO_W || knots_v.degree() >= GEO_W {
            return Err(Error::Geometry("patch degree too high".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Geometry("weights must be strictly positive".into()));
        }
        if !knots_u.is_open() || !knots_v.is_open() {
            return Err(Error::Geometry("patch knot vectors must be open".into()));
        }
        Ok(Self { knots_u, knots_v, control_points, weights })
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.knots_u.degree(), self.knots_v.degree())
    }

    pub fn n_u(&self) -> usize {
        self.knots_u.num_basis()
    }

    pub fn n_v(&self) -> usize {
        self.knots_v.num_basis()
    }

    /// Basis data for abscissa `t` in direction `dir`, derivatives up to `nd`.
    pub fn basis(&self, dir: usize, t: f64, nd: usize) -> BasisAt {
        let kv = if dir == 0 { &self.knots_u } else { &self.knots_v };
        let (a, b) = kv.domain();
        let t = t.clamp(a, b);
        let p = kv.degree();
        let span = kv.span_unchecked(t);
        let mut vals = [[0.0; GEO_W]; 3];
        ders_basis_funs::<GEO_W>(kv.knots(), p, span, t, nd, &mut vals);
        BasisAt { first: span - p, vals }
    }

    /// Homogeneous sums `(A, W)` with their derivatives as `[value, d/du, d/dv,
    /// d2/du2, d2/dudv, d2/dv2]`.
    fn homogeneous(&self, bu: &BasisAt, bv: &BasisAt, second: bool) -> [[f64; 4]; 6] {
        let (p, q) = self.degrees();
        let nu = self.n_u();
        let mut out = [[0.0; 4]; 6];
        for b in 0..=q {
            let row = (bv.first + b) * nu;
            let (nv0, nv1, nv2) = (bv.vals[0][b], bv.vals[1][b], bv.vals[2][b]);
            // partial sums over u for this control row
            let mut s = [[0.0; 4]; 3];
            for a in 0..=p {
                let idx = row + bu.first + a;
                let w = self.weights[idx];
                let c = self.control_points[idx];
                let h = [c[0] * w, c[1] * w, c[2] * w, w];
                let k = if second { 3 } else { 2 };
                for (d, sd) in s.iter_mut().enumerate().take(k) {
                    let n = bu.vals[d][a];
                    for (x, hx) in sd.iter_mut().zip(h) {
                        *x += n * hx;
                    }
                }
            }
            for c in 0..4 {
                out[0][c] += nv0 * s[0][c];
                out[1][c] += nv0 * s[1][c];
                out[2][c] += nv1 * s[0][c];
                if second {
                    out[3][c] += nv0 * s[2][c];
                    out[4][c] += nv1 * s[1][c];
                    out[5][c] += nv2 * s[0][c];
                }
            }
        }
        out
    }

    /// Point and first derivatives from precomputed basis data.
    pub fn eval_with(&self, bu: &BasisAt, bv: &BasisAt) -> PatchPoint {
        let h = self.homogeneous(bu, bv, false);
        let w = h[0][3];
        let x = Vec3::new(h[0][0], h[0][1], h[0][2]) / w;
        let du = (Vec3::new(h[1][0], h[1][1], h[1][2]) - x * h[1][3]) / w;
        let dv = (Vec3::new(h[2][0], h[2][1], h[2][2]) - x * h[2][3]) / w;
        PatchPoint { x, du, dv }
    }

    pub fn eval(&self, u: f64, v: f64) -> PatchPoint {
        let bu = self.basis(0, u, 1);
        let bv = self.basis(1, v, 1);
        self.eval_with(&bu, &bv)
    }

    /// Point in double-double precision, for separations `F(x̂) - F(ŷ)` that
    /// must stay accurate relative to their own size.
    pub fn point_dd(&self, u: f64, v: f64) -> [Dd; 3] {
        let (p, q) = self.degrees();
        let eval = |kv: &KnotVector, t: f64, out: &mut [Dd; GEO_W]| {
            let (a, b) = kv.domain();
            let t = t.clamp(a, b);
            let span = kv.span_unchecked(t);
            basis_funs(kv.knots(), kv.degree(), span, Dd::from_f64(t), &mut out[..]);
            span - kv.degree()
        };
        let mut nu = [Dd::zero(); GEO_W];
        let mut nv = [Dd::zero(); GEO_W];
        let fu = eval(&self.knots_u, u, &mut nu);
        let fv = eval(&self.knots_v, v, &mut nv);
        let mut h = [Dd::zero(); 4];
        for (b, nvb) in nv.iter().enumerate().take(q + 1) {
            for (a, nua) in nu.iter().enumerate().take(p + 1) {
                let idx = (fv + b) * self.n_u() + fu + a;
                let w = Dd::from_f64(self.weights[idx]);
                let c = self.control_points[idx];
                let f = *nua * *nvb * w;
                for k in 0..3 {
                    h[k] += f * Dd::from_f64(c[k]);
                }
                h[3] += f;
            }
        }
        [h[0] / h[3], h[1] / h[3], h[2] / h[3]]
    }

    /// Point with first and second derivatives.
    pub fn eval2(&self, u: f64, v: f64) -> (PatchPoint, PatchHessian) {
        let bu = self.basis(0, u, 2);
        let bv = self.basis(1, v, 2);
        let h = self.homogeneous(&bu, &bv, true);
        let g = |k: usize| Vec3::new(h[k][0], h[k][1], h[k][2]);
        let w = h[0][3];
        let (wu, wv) = (h[1][3], h[2][3]);
        let x = g(0) / w;
        let du = (g(1) - x * wu) / w;
        let dv = (g(2) - x * wv) / w;
        let duu = (g(3) - du * (2.0 * wu) - x * h[3][3]) / w;
        let duv = (g(4) - du * wv - dv * wu - x * h[4][3]) / w;
        let dvv = (g(5) - dv * (2.0 * wv) - x * h[5][3]) / w;
        (PatchPoint { x, du, dv }, PatchHessian { duu, duv, dvv })
    }

    /// Applies `f` to every control point.
    pub fn map_points(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        let mut out = self.clone();
        for c in out.control_points.iter_mut() {
            let y = f(Vec3::new(c[0], c[1], c[2]));
            *c = [y.x, y.y, y.z];
        }
        out
    }
}
