use serde::{Deserialize, Serialize};

use super::knots::{one_basis, KnotVector};
use crate::error::{Error, Result};

/// Bivariate tensor-product B-spline space on one patch.
///
/// Functions are flattened with the `u` index running fastest:
/// `k = i + n_u * j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSplineSpace {
    pub knots_u: KnotVector,
    pub knots_v: KnotVector,
}

/// Axis-aligned parametric rectangle `[u0, u1] x [v0, v1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Rect {
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Self {
        Self { u0, u1, v0, v1 }
    }

    pub fn area(&self) -> f64 {
        (self.u1 - self.u0) * (self.v1 - self.v0)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u0 && u <= self.u1 && v >= self.v0 && v <= self.v1
    }

    pub fn clamp(&self, u: f64, v: f64) -> (f64, f64) {
        (u.clamp(self.u0, self.u1), v.clamp(self.v0, self.v1))
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.u1 > self.u0 && self.v1 > self.v0)
    }
}

/// Support of one tensor B-spline together with its local knots.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineSupport {
    pub patch: usize,
    pub index: (usize, usize),
    pub rect: Rect,
    pub local_u: Vec<f64>,
    pub local_v: Vec<f64>,
}

impl BSplineSupport {
    /// Value of the B-spline at `(u, v)`. The side flags choose the polynomial
    /// piece at knots (`true` = piece to the right/above).
    pub fn eval(&self, u: f64, v: f64, right_u: bool, right_v: bool) -> f64 {
        one_basis(&self.local_u, u, right_u) * one_basis(&self.local_v, v, right_v)
    }

    /// Value at a point inside the support, reading one-sided limits at the
    /// support boundary so that clamped end values are not lost.
    pub fn eval_inside(&self, u: f64, v: f64) -> f64 {
        let ru = u < self.rect.u1;
        let rv = v < self.rect.v1;
        self.eval(u, v, ru, rv)
    }

    /// Distinct breakpoints of the local knots along `u` (first) or `v`.
    pub fn breakpoints(&self, dir: usize) -> Vec<f64> {
        let local = if dir == 0 { &self.local_u } else { &self.local_v };
        let mut out: Vec<f64> = Vec::with_capacity(local.len());
        for &k in local {
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
        out
    }

    pub fn local(&self, dir: usize) -> &[f64] {
        if dir == 0 {
            &self.local_u
        } else {
            &self.local_v
        }
    }
}

impl TensorSplineSpace {
    pub fn new(knots_u: KnotVector, knots_v: KnotVector) -> Result<Self> {
        if !knots_u.is_open() || !knots_v.is_open() {
            return Err(Error::Knots("tensor spaces require open knot vectors".into()));
        }
        Ok(Self { knots_u, knots_v })
    }

    /// Uniform space of degree `d` with `n x n` elements on the unit square.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        let k = KnotVector::open_uniform(d, n, 0.0, 1.0)?;
        Self::new(k.clone(), k)
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

    pub fn dim(&self) -> usize {
        self.n_u() * self.n_v()
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        i + self.n_u() * j
    }

    pub fn unflat(&self, k: usize) -> (usize, usize) {
        (k % self.n_u(), k / self.n_u())
    }

    pub fn knots(&self, dir: usize) -> &KnotVector {
        if dir == 0 {
            &self.knots_u
        } else {
            &self.knots_v
        }
    }

    /// Largest knot span over both directions.
    pub fn mesh_size(&self) -> f64 {
        self.knots_u.max_span().max(self.knots_v.max_span())
    }

    pub fn support(&self, patch: usize, k: usize) -> BSplineSupport {
        let (i, j) = self.unflat(k);
        let local_u = self.knots_u.local_knots(i).to_vec();
        let local_v = self.knots_v.local_knots(j).to_vec();
        let rect = Rect::new(local_u[0], *local_u.last().unwrap(), local_v[0], *local_v.last().unwrap());
        BSplineSupport { patch, index: (i, j), rect, local_u, local_v }
    }

    /// Tensor improved Greville points, flattened in basis order.
    pub fn collocation_uv(&self) -> Vec<(f64, f64)> {
        let gu = self.knots_u.improved_greville();
        let gv = self.knots_v.improved_greville();
        let mut out = Vec::with_capacity(gu.len() * gv.len());
        for &v in &gv {
            for &u in &gu {
                out.push((u, v));
            }
        }
        out
    }

    /// Non-vanishing basis functions at `(u, v)` as `(flat index, value)`.
    pub fn eval_nonzero(&self, u: f64, v: f64) -> Result<Vec<(usize, f64)>> {
        let (fu, bu) = self.knots_u.eval_nonzero_basis(u)?;
        let (fv, bv) = self.knots_v.eval_nonzero_basis(v)?;
        let mut out = Vec::with_capacity(bu.len() * bv.len());
        for (b, &wv) in bv.iter().enumerate() {
            for (a, &wu) in bu.iter().enumerate() {
                out.push((self.flat(fu + a, fv + b), wu * wv));
            }
        }
        Ok(out)
    }

    /// Distinct breakpoints in one direction.
    pub fn element_breaks(&self, dir: usize) -> Vec<f64> {
        self.knots(dir).breakpoints().into_iter().map(|(x, _)| x).collect()
    }
}
