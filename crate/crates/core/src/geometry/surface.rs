use std::path::Path;

use serde::Serialize;

use super::nurbs::{NurbsPatch, PatchPoint, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Closed surface made of rational patches with outward normals.
#[derive(Debug, Clone, Serialize)]
pub struct MultipatchSurface {
    pub patches: Vec<NurbsPatch>,
    pub diameter: f64,
}

/// Evaluation record for one surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub patch: usize,
    pub uv: (f64, f64),
    pub x: Vec3,
    pub jac_cols: [Vec3; 2],
    pub normal: Vec3,
    pub measure: f64,
}

impl SurfaceSample {
    pub fn from_point(patch: usize, uv: (f64, f64), p: &PatchPoint) -> Result<Self> {
        let c = p.du.cross(&p.dv);
        let measure = c.norm();
        if !(measure >= 1e-14) {
            return Err(Error::Geometry(format!(
                "degenerate Jacobian on patch {patch} at {uv:?} (measure {measure:e})"
            )));
        }
        Ok(Self { patch, uv, x: p.x, jac_cols: [p.du, p.dv], normal: c / measure, measure })
    }
}

const DIAMETER_SAMPLES: usize = 21;

impl MultipatchSurface {
    pub fn new(patches: Vec<NurbsPatch>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Geometry("surface needs at least one patch".into()));
        }
        let mut s = Self { patches, diameter: 0.0 };
        s.diameter = s.sampled_diameter(DIAMETER_SAMPLES);
        if !(s.diameter > 0.0) {
            return Err(Error::Geometry("surface has zero extent".into()));
        }
        Ok(s)
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn eval(&self, patch: usize, u: f64, v: f64) -> Result<SurfaceSample> {
        let p = self
            .patches
            .get(patch)
            .ok_or_else(|| Error::Geometry(format!("no patch {patch}")))?;
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("({u}, {v}) outside the unit square")));
        }
        SurfaceSample::from_point(patch, (u, v), &p.eval(u, v))
    }

    pub fn point(&self, patch: usize, u: f64, v: f64) -> Vec3 {
        self.patches[patch].eval(u, v).x
    }

    /// Largest distance between points of an `n x n` sample of every patch.
    pub fn sampled_diameter(&self, n: usize) -> f64 {
        let mut pts = Vec::with_capacity(self.patches.len() * n * n);
        for p in &self.patches {
            for j in 0..n {
                for i in 0..n {
                    let u = i as f64 / (n - 1) as f64;
                    let v = j as f64 / (n - 1) as f64;
                    pts.push(p.eval(u, v).x);
                }
            }
        }
        let mut best = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                best = best.max((a - b).norm_squared());
            }
        }
        best.sqrt()
    }

    /// Area of each patch by tensor Gauss–Legendre quadrature.
    pub fn patch_areas(&self, nodes: usize) -> Vec<f64> {
        let (x, w) = gauss_legendre(nodes);
        self.patches
            .iter()
            .map(|p| {
                let mut a = 0.0;
                for (xv, wv) in x.iter().zip(&w) {
                    for (xu, wu) in x.iter().zip(&w) {
                        let e = p.eval(0.5 * (xu + 1.0), 0.5 * (xv + 1.0));
                        a += 0.25 * wu * wv * e.du.cross(&e.dv).norm();
                    }
                }
                a
            })
            .collect()
    }

    pub fn area(&self, nodes: usize) -> f64 {
        self.patch_areas(nodes).iter().sum()
    }

    /// Applies `f` to all control points; valid for maps that commute with
    /// rational evaluation, i.e. affine maps.
    pub fn map_affine(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        Self::new(self.patches.iter().map(|p| p.map_points(&f)).collect())
    }

    /// Writes degrees, knots, weights and control points as JSON.
    pub fn export_json(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct PatchOut<'a> {
            degrees: (usize, usize),
            knots_u: &'a [f64],
            knots_v: &'a [f64],
            weights: &'a [f64],
            control_points: &'a [[f64; 3]],
        }
        let patches: Vec<PatchOut> = self
            .patches
            .iter()
            .map(|p| PatchOut {
                degrees: p.degrees(),
                knots_u: p.knots_u.knots(),
                knots_v: p.knots_v.knots(),
                weights: &p.weights,
                control_points: &p.control_points,
            })
            .collect();
        let text = serde_json::to_string_pretty(&serde_json::json!({ "patches": patches }))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
