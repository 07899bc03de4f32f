//! Collocation assembly of the Stokes boundary integral equation.

mod dump;
mod symmetry;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use dump::{policy_hash, read_dump, write_dump, DumpHeader};
pub use symmetry::{cube_symmetries, point_orbits, Orbits};

use crate::error::{Error, Result};
use crate::geometry::{MultipatchSurface, ScanGrid, Vec3};
use crate::kernels::{double_layer_entries_r, single_layer_entries_r};
use crate::quadrature::{integrate_support, AlphaRule, NodePolicy, QuadStats, QuadratureRule, Target};
use crate::spline::{BSplineSupport, TensorSplineSpace};

/// Constant in front of `∫ H 𝕣` in the boundary integral equation, chosen so
/// that `C_DL ∫_Γ H 𝕣 dσ = I` on a closed surface with outward normals.
pub const C_DL: f64 = 3.0 / (2.0 * PI);

/// Boundary velocity or traction datum given on physical points.
pub type VectorDatum<'a> = &'a (dyn Fn(&Vec3) -> Vec3 + Sync);

/// Surface, per-patch spline spaces and the flattened basis.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub surface: MultipatchSurface,
    pub spaces: Vec<TensorSplineSpace>,
    offsets: Vec<usize>,
    supports: Vec<BSplineSupport>,
    grids: Vec<ScanGrid>,
}

impl Discretization {
    pub fn new(surface: MultipatchSurface, spaces: Vec<TensorSplineSpace>) -> Result<Self> {
        if spaces.len() != surface.num_patches() {
            return Err(Error::Parameter(format!(
                "{} spline spaces for {} patches",
                spaces.len(),
                surface.num_patches()
            )));
        }
        let mut offsets = Vec::with_capacity(spaces.len() + 1);
        let mut supports = Vec::new();
        let mut grids = Vec::new();
        offsets.push(0);
        for (p, space) in spaces.iter().enumerate() {
            for k in 0..space.dim() {
                let s = space.support(p, k);
                grids.push(ScanGrid::new(&surface.patches[p], s.rect));
                supports.push(s);
            }
            offsets.push(supports.len());
        }
        Ok(Self { surface, spaces, offsets, supports, grids })
    }

    /// Same uniform space of degree `d` with `n x n` elements on every patch.
    pub fn uniform(surface: MultipatchSurface, d: usize, n: usize) -> Result<Self> {
        let space = TensorSplineSpace::uniform(d, n)?;
        let spaces = vec![space; surface.num_patches()];
        Self::new(surface, spaces)
    }

    /// Number of scalar basis functions.
    pub fn dof(&self) -> usize {
        self.supports.len()
    }

    pub fn supports(&self) -> &[BSplineSupport] {
        &self.supports
    }

    pub fn offset(&self, patch: usize) -> usize {
        self.offsets[patch]
    }

    /// Global index of basis function `k` of `patch`.
    pub fn global(&self, patch: usize, k: usize) -> usize {
        self.offsets[patch] + k
    }

    /// Node policy from the largest degree and knot span over all patches.
    pub fn policy(&self, alpha_extra_max: usize) -> Result<NodePolicy> {
        let mut d = [0; 2];
        let mut h = [0.0f64; 2];
        for s in &self.spaces {
            let (du, dv) = s.degrees();
            d = [d[0].max(du), d[1].max(dv)];
            h = [h[0].max(s.knots_u.max_span()), h[1].max(s.knots_v.max_span())];
        }
        NodePolicy::new(d, h, alpha_extra_max)
    }

    pub fn rule(&self, gamma: f64, alpha_extra_max: usize) -> Result<QuadratureRule> {
        Ok(QuadratureRule::new(self.policy(alpha_extra_max)?, AlphaRule::new(gamma, self.surface.diameter)?))
    }

    /// Non-vanishing global basis functions at a parametric point.
    pub fn basis_at(&self, patch: usize, uv: (f64, f64)) -> Result<Vec<(usize, f64)>> {
        let local = self.spaces[patch].eval_nonzero(uv.0, uv.1)?;
        Ok(local.into_iter().map(|(k, b)| (self.offsets[patch] + k, b)).collect())
    }
}

/// One collocation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollocationPoint {
    pub patch: usize,
    pub uv: (f64, f64),
    pub x: Vec3,
}

/// Collocation points in global basis order.
#[derive(Debug, Clone)]
pub struct CollocationSet {
    pub points: Vec<CollocationPoint>,
}

impl CollocationSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn target(&self, i: usize) -> Target {
        let p = &self.points[i];
        Target { x: p.x, param: Some((p.patch, p.uv)) }
    }
}

/// Pushforwards of the tensor improved Greville points of every patch.
pub fn collocation_points(disc: &Discretization) -> Result<CollocationSet> {
    let mut points = Vec::with_capacity(disc.dof());
    for (p, space) in disc.spaces.iter().enumerate() {
        for uv in space.collocation_uv() {
            points.push(CollocationPoint { patch: p, uv, x: disc.surface.point(p, uv.0, uv.1) });
        }
    }
    let tol = 1e-10 * disc.surface.diameter;
    // sort along x so that only nearby candidates are compared
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.x.total_cmp(&points[b].x.x));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if points[b].x.x - points[a].x.x > tol {
                break;
            }
            let distance = (points[a].x - points[b].x).norm();
            if distance <= tol {
                return Err(Error::DuplicatePoints { first: a.min(b), second: a.max(b), distance });
            }
        }
    }
    Ok(CollocationSet { points })
}

/// Integrates `kernel(y)` against every basis function for each collocation
/// row in `rows`. Rows run in parallel; within a row the supports are visited
/// in global order, so results do not depend on the thread count.
pub fn map_rows<const N: usize, K, R>(
    disc: &Discretization,
    colloc: &CollocationSet,
    rule: &QuadratureRule,
    rows: &[usize],
    kernel: impl Fn(&Vec3) -> K + Sync,
    reduce: impl Fn(usize, Vec<[f64; N]>) -> R + Sync,
) -> Result<(Vec<R>, QuadStats)>
where
    K: Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    R: Send,
{
    let rows_out: Vec<Result<(R, QuadStats)>> = rows
        .par_iter()
        .map(|&i| {
            let target = colloc.target(i);
            let k = kernel(&target.x);
            let mut stats = QuadStats::default();
            let mut out = Vec::with_capacity(disc.dof());
            for (j, sup) in disc.supports.iter().enumerate() {
                let v = integrate_support(&disc.surface, sup, &target, &k, rule, Some(&disc.grids[j]), &mut stats)
                    .map_err(|e| Error::Quadrature { point: i, support: j, source: Box::new(e) })?;
                out.push(v);
            }
            Ok((reduce(i, out), stats))
        })
        .collect();
    let mut stats = QuadStats::default();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows_out {
        let (v, s) = r?;
        stats.merge(&s);
        out.push(v);
    }
    Ok((out, stats))
}

fn all_rows(colloc: &CollocationSet) -> Vec<usize> {
    (0..colloc.len()).collect()
}

/// Writes 3x3 blocks into a dense matrix, counting writes per block.
struct BlockWriter {
    m: DMatrix<f64>,
    writes: Vec<u32>,
    cols: usize,
}

impl BlockWriter {
    fn new(rows: usize, cols: usize) -> Self {
        Self { m: DMatrix::zeros(3 * rows, 3 * cols), writes: vec![0; rows * cols], cols }
    }

    fn put(&mut self, i: usize, j: usize, entries: &[f64], scale: f64) {
        for a in 0..3 {
            for b in 0..3 {
                self.m[(3 * i + a, 3 * j + b)] = scale * entries[3 * a + b];
            }
        }
        self.writes[i * self.cols + j] += 1;
    }

    fn finish(self) -> Result<DMatrix<f64>> {
        if let Some(k) = self.writes.iter().position(|&w| w != 1) {
            return Err(Error::Invariant(format!(
                "block ({}, {}) written {} times",
                k / self.cols,
                k % self.cols,
                self.writes[k]
            )));
        }
        Ok(self.m)
    }
}

/// Single-layer collocation matrix `(1/(4πη)) ∫ U (I + 𝕣) B`, 3x3 blocks
/// interleaved by component.
pub fn assemble_single_layer(
    disc: &Discretization,
    colloc: &CollocationSet,
    rule: &QuadratureRule,
    eta: f64,
) -> Result<(DMatrix<f64>, QuadStats)> {
    let (rows, stats) = map_rows(
        disc,
        colloc,
        rule,
        &all_rows(colloc),
        |_| |_: &Vec3, r: &Vec3, _: &Vec3| single_layer_entries_r(r),
        |_, v| v,
    )?;
    let mut w = BlockWriter::new(colloc.len(), disc.dof());
    let scale = 1.0 / (4.0 * PI * eta);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            w.put(i, j, e, scale);
        }
    }
    Ok((w.finish()?, stats))
}

/// `∫ H 𝕣 u` integrands against the partition of unity of the approximation
/// space, summed per collocation point and scaled by `-C_DL`.
pub fn assemble_double_layer_vector(
    disc: &Discretization,
    colloc: &CollocationSet,
    rule: &QuadratureRule,
    datum: VectorDatum,
) -> Result<(DVector<f64>, QuadStats)> {
    let (rows, stats) = map_rows(
        disc,
        colloc,
        rule,
        &all_rows(colloc),
        |_| move |x: &Vec3, r: &Vec3, n: &Vec3| dl_times(r, n, &datum(x)),
        |_, v| sum_rows(&v),
    )?;
    let mut d = DVector::zeros(3 * colloc.len());
    for (i, s) in rows.iter().enumerate() {
        for a in 0..3 {
            d[3 * i + a] = -C_DL * s[a];
        }
    }
    Ok((d, stats))
}

fn dl_times(r: &Vec3, n: &Vec3, u: &Vec3) -> [f64; 3] {
    let d2 = r.norm_squared();
    let h = r.dot(n) / (d2 * d2 * d2.sqrt());
    let s = h * r.dot(u);
    [s * r.x, s * r.y, s * r.z]
}

fn sum_rows<const N: usize>(v: &[[f64; N]]) -> [f64; N] {
    let mut acc = [0.0; N];
    for e in v {
        for c in 0..N {
            acc[c] += e[c];
        }
    }
    acc
}

/// Dense LU solve with a singularity check.
pub fn solve_dense(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = m.clone().lu();
    lu.solve(rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Solver("collocation matrix is singular".into()))
}

/// Dirichlet problem: unknown traction coefficients `τ` from the velocity
/// datum, with `S τ = D - C`.
#[derive(Debug, Clone)]
pub struct DirichletSystem {
    pub s: DMatrix<f64>,
    pub c: DVector<f64>,
    pub d: DVector<f64>,
    pub tau: Option<DVector<f64>>,
    pub stats: QuadStats,
}

impl DirichletSystem {
    pub fn rhs(&self) -> DVector<f64> {
        &self.d - &self.c
    }

    pub fn solve(&mut self) -> Result<&DVector<f64>> {
        let tau = solve_dense(&self.s, &self.rhs())?;
        Ok(self.tau.insert(tau))
    }
}

/// Assembles `S`, `C` and `D` in one sweep over (point, support) pairs.
pub fn assemble_dirichlet(
    disc: &Discretization,
    colloc: &CollocationSet,
    rule: &QuadratureRule,
    datum: VectorDatum,
    eta: f64,
) -> Result<DirichletSystem> {
    let (rows, stats) = map_rows(
        disc,
        colloc,
        rule,
        &all_rows(colloc),
        |_| {
            move |x: &Vec3, r: &Vec3, n: &Vec3| {
                let mut out = [0.0; 12];
                out[..9].copy_from_slice(&single_layer_entries_r(r));
                out[9..].copy_from_slice(&dl_times(r, n, &datum(x)));
                out
            }
        },
        |_, v| v,
    )?;
    let n = colloc.len();
    let mut w = BlockWriter::new(n, disc.dof());
    let mut d = DVector::zeros(3 * n);
    let mut c = DVector::zeros(3 * n);
    let scale = 1.0 / (4.0 * PI * eta);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            w.put(i, j, &e[..9], scale);
        }
        let s = sum_rows(row);
        let u = datum(&colloc.points[i].x);
        for a in 0..3 {
            d[3 * i + a] = -C_DL * s[9 + a];
            c[3 * i + a] = u[a];
        }
    }
    Ok(DirichletSystem { s: w.finish()?, c, d, tau: None, stats })
}

/// Neumann problem: unknown velocity coefficients `υ` from the traction
/// datum, with `(C - D) υ = -S`.
#[derive(Debug, Clone)]
pub struct NeumannSystem {
    pub cmat: DMatrix<f64>,
    pub svec: DVector<f64>,
    pub dmat: DMatrix<f64>,
    pub upsilon: Option<DVector<f64>>,
    pub stats: QuadStats,
}

impl NeumannSystem {
    pub fn solve(&mut self) -> Result<&DVector<f64>> {
        let m = &self.cmat - &self.dmat;
        let u = solve_dense(&m, &(-&self.svec))?;
        Ok(self.upsilon.insert(u))
    }
}

pub fn assemble_neumann(
    disc: &Discretization,
    colloc: &CollocationSet,
    rule: &QuadratureRule,
    traction: VectorDatum,
    eta: f64,
) -> Result<NeumannSystem> {
    let (rows, stats) = map_rows(
        disc,
        colloc,
        rule,
        &all_rows(colloc),
        |_| {
            move |x: &Vec3, r: &Vec3, n: &Vec3| {
                let mut out = [0.0; 12];
                out[..9].copy_from_slice(&double_layer_entries_r(r, n));
                let g = single_layer_entries_r(r);
                let t = traction(x);
                for a in 0..3 {
                    out[9 + a] = g[3 * a] * t.x + g[3 * a + 1] * t.y + g[3 * a + 2] * t.z;
                }
                out
            }
        },
        |_, v| v,
    )?;
    let n = colloc.len();
    let mut w = BlockWriter::new(n, disc.dof());
    let mut cmat = DMatrix::zeros(3 * n, 3 * disc.dof());
    let mut svec = DVector::zeros(3 * n);
    let scale = 1.0 / (4.0 * PI * eta);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            w.put(i, j, &e[..9], -C_DL);
        }
        let s = sum_rows(row);
        for a in 0..3 {
            svec[3 * i + a] = scale * s[9 + a];
        }
        let p = &colloc.points[i];
        for (j, b) in disc.basis_at(p.patch, p.uv)? {
            for a in 0..3 {
                cmat[(3 * i + a, 3 * j + a)] = b;
            }
        }
    }
    Ok(NeumannSystem { cmat, svec, dmat: w.finish()?, upsilon: None, stats })
}

/// Identity errors at the collocation points.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub e_sl: f64,
    pub e_dl: f64,
    /// `(point, e_sl, e_dl)` for every evaluated point.
    pub per_point: Vec<(usize, f64, f64)>,
    /// Mean quadrature points per support integral.
    pub mean_points: f64,
    pub stats: QuadStats,
}

/// Per-point errors of `∫ G n = 0` and `C_DL ∫ H 𝕣 = I`, each integral
/// assembled support by support through the partition of unity.
pub fn identity_errors(
    disc: &Discretization,
    colloc: &CollocationSet,
    rule: &QuadratureRule,
    rows: &[usize],
) -> Result<(Vec<(f64, f64)>, QuadStats)> {
    map_rows(
        disc,
        colloc,
        rule,
        rows,
        |_| {
            |_: &Vec3, r: &Vec3, n: &Vec3| {
                let g = single_layer_entries_r(r);
                let mut out = [0.0; 12];
                for a in 0..3 {
                    out[a] = g[3 * a] * n.x + g[3 * a + 1] * n.y + g[3 * a + 2] * n.z;
                }
                out[3..].copy_from_slice(&double_layer_entries_r(r, n));
                out
            }
        },
        |_, v| {
            let s = sum_rows(&v);
            let e_sl = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            let mut f = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let id = if a == b { 1.0 } else { 0.0 };
                    let e = C_DL * s[3 + 3 * a + b] - id;
                    f += e * e;
                }
            }
            (e_sl, f.sqrt())
        },
    )
}

/// Mean identity errors over all collocation points. With `orbits` only one
/// representative per symmetry orbit is integrated and weighted by the orbit
/// size.
pub fn verify_identities(
    disc: &Discretization,
    colloc: &CollocationSet,
    rule: &QuadratureRule,
    orbits: Option<&Orbits>,
) -> Result<IdentityReport> {
    let (rows, weights): (Vec<usize>, Vec<f64>) = match orbits {
        Some(o) => o.representatives.iter().zip(&o.sizes).map(|(&r, &s)| (r, s as f64)).unzip(),
        None => (all_rows(colloc), vec![1.0; colloc.len()]),
    };
    let (errs, stats) = identity_errors(disc, colloc, rule, &rows)?;
    let total: f64 = weights.iter().sum();
    let mut e_sl = 0.0;
    let mut e_dl = 0.0;
    for ((a, b), w) in errs.iter().zip(&weights) {
        e_sl += w * a;
        e_dl += w * b;
    }
    let per_point = rows.iter().zip(&errs).map(|(&i, &(a, b))| (i, a, b)).collect();
    Ok(IdentityReport {
        e_sl: e_sl / total,
        e_dl: e_dl / total,
        per_point,
        mean_points: stats.mean_points(),
        stats,
    })
}
