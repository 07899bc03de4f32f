use super::dct::{AlphaRule, DctMap};
use super::nodes::{gauss_legendre, ChebyshevGrid, NodePolicy};
use crate::error::Result;
use crate::geometry::{closest_point, ClosestPoint, MultipatchSurface, ScanGrid, Vec3};
use crate::spline::dd::{Dd, Scalar};
use crate::spline::{one_basis, BSplineSupport, ProductSplineSpace, Rect};

/// Per-direction data of the non-singular rule on one region.
#[derive(Debug, Clone)]
pub struct DirectionRule {
    pub map: DctMap,
    pub interval: (f64, f64),
    pub cheb: ChebyshevGrid,
    pub space: ProductSplineSpace,
}

impl DirectionRule {
    /// Builds the DCT map, Chebyshev grid and product-spline space for one
    /// direction of `region`.
    pub fn new(local: &[f64], interval: (f64, f64), y_param: f64, alpha: f64, degree: usize) -> Result<Self> {
        let (a, b) = interval;
        let z = ((2.0 * y_param - a - b) / (b - a)).clamp(-1.0, 1.0);
        let map = DctMap::new(z, alpha)?;
        let space = ProductSplineSpace::for_interval(local, interval, degree, |t| map.inverse(t))?;
        Ok(Self { map, interval, cheb: ChebyshevGrid::new(degree + 1), space })
    }

    /// Parametric coordinate of the transformed abscissa `s`.
    pub fn param(&self, s: f64) -> f64 {
        let (a, b) = self.interval;
        let t = self.map.eval(s);
        (0.5 * ((b - a) * t + a + b)).clamp(a, b)
    }

    /// `dx/ds` of the combined DCT and affine map.
    pub fn jacobian(&self, s: f64) -> f64 {
        0.5 * (self.interval.1 - self.interval.0) * self.map.derivative(s)
    }

    /// B-spline factor at the transformed abscissa `s`.
    pub fn bspline(&self, local: &[f64], s: f64) -> f64 {
        let x = self.param(s);
        one_basis(local, x, x < self.interval.1)
    }

    /// Weights `W_i` with `∫ p(s) B(x(s)) ds = Σ_i p(s_i) W_i` for every
    /// polynomial `p` of the Chebyshev interpolation degree.
    ///
    /// Up to interpolation degree [`PRECISE_DEGREE`] they come from Greville
    /// interpolation in the product-spline space followed by exact B-spline
    /// integration. Above it that collocation is too badly conditioned in
    /// f64, and the same exact integral of the product spline is taken with
    /// per-piece Gauss–Legendre rules.
    pub fn node_weights(&self, local: &[f64]) -> Result<Vec<f64>> {
        if self.cheb.len() > PRECISE_DEGREE + 1 {
            Ok(self.node_weights_piecewise(local))
        } else {
            Ok(self.node_weights_greville(local))
        }
    }

    /// Greville route in f64.
    pub fn node_weights_greville(&self, local: &[f64]) -> Vec<f64> {
        let gw = self.space.greville_weights();
        let n = self.cheb.len();
        let mut out = vec![0.0; n];
        let mut l = vec![0.0; n];
        for (&g, &w) in self.space.greville().iter().zip(&gw) {
            let bw = w * self.bspline(local, g);
            if bw == 0.0 {
                continue;
            }
            self.cheb.lagrange(g, &mut l);
            for (o, li) in out.iter_mut().zip(&l) {
                *o += bw * li;
            }
        }
        out
    }

    /// Same weights from Gauss–Legendre rules on the pieces of the product
    /// spline, each exact for its degree.
    pub fn node_weights_piecewise(&self, local: &[f64]) -> Vec<f64> {
        let (x, w) = gauss_legendre(self.space.degree() / 2 + 1);
        let n = self.cheb.len();
        let mut out = vec![0.0; n];
        let mut l = vec![0.0; n];
        for piece in self.space.knots().breakpoints().windows(2) {
            let (a, b) = (piece[0].0, piece[1].0);
            for (xi, wi) in x.iter().zip(&w) {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let bw = 0.5 * (b - a) * wi * self.bspline(local, s);
                if bw == 0.0 {
                    continue;
                }
                self.cheb.lagrange(s, &mut l);
                for (o, li) in out.iter_mut().zip(&l) {
                    *o += bw * li;
                }
            }
        }
        out
    }

    /// Greville route in double-double precision. Accurate up to product
    /// degree [`GREVILLE_MAX_DEGREE`]; used to cross-check the other routes.
    pub fn node_weights_greville_precise(&self, local: &[f64]) -> Result<Vec<f64>> {
        let gw = self.space.greville_weights_precise()?;
        let gs = self.space.greville_precise();
        let bary = self.cheb.exact_bary();
        let n = self.cheb.len();
        let (a, b) = (Dd::new(self.interval.0), Dd::new(self.interval.1));
        let half = Dd::new(0.5);
        let mut out = vec![Dd::zero(); n];
        let mut l = vec![Dd::zero(); n];
        for (&g, &w) in gs.iter().zip(&gw) {
            let mut x = half * ((b - a) * self.map.eval_in(g) + a + b);
            if x < a {
                x = a;
            } else if x > b {
                x = b;
            }
            let bw = w * one_basis(local, x, x < b);
            if bw == Dd::zero() {
                continue;
            }
            self.cheb.lagrange_precise(&bary, g, &mut l);
            for (o, li) in out.iter_mut().zip(&l) {
                *o += bw * *li;
            }
        }
        Ok(out.into_iter().map(|v| v.to_f64()).collect())
    }
}

/// Largest Chebyshev interpolation degree served by the f64 Greville route,
/// which stays within about 1e-11 of the exact weights up to here.
pub const PRECISE_DEGREE: usize = 17;

/// Product-spline degree above which Greville collocation is too badly
/// conditioned even in double-double precision.
pub const GREVILLE_MAX_DEGREE: usize = 48;

/// Outcome of one non-singular integral.
#[derive(Debug, Clone, Copy)]
pub struct NonsingularInfo {
    pub nodes: (usize, usize),
    pub alpha: f64,
    pub delta: f64,
}

/// Both directional rules for `region` of `support` seen from `y`.
pub fn region_rules(
    support: &BSplineSupport,
    region: Rect,
    cp: &ClosestPoint,
    rule: &AlphaRule,
    policy: &NodePolicy,
) -> Result<([DirectionRule; 2], NonsingularInfo)> {
    let alpha = rule.alpha(cp.delta);
    let (uc, vc) = region.clamp(cp.uv.0, cp.uv.1);
    let c0 = policy.interpolation_degree(0, alpha);
    let c1 = policy.interpolation_degree(1, alpha);
    let r0 = DirectionRule::new(&support.local_u, (region.u0, region.u1), uc, alpha, c0)?;
    let r1 = DirectionRule::new(&support.local_v, (region.v0, region.v1), vc, alpha, c1)?;
    Ok(([r0, r1], NonsingularInfo { nodes: (c0 + 1, c1 + 1), alpha, delta: cp.delta }))
}

/// Values `K̃(s_i, t_j)` (kernel times surface measure times map Jacobians)
/// on the Chebyshev grid, stored with `i` fastest.
fn kernel_grid<const N: usize>(
    surface: &MultipatchSurface,
    patch: usize,
    rules: &[DirectionRule; 2],
    y: &Vec3,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
) -> Vec<[f64; N]> {
    let p = &surface.patches[patch];
    let s = &rules[0].cheb.nodes;
    let t = &rules[1].cheb.nodes;
    let bu: Vec<_> = s.iter().map(|&si| p.basis(0, rules[0].param(si), 1)).collect();
    let bv: Vec<_> = t.iter().map(|&tj| p.basis(1, rules[1].param(tj), 1)).collect();
    let ju: Vec<f64> = s.iter().map(|&si| rules[0].jacobian(si)).collect();
    let jv: Vec<f64> = t.iter().map(|&tj| rules[1].jacobian(tj)).collect();
    let mut out = Vec::with_capacity(s.len() * t.len());
    for (b_v, jvj) in bv.iter().zip(&jv) {
        for (b_u, jui) in bu.iter().zip(&ju) {
            let e = p.eval_with(b_u, b_v);
            let c = e.du.cross(&e.dv);
            let m = c.norm();
            let n = c / m;
            let mut k = kernel(&e.x, &(e.x - y), &n);
            let f = m * jui * jvj;
            k.iter_mut().for_each(|v| *v *= f);
            out.push(k);
        }
    }
    out
}

/// Non-singular integral of `K(F(x̂), ·) B(x̂) J(x̂)` over `region` of
/// `support`, with the closest point already known.
pub fn integrate_region<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    region: Rect,
    cp: &ClosestPoint,
    y: &Vec3,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    policy: &NodePolicy,
    rule: &AlphaRule,
) -> Result<([f64; N], NonsingularInfo)> {
    let (rules, info) = region_rules(support, region, cp, rule, policy)?;
    let w0 = rules[0].node_weights(&support.local_u)?;
    let w1 = rules[1].node_weights(&support.local_v)?;
    let grid = kernel_grid(surface, support.patch, &rules, y, kernel);
    let n0 = w0.len();
    let mut acc = [0.0; N];
    for (j, wj) in w1.iter().enumerate() {
        if *wj == 0.0 {
            continue;
        }
        let mut row = [0.0; N];
        for (i, wi) in w0.iter().enumerate() {
            let k = &grid[i + n0 * j];
            for c in 0..N {
                row[c] += wi * k[c];
            }
        }
        for c in 0..N {
            acc[c] += wj * row[c];
        }
    }
    Ok((acc, info))
}

/// Non-singular integral over the whole support, computing the closest point.
#[allow(clippy::too_many_arguments)]
pub fn integrate_nonsingular<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    y: &Vec3,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    policy: &NodePolicy,
    rule: &AlphaRule,
    grid: Option<&ScanGrid>,
) -> Result<([f64; N], NonsingularInfo)> {
    let cp = closest_point(&surface.patches[support.patch], support.rect, y, grid);
    integrate_region(surface, support, support.rect, &cp, y, kernel, policy, rule)
}

/// Same integral computed the long way: the kernel interpolant is formed
/// explicitly, multiplied by the B-spline, interpolated at the product-spline
/// Greville abscissae and integrated exactly, one direction after the other.
pub fn integrate_region_explicit<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    region: Rect,
    cp: &ClosestPoint,
    y: &Vec3,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    policy: &NodePolicy,
    rule: &AlphaRule,
) -> Result<[f64; N]> {
    let (rules, _) = region_rules(support, region, cp, rule, policy)?;
    let grid = kernel_grid(surface, support.patch, &rules, y, kernel);
    let n0 = rules[0].cheb.len();
    let n1 = rules[1].cheb.len();
    let interp = |cheb: &ChebyshevGrid, values: &dyn Fn(usize) -> f64, s: f64| {
        let mut l = vec![0.0; cheb.len()];
        cheb.lagrange(s, &mut l);
        l.iter().enumerate().map(|(i, li)| values(i) * li).sum::<f64>()
    };
    // inner integrals along u for each v-node and component
    let mut inner = vec![[0.0; N]; n1];
    for (j, inner_j) in inner.iter_mut().enumerate() {
        for (c, slot) in inner_j.iter_mut().enumerate() {
            let values = |i: usize| grid[i + n0 * j][c];
            let coeffs = rules[0].space.interpolate_at_greville(|s| {
                interp(&rules[0].cheb, &values, s) * rules[0].bspline(&support.local_u, s)
            });
            *slot = rules[0].space.integrate(&coeffs);
        }
    }
    let mut out = [0.0; N];
    for (c, slot) in out.iter_mut().enumerate() {
        let values = |j: usize| inner[j][c];
        let coeffs = rules[1].space.interpolate_at_greville(|t| {
            interp(&rules[1].cheb, &values, t) * rules[1].bspline(&support.local_v, t)
        });
        *slot = rules[1].space.integrate(&coeffs);
    }
    Ok(out)
}
