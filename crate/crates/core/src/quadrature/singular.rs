use super::dct::AlphaRule;
use super::nodes::{gauss_legendre, NodePolicy};
use super::nonsingular::{integrate_region, NonsingularInfo};
use crate::error::Result;
use crate::geometry::{closest_point, MultipatchSurface, Vec3};
use crate::spline::dd::Scalar;
use crate::spline::{BSplineSupport, Rect};

/// Parametric point `(u, v)`.
pub type Uv = (f64, f64);

/// Split of a support around the parametric image `ŷ` of a singular point:
/// the element block `R_D` holding `ŷ`, up to four ring rectangles covering
/// the rest of the support, and the triangles of `R_D` with apex `ŷ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPartition {
    pub y_hat: Uv,
    pub r_d: Rect,
    pub rings: Vec<Rect>,
    /// Triangles `[ŷ, P, Q]`; the edge `PQ` is axis-aligned.
    pub triangles: Vec<[Uv; 3]>,
}

/// Interval of `R_D` in one direction and whether `ŷ` sits on an interior
/// break of it. `ŷ` is snapped to a breakpoint when it is within round-off.
fn rd_interval(breaks: &[f64], y: f64) -> (f64, f64, f64, bool) {
    let k = breaks.len() - 1;
    let tol = 1e-12 * (breaks[k] - breaks[0]);
    if let Some(i) = breaks.iter().position(|&b| (b - y).abs() <= tol) {
        let y = breaks[i];
        return if i == 0 {
            (breaks[0], breaks[1], y, false)
        } else if i == k {
            (breaks[k - 1], breaks[k], y, false)
        } else {
            (breaks[i - 1], breaks[i + 1], y, true)
        };
    }
    let i = breaks.partition_point(|&b| b <= y).clamp(1, k);
    (breaks[i - 1], breaks[i], y, false)
}

/// Builds the partition of `support` around `y_hat`.
pub fn partition_singular_support(support: &BSplineSupport, y_hat: Uv) -> SingularPartition {
    let (y_hat_u, y_hat_v) = support.rect.clamp(y_hat.0, y_hat.1);
    let (a1, b1, p1, split_u) = rd_interval(&support.breakpoints(0), y_hat_u);
    let (a2, b2, p2, split_v) = rd_interval(&support.breakpoints(1), y_hat_v);
    let r_d = Rect::new(a1, b1, a2, b2);
    let s = support.rect;

    let candidates = [
        Rect::new(b1, s.u1, a2, s.v1),
        Rect::new(s.u0, b1, b2, s.v1),
        Rect::new(s.u0, a1, s.v0, b2),
        Rect::new(a1, s.u1, s.v0, a2),
    ];
    let rings = candidates.into_iter().filter(|r| !r.is_degenerate()).collect();

    // boundary of R_D, anticlockwise from the lower-left corner, with split
    // points where a mesh line through ŷ meets it and at ŷ itself
    let inside_u = a1 < p1 && p1 < b1;
    let inside_v = a2 < p2 && p2 < b2;
    let split_bottom = split_u || (p2 == a2 && inside_u);
    let split_top = split_u || (p2 == b2 && inside_u);
    let split_right = split_v || (p1 == b1 && inside_v);
    let split_left = split_v || (p1 == a1 && inside_v);
    let mut poly: Vec<Uv> = vec![(a1, a2)];
    if split_bottom {
        poly.push((p1, a2));
    }
    poly.push((b1, a2));
    if split_right {
        poly.push((b1, p2));
    }
    poly.push((b1, b2));
    if split_top {
        poly.push((p1, b2));
    }
    poly.push((a1, b2));
    if split_left {
        poly.push((a1, p2));
    }
    let area_tol = 1e-14 * s.area();
    let apex = (p1, p2);
    let mut triangles = Vec::new();
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        if triangle_area(apex, p, q) > area_tol {
            triangles.push([apex, p, q]);
        }
    }
    SingularPartition { y_hat: apex, r_d, rings, triangles }
}

pub fn triangle_area(a: Uv, b: Uv, c: Uv) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs()
}

/// Slope breakpoints for the angular direction of a Duffy triangle. The
/// distance to the apex behaves like `sqrt(a + 2bs + cs²)` in the slope `s`,
/// with complex roots `m ± iw`; `[tp, tq]` is cut at `m, m ± w, m ± 2w,
/// m ± 4w, ...` so that every piece stays well separated from them.
fn slope_pieces(tp: f64, tq: f64, m: f64, w: f64) -> Vec<f64> {
    let (lo, hi) = if tp <= tq { (tp, tq) } else { (tq, tp) };
    let mut cuts = vec![lo];
    let mut push = |c: f64| {
        if c > lo && c < hi {
            cuts.push(c);
        }
    };
    push(m);
    let reach = (lo - m).abs().max((hi - m).abs());
    let mut step = w;
    while step < reach {
        push(m + step);
        push(m - step);
        step *= 2.0;
    }
    cuts.push(hi);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts
}

/// Duffy-transformed Gauss–Legendre rule on triangle `[ŷ, P, Q]`, applied to
/// `K(F(x̂), y) B(x̂) J(x̂)`. Returns the value and the number of points used.
pub fn integrate_duffy_triangle<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    tri: &[Uv; 3],
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    nodes: (usize, usize),
) -> ([f64; N], usize) {
    let mut out = [0.0; N];
    let [apex, p, q] = *tri;
    // choose the coordinate running from the apex to the base
    let vertical_base = p.0 == q.0;
    let (y1, y2) = if vertical_base { apex } else { (apex.1, apex.0) };
    let (c, t_p, t_q) = if vertical_base {
        (p.0, p.1, q.1)
    } else {
        (p.1, p.0, q.0)
    };
    let h = c - y1;
    if h == 0.0 {
        return (out, 0);
    }
    let patch = &surface.patches[support.patch];
    // metric at the apex in (x1, x2) ordering
    let at = patch.eval(apex.0, apex.1);
    // separations are formed in double-double: near the apex `r·n ~ |r|²`
    // and an f64 offset of either end point would dominate it
    let y_dd = patch.point_dd(apex.0, apex.1);
    let (d1, d2) = if vertical_base { (at.du, at.dv) } else { (at.dv, at.du) };
    let (g11, g12, g22) = (d1.dot(&d1), d1.dot(&d2), d2.dot(&d2));
    let m = -g12 / g22;
    let w = (g11 * g22 - g12 * g12).max(0.0).sqrt() / g22;
    let pieces = slope_pieces((t_p - y2) / h, (t_q - y2) / h, m, w);
    let (xr, wr) = gauss_legendre(nodes.0);
    let (xt, wt) = gauss_legendre(nodes.1);
    for piece in pieces.windows(2) {
        let (tp, tq) = (piece[0], piece[1]);
        for (&r, &wr) in xr.iter().zip(&wr) {
            let rho = 0.5 * (r + 1.0);
            let x1 = y1 + rho * h;
            let jac_r = 0.5 * (x1 - y1).abs() * h.abs();
            for (&t, &wt) in xt.iter().zip(&wt) {
                let slope = tp + 0.5 * (t + 1.0) * (tq - tp);
                let x2 = y2 + (x1 - y1) * slope;
                let (u, v) = if vertical_base { (x1, x2) } else { (x2, x1) };
                let b = support.eval_inside(u, v);
                if b == 0.0 {
                    continue;
                }
                let e = patch.eval(u, v);
                let cr = e.du.cross(&e.dv);
                let m = cr.norm();
                let x_dd = patch.point_dd(u, v);
                let r = Vec3::new((x_dd[0] - y_dd[0]).to_f64(), (x_dd[1] - y_dd[1]).to_f64(), (x_dd[2] - y_dd[2]).to_f64());
                let k = kernel(&e.x, &r, &(cr / m));
                let f = wr * wt * jac_r * 0.5 * (tq - tp) * b * m;
                for i in 0..N {
                    out[i] += f * k[i];
                }
            }
        }
    }
    (out, (pieces.len() - 1) * nodes.0 * nodes.1)
}

/// Outcome of one singular support integral.
#[derive(Debug, Clone)]
pub struct SingularInfo {
    pub triangles: usize,
    pub duffy_nodes: (usize, usize),
    pub rings: Vec<NonsingularInfo>,
    pub points: usize,
}

/// Weakly singular integral over `support` for `y = F(ŷ)`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_singular<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    y: &Vec3,
    y_hat: Uv,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    policy: &NodePolicy,
    rule: &AlphaRule,
    duffy_nodes: (usize, usize),
) -> Result<([f64; N], SingularInfo)> {
    let part = partition_singular_support(support, y_hat);
    let mut out = [0.0; N];
    let mut points = 0;
    for tri in &part.triangles {
        let (v, used) = integrate_duffy_triangle(surface, support, tri, kernel, duffy_nodes);
        for i in 0..N {
            out[i] += v[i];
        }
        points += used;
    }
    let mut rings = Vec::with_capacity(part.rings.len());
    for ring in &part.rings {
        let cp = closest_point(&surface.patches[support.patch], *ring, y, None);
        let (v, info) = integrate_region(surface, support, *ring, &cp, y, kernel, policy, rule)?;
        for i in 0..N {
            out[i] += v[i];
        }
        points += info.nodes.0 * info.nodes.1;
        rings.push(info);
    }
    Ok((out, SingularInfo { triangles: part.triangles.len(), duffy_nodes, rings, points }))
}
