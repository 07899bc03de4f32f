use super::nurbs::{NurbsPatch, Vec3};
use crate::spline::Rect;

/// Coarse scan resolution per direction.
pub const SCAN: usize = 16;
const FALLBACK_SCAN: usize = 64;
const TOL: f64 = 1e-10;

/// Result of a closest-point query on a parametric rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub uv: (f64, f64),
    pub x: Vec3,
    pub delta: f64,
}

/// Physical points of a `SCAN x SCAN` grid over a rectangle, reusable across
/// queries against the same support.
#[derive(Debug, Clone)]
pub struct ScanGrid {
    pub rect: Rect,
    pub points: Vec<Vec3>,
}

impl ScanGrid {
    pub fn new(patch: &NurbsPatch, rect: Rect) -> Self {
        Self { rect, points: scan_points(patch, rect, SCAN) }
    }
}

fn grid_coord(a: f64, b: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        b
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

fn scan_points(patch: &NurbsPatch, rect: Rect, n: usize) -> Vec<Vec3> {
    let bu: Vec<_> = (0..n).map(|i| patch.basis(0, grid_coord(rect.u0, rect.u1, i, n), 0)).collect();
    let bv: Vec<_> = (0..n).map(|j| patch.basis(1, grid_coord(rect.v0, rect.v1, j, n), 0)).collect();
    let mut pts = Vec::with_capacity(n * n);
    // u index runs slowest so that ties resolve lexicographically in (u, v)
    for b_u in &bu {
        for b_v in &bv {
            pts.push(patch.eval_with(b_u, b_v).x);
        }
    }
    pts
}

fn best_of(points: &[Vec3], y: &Vec3) -> usize {
    let mut best = 0;
    let mut dmin = f64::INFINITY;
    for (k, p) in points.iter().enumerate() {
        let d = (p - y).norm_squared();
        // distances equal up to round-off count as ties and keep the earlier index
        if d < dmin * (1.0 - 1e-12) {
            dmin = d;
            best = k;
        }
    }
    best
}

/// Closest point of `patch` restricted to `rect` to the physical point `y`.
pub fn closest_point(patch: &NurbsPatch, rect: Rect, y: &Vec3, grid: Option<&ScanGrid>) -> ClosestPoint {
    let owned;
    let pts = match grid {
        Some(g) if g.rect == rect => &g.points,
        _ => {
            owned = scan_points(patch, rect, SCAN);
            &owned
        }
    };
    let k = best_of(pts, y);
    let start = (grid_coord(rect.u0, rect.u1, k / SCAN, SCAN), grid_coord(rect.v0, rect.v1, k % SCAN, SCAN));
    let scan_best = pts[k];
    if let Some(cp) = newton(patch, rect, y, start) {
        if (cp.x - y).norm() <= (scan_best - y).norm() {
            return cp;
        }
    }
    let pts = scan_points(patch, rect, FALLBACK_SCAN);
    let k = best_of(&pts, y);
    let n = FALLBACK_SCAN;
    let start = (grid_coord(rect.u0, rect.u1, k / n, n), grid_coord(rect.v0, rect.v1, k % n, n));
    let fallback = ClosestPoint { uv: start, x: pts[k], delta: (pts[k] - y).norm() };
    match newton(patch, rect, y, start) {
        Some(cp) if cp.delta <= fallback.delta => cp,
        _ => fallback,
    }
}

/// Projected, damped Newton iteration on `0.5 |F(u,v) - y|^2` over `rect`.
/// Returns `None` when the stationarity test is not met.
fn newton(patch: &NurbsPatch, rect: Rect, y: &Vec3, start: (f64, f64)) -> Option<ClosestPoint> {
    let (mut u, mut v) = start;
    let (mut p, mut h) = patch.eval2(u, v);
    let mut f = 0.5 * (p.x - y).norm_squared();
    let scale_u = rect.u1 - rect.u0;
    let scale_v = rect.v1 - rect.v0;
    for _ in 0..60 {
        let r = p.x - y;
        let gu = r.dot(&p.du);
        let gv = r.dot(&p.dv);
        let free_u = !((u <= rect.u0 && gu > 0.0) || (u >= rect.u1 && gu < 0.0));
        let free_v = !((v <= rect.v0 && gv > 0.0) || (v >= rect.v1 && gv < 0.0));
        let pg_u = if free_u { gu } else { 0.0 };
        let pg_v = if free_v { gv } else { 0.0 };
        let gnorm = (pg_u * pg_u + pg_v * pg_v).sqrt();
        let tscale = p.du.norm().max(p.dv.norm()).max(1e-300);
        if gnorm <= TOL * tscale * (1.0 + r.norm()) {
            return Some(ClosestPoint { uv: (u, v), x: p.x, delta: r.norm() });
        }
        let mut huu = p.du.dot(&p.du) + r.dot(&h.duu);
        let huv = p.du.dot(&p.dv) + r.dot(&h.duv);
        let mut hvv = p.dv.dot(&p.dv) + r.dot(&h.dvv);
        let (mut du, mut dv);
        let det = huu * hvv - huv * huv;
        if free_u && free_v && huu > 0.0 && det > 1e-14 * huu * hvv.abs() {
            du = -(hvv * gu - huv * gv) / det;
            dv = -(huu * gv - huv * gu) / det;
        } else {
            // Gauss–Newton fallback, one coordinate at a time when constrained
            huu = p.du.dot(&p.du);
            hvv = p.dv.dot(&p.dv);
            du = if free_u { -gu / huu } else { 0.0 };
            dv = if free_v { -gv / hvv } else { 0.0 };
        }
        if !free_u {
            du = 0.0;
        }
        if !free_v {
            dv = 0.0;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let nu = (u + t * du).clamp(rect.u0, rect.u1);
            let nv = (v + t * dv).clamp(rect.v0, rect.v1);
            let (np, nh) = patch.eval2(nu, nv);
            let nf = 0.5 * (np.x - y).norm_squared();
            if nf <= f {
                let moved = ((nu - u) / scale_u).abs() + ((nv - v) / scale_v).abs();
                u = nu;
                v = nv;
                p = np;
                h = nh;
                f = nf;
                accepted = true;
                if moved < 1e-15 {
                    return Some(ClosestPoint { uv: (u, v), x: p.x, delta: (p.x - y).norm() });
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no descent possible at working precision
            return Some(ClosestPoint { uv: (u, v), x: p.x, delta: (p.x - y).norm() });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builders::unit_sphere;

    #[test]
    fn center_of_sphere_is_at_unit_distance() {
        let s = unit_sphere().unwrap();
        let rect = Rect::new(0.25, 0.5, 0.0, 0.75);
        let cp = closest_point(&s.patches[2], rect, &Vec3::zeros(), None);
        assert!((cp.delta - 1.0).abs() < 1e-13);
        assert_eq!(cp.uv, (0.25, 0.0));
    }

    #[test]
    fn point_on_support_has_zero_distance() {
        let s = unit_sphere().unwrap();
        let rect = Rect::new(0.0, 0.5, 0.25, 0.75);
        let y = s.point(0, 0.3, 0.4);
        let cp = closest_point(&s.patches[0], rect, &y, None);
        assert!(cp.delta < 1e-12);
        assert!((cp.uv.0 - 0.3).abs() < 1e-8 && (cp.uv.1 - 0.4).abs() < 1e-8);
    }

    #[test]
    fn external_point_projects_radially() {
        let s = unit_sphere().unwrap();
        let rect = Rect::new(0.0, 1.0, 0.0, 1.0);
        let x = s.point(0, 0.6, 0.35);
        let y = x * 1.7;
        let cp = closest_point(&s.patches[0], rect, &y, None);
        assert!((cp.delta - 0.7).abs() < 1e-12);
        assert!((cp.x - x).norm() < 1e-6);
    }
}
