#![allow(dead_code)]

use igabem::geometry::{MultipatchSurface, Vec3};
use igabem::quadrature::gauss_legendre;
use igabem::spline::{BSplineSupport, Rect};

/// Tensor Gauss–Legendre on `rect` with `n` points per direction.
pub fn gauss_rect<const N: usize>(f: &impl Fn(f64, f64) -> [f64; N], rect: Rect, n: usize) -> [f64; N] {
    let (x, w) = gauss_legendre(n);
    let (hu, hv) = (0.5 * (rect.u1 - rect.u0), 0.5 * (rect.v1 - rect.v0));
    let mut out = [0.0; N];
    for (xv, wv) in x.iter().zip(&w) {
        for (xu, wu) in x.iter().zip(&w) {
            let u = rect.u0 + hu * (xu + 1.0);
            let v = rect.v0 + hv * (xv + 1.0);
            let val = f(u, v);
            for c in 0..N {
                out[c] += wu * wv * hu * hv * val[c];
            }
        }
    }
    out
}

/// Adaptive quadtree Gauss quadrature: a cell is accepted when the
/// `n`-point and `n+4`-point rules agree to `tol` (absolute).
pub fn adaptive_rect<const N: usize>(
    f: &impl Fn(f64, f64) -> [f64; N],
    rect: Rect,
    n: usize,
    tol: f64,
    depth: usize,
) -> [f64; N] {
    let a = gauss_rect(f, rect, n);
    let b = gauss_rect(f, rect, n + 4);
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if err <= tol || depth == 0 {
        return b;
    }
    let um = 0.5 * (rect.u0 + rect.u1);
    let vm = 0.5 * (rect.v0 + rect.v1);
    let mut out = [0.0; N];
    for r in [
        Rect::new(rect.u0, um, rect.v0, vm),
        Rect::new(um, rect.u1, rect.v0, vm),
        Rect::new(rect.u0, um, vm, rect.v1),
        Rect::new(um, rect.u1, vm, rect.v1),
    ] {
        let v = adaptive_rect(f, r, n, tol / 4.0, depth - 1);
        for c in 0..N {
            out[c] += v[c];
        }
    }
    out
}

/// Element rectangles of a support.
pub fn support_elements(support: &BSplineSupport) -> Vec<Rect> {
    let bu = support.breakpoints(0);
    let bv = support.breakpoints(1);
    let mut out = Vec::new();
    for v in bv.windows(2) {
        for u in bu.windows(2) {
            out.push(Rect::new(u[0], u[1], v[0], v[1]));
        }
    }
    out
}

/// Reference value of `∫ K(F(x̂)) B(x̂) J(x̂) dx̂` over a support by adaptive
/// element-wise Gauss quadrature, to about `rel` times the largest entry.
pub fn support_oracle<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    y: &Vec3,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    rel: f64,
) -> [f64; N] {
    let patch = &surface.patches[support.patch];
    let f = |u: f64, v: f64| {
        let e = patch.eval(u, v);
        let c = e.du.cross(&e.dv);
        let m = c.norm();
        let b = support.eval_inside(u, v);
        let mut k = kernel(&e.x, &(e.x - y), &(c / m));
        k.iter_mut().for_each(|x| *x *= m * b);
        k
    };
    let elements = support_elements(support);
    let mut scale = 0.0f64;
    for el in &elements {
        let v = gauss_rect(&f, *el, 24);
        scale = scale.max(v.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    let tol = rel * scale / elements.len() as f64;
    let mut out = [0.0; N];
    for el in elements {
        let v = adaptive_rect(&f, el, 12, tol, 10);
        for c in 0..N {
            out[c] += v[c];
        }
    }
    out
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Integral over `rect` of a function with a `1/r` singularity at the corner
/// `corner`, by geometric refinement towards that corner. The omitted corner
/// square contributes linearly in its side, so the last two levels are
/// extrapolated. Refinement stops early because `r·n` of nearby surface
/// points is dominated by round-off once `r` drops far below the element size.
pub fn corner_oracle<const N: usize>(f: &impl Fn(f64, f64) -> [f64; N], rect: Rect, corner: (f64, f64), n: usize) -> [f64; N] {
    let mut out = [0.0; N];
    let mut prev = [0.0; N];
    let (cu, cv) = corner;
    let fu = if (rect.u0 - cu).abs() < (rect.u1 - cu).abs() { rect.u1 } else { rect.u0 };
    let fv = if (rect.v0 - cv).abs() < (rect.v1 - cv).abs() { rect.v1 } else { rect.v0 };
    let mut s = 1.0;
    for _ in 0..14 {
        prev = out;
        let (u_far, v_far) = (cu + s * (fu - cu), cv + s * (fv - cv));
        let (u_mid, v_mid) = (cu + 0.5 * s * (fu - cu), cv + 0.5 * s * (fv - cv));
        let mk = |a: f64, b: f64, c: f64, d: f64| Rect::new(a.min(b), a.max(b), c.min(d), c.max(d));
        for r in [mk(u_mid, u_far, cv, v_mid), mk(cu, u_mid, v_mid, v_far), mk(u_mid, u_far, v_mid, v_far)] {
            if r.is_degenerate() {
                continue;
            }
            let v = gauss_rect(f, r, n);
            for c in 0..N {
                out[c] += v[c];
            }
        }
        s *= 0.5;
    }
    let mut extrapolated = [0.0; N];
    for c in 0..N {
        extrapolated[c] = 2.0 * out[c] - prev[c];
    }
    extrapolated
}

/// Reference value of a support integral whose kernel is singular at the
/// parametric point `y_hat`.
pub fn singular_oracle<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    y_hat: (f64, f64),
    y: &Vec3,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    rel: f64,
) -> [f64; N] {
    let patch = &surface.patches[support.patch];
    let f = |u: f64, v: f64| {
        let e = patch.eval(u, v);
        let c = e.du.cross(&e.dv);
        let m = c.norm();
        let b = support.eval_inside(u, v);
        let mut k = kernel(&e.x, &(e.x - y), &(c / m));
        k.iter_mut().for_each(|x| *x *= m * b);
        k
    };
    let elements = support_elements(support);
    let mut scale = 0.0f64;
    for el in &elements {
        let v = gauss_rect(&f, *el, 16);
        scale = scale.max(v.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    let tol = rel * scale / elements.len() as f64;
    let mut out = [0.0; N];
    for el in elements {
        let v = if el.contains(y_hat.0, y_hat.1) {
            let (cu, cv) = y_hat;
            let mut acc = [0.0; N];
            for (a, b) in [(el.u0, cu), (cu, el.u1)] {
                for (c, d) in [(el.v0, cv), (cv, el.v1)] {
                    let r = Rect::new(a, b, c, d);
                    if r.is_degenerate() {
                        continue;
                    }
                    let w = corner_oracle(&f, r, y_hat, 16);
                    for k in 0..N {
                        acc[k] += w[k];
                    }
                }
            }
            acc
        } else {
            adaptive_rect(&f, el, 12, tol, 10)
        };
        for c in 0..N {
            out[c] += v[c];
        }
    }
    out
}
