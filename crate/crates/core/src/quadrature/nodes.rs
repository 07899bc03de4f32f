use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::dd::{Dd, Scalar};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `P_n(z)` and `P_n'(z)` via the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// First-kind Chebyshev points with their barycentric weights, ascending.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    pub nodes: Vec<f64>,
    pub bary: Vec<f64>,
}

impl ChebyshevGrid {
    pub fn new(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut bary = Vec::with_capacity(n);
        for k in 0..n {
            // reversed index so nodes ascend
            let i = n - 1 - k;
            let theta = (2 * i + 1) as f64 * PI / (2 * n) as f64;
            nodes.push(theta.cos());
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            bary.push(sign * theta.sin());
        }
        Self { nodes, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric weights `1/Π_{j≠i}(x_i - x_j)` of the stored (rounded)
    /// nodes, in double-double precision.
    pub fn exact_bary(&self) -> Vec<Dd> {
        let n = self.len();
        // scaled by 2^(n-1)/n to stay near unit size
        let scale = Dd::from_f64(2f64.powi(n as i32 - 1) / n as f64);
        (0..n)
            .map(|i| {
                let xi = Dd::new(self.nodes[i]);
                let mut prod = Dd::new(1.0);
                for j in (0..n).filter(|&j| j != i) {
                    prod = prod * (xi - Dd::new(self.nodes[j]));
                }
                Dd::new(1.0) / (prod * scale)
            })
            .collect()
    }

    /// Lagrange basis values at `x` from precomputed weights (see
    /// [`Self::exact_bary`]), in double-double precision.
    pub fn lagrange_precise(&self, bary: &[Dd], x: Dd, out: &mut [Dd]) {
        if let Some(hit) = self.nodes.iter().position(|&s| Dd::new(s) == x) {
            out.iter_mut().for_each(|v| *v = Dd::zero());
            out[hit] = Dd::new(1.0);
            return;
        }
        let mut denom = Dd::zero();
        for (i, (&s, &b)) in self.nodes.iter().zip(bary).enumerate() {
            let t = b / (x - Dd::new(s));
            out[i] = t;
            denom += t;
        }
        out.iter_mut().for_each(|v| *v = *v / denom);
    }

    /// Lagrange basis values `ℓ_i(x)` written to `out`.
    pub fn lagrange(&self, x: f64, out: &mut [f64]) {
        if let Some(hit) = self.nodes.iter().position(|&s| s == x) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[hit] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (i, (&s, &b)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let t = b / (x - s);
            out[i] = t;
            denom += t;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }
}

/// Node-count policy for the support-wise rules.
///
/// The interpolation degree in a direction is
/// `2d + 3 + N_h * N_d + extra(α)` with `N_h = ⌈log2 ℓ⌉`, `ℓ = max(1, log2(1/h))`,
/// `N_d = ⌈log2(d + 2)⌉` and `extra(α) = min(extra_max, round(slope * (1 - α)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePolicy {
    pub base_degree: [usize; 2],
    pub mesh_bonus: [usize; 2],
    pub degree_bonus: [usize; 2],
    pub alpha_extra_max: usize,
    pub extra_slope: f64,
}

/// Default slope of the α-dependent degree increment.
pub const EXTRA_SLOPE: f64 = 150.0;

impl NodePolicy {
    /// Policy for spline degrees `d` and largest knot spans `h` per direction.
    pub fn new(d: [usize; 2], h: [f64; 2], alpha_extra_max: usize) -> Result<Self> {
        let mut mesh_bonus = [0; 2];
        let mut degree_bonus = [0; 2];
        for k in 0..2 {
            if !(h[k] > 0.0 && h[k] <= 1.0) {
                return Err(Error::Parameter(format!("mesh size {} outside (0, 1]", h[k])));
            }
            let ell = (1.0 / h[k]).log2().max(1.0);
            mesh_bonus[k] = ell.log2().ceil() as usize;
            degree_bonus[k] = ((d[k] + 2) as f64).log2().ceil() as usize;
        }
        Ok(Self {
            base_degree: [2 * d[0] + 3, 2 * d[1] + 3],
            mesh_bonus,
            degree_bonus,
            alpha_extra_max,
            extra_slope: EXTRA_SLOPE,
        })
    }

    pub fn with_extra_slope(mut self, slope: f64) -> Self {
        self.extra_slope = slope;
        self
    }

    pub fn extra(&self, alpha: f64) -> usize {
        let a = alpha.clamp(0.0, 1.0);
        ((self.extra_slope * (1.0 - a)).round() as usize).min(self.alpha_extra_max)
    }

    /// Chebyshev interpolation degree before the α increment.
    pub fn baseline_degree(&self, dir: usize) -> usize {
        self.base_degree[dir] + self.mesh_bonus[dir] * self.degree_bonus[dir]
    }

    pub fn interpolation_degree(&self, dir: usize, alpha: f64) -> usize {
        self.baseline_degree(dir) + self.extra(alpha)
    }

    /// Nodes per direction for a non-singular integral at parameter `α`.
    pub fn node_count(&self, alpha: f64) -> (usize, usize) {
        (self.interpolation_degree(0, alpha) + 1, self.interpolation_degree(1, alpha) + 1)
    }

    /// Gauss–Legendre nodes per direction on Duffy triangles.
    pub fn duffy_nodes(&self) -> (usize, usize) {
        (2 * self.baseline_degree(0), 2 * self.baseline_degree(1))
    }

    /// Smallest per-direction node count the policy can produce.
    pub fn minimal_nodes(&self) -> usize {
        self.baseline_degree(0).min(self.baseline_degree(1)) + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_five_points() {
        let (x, w) = gauss_legendre(5);
        assert!((x[4] - 0.906_179_845_938_664).abs() < 1e-15);
        assert!((x[3] - 0.538_469_310_105_683).abs() < 1e-15);
        assert_eq!(x[2], 0.0);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-15);
        assert!((w[0] - 0.236_926_885_056_189).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..60 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn chebyshev_interpolates_polynomials() {
        let g = ChebyshevGrid::new(7);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        let f = |x: f64| 1.0 - 2.0 * x + x.powi(6);
        let mut l = vec![0.0; 7];
        for &x in &[-1.0, -0.33, 0.0, 0.5, 1.0, g.nodes[3]] {
            g.lagrange(x, &mut l);
            let v: f64 = g.nodes.iter().zip(&l).map(|(s, l)| f(*s) * l).sum();
            assert!((v - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn node_policy_examples() {
        let p = NodePolicy::new([2, 2], [0.1, 0.1], 30).unwrap();
        assert_eq!(p.baseline_degree(0), 11);
        assert_eq!(p.node_count(1.0), (12, 12));
        assert_eq!(p.node_count(0.0), (42, 42));
        assert_eq!(p.duffy_nodes(), (22, 22));
        let p0 = NodePolicy::new([0, 0], [1.0, 1.0], 30).unwrap();
        assert_eq!(p0.baseline_degree(0), 3);
        assert_eq!(p0.node_count(1.0), (4, 4));
    }

    #[test]
    fn extra_is_monotone() {
        let p = NodePolicy::new([1, 3], [0.25, 0.125], 30).unwrap();
        let mut last = usize::MAX;
        for i in 0..=1000 {
            let e = p.extra(i as f64 / 1000.0);
            assert!(e <= last);
            last = e;
        }
        assert_eq!(p.extra(1.0), 0);
        assert_eq!(p.extra(0.0), 30);
        assert_eq!(p.extra(0.9), 15);
        assert_eq!(p.extra(0.999), 0);
    }
}
